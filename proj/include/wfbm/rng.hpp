#pragma once

#include <array>
#include <cstdint>

namespace wfbm {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

// Stream of standard normals keyed by (seed, stream id).  Draw k depends only on
// (seed, stream, k), so results are independent of how streams are scheduled.
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint64_t stream) noexcept;

  double next() noexcept;
  double uniform() noexcept;  // in (0, 1)

 private:
  void refill() noexcept;

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<double, 2> cache_{};
  int cached_ = 0;
};

}  // namespace wfbm
