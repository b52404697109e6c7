#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "wfbm/grid.hpp"
#include "wfbm/kernel.hpp"

namespace wfbm {

struct GaussianFactor {
  TimeGrid grid;
  RowMatrix lower;          // N x N, lower * lower^T = M + jitter_used * I
  double jitter_used = 0.0;
};

// n_paths x (N+1) matrix of B(t_i); column 0 is B(0) = 0.
struct PathEnsemble {
  TimeGrid grid;
  RowMatrix paths;
  std::uint64_t seed = 0;

  std::size_t n_paths() const noexcept { return static_cast<std::size_t>(paths.rows()); }
};

namespace sampler {

// M[i][j] = R(t_{i+1}, t_{j+1}); t = 0 is excluded.
RowMatrix build_covariance(const TimeGrid& grid, const WfbmParams& p,
                           const QuadratureConfig& cfg = QuadratureConfig{});

// Cholesky factor.  On a non-positive pivot retries with jitter
// 1e-12 * trace / N, doubling up to 8 times.
GaussianFactor factorize(const RowMatrix& m, const TimeGrid& grid);

GaussianFactor factorize(const TimeGrid& grid, const WfbmParams& p,
                         const QuadratureConfig& cfg = QuadratureConfig{});

// paths = factor * Z, one NormalStream per path keyed by (seed, path index).
PathEnsemble sample(const GaussianFactor& factor, std::size_t n_paths, std::uint64_t seed,
                    unsigned workers = 0);

// Convenience: factorize + sample.
PathEnsemble sample(const TimeGrid& grid, const WfbmParams& p, std::size_t n_paths,
                    std::uint64_t seed, unsigned workers = 0);

// CSV `path_id,t,B`.
void write_paths_csv(std::ostream& os, const PathEnsemble& e, std::size_t max_paths);

// Little-endian flat file: "WFBM1", uint64 N, N*N row-major float64.
void save_factor(const std::filesystem::path& file, const GaussianFactor& f);
GaussianFactor load_factor(const std::filesystem::path& file, const TimeGrid& grid);
// Cache file name keyed by (a, b, grid hash).
std::string factor_cache_name(const WfbmParams& p, const TimeGrid& grid);

}  // namespace sampler
}  // namespace wfbm
