#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace wfbm {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Uniform grid t_i = i * tau / m, i = 0..N, commensurate with the delay tau.
class TimeGrid {
 public:
  TimeGrid(double tau, int steps_per_delay, double horizon);

  // Grid on [0, horizon] with `steps` cells (even) and tau = horizon / 2.  Used
  // by experiments that have no delay of their own.
  static TimeGrid over_horizon(double horizon, int steps);

  double tau() const noexcept { return tau_; }
  int steps_per_delay() const noexcept { return m_; }
  double horizon() const noexcept { return horizon_; }
  double dt() const noexcept { return dt_; }
  // Number of cells N; times() has N+1 entries.
  std::size_t size() const noexcept { return n_; }
  // Largest K0 with K0 * tau < T.
  int whole_delays() const noexcept { return k0_; }
  double time(std::size_t i) const noexcept { return static_cast<double>(i) * dt_; }
  std::vector<double> times() const;

  // Grid index of t, or -1 if t is not a grid point.
  long index_of(double t) const noexcept;

  std::uint64_t hash() const noexcept;

  bool operator==(const TimeGrid& o) const noexcept {
    return m_ == o.m_ && n_ == o.n_ && tau_ == o.tau_;
  }

 private:
  double tau_;
  int m_;
  double horizon_;
  double dt_;
  std::size_t n_;
  int k0_;
};

}  // namespace wfbm
