#pragma once

#include <span>
#include <string>
#include <vector>

#include "wfbm/kernel.hpp"
#include "wfbm/sampler.hpp"
#include "wfbm/stats.hpp"

namespace wfbm {

// w(j, i) = <1_{cell j}, 1_{cell i}>_H for the N cells of a grid, plus the
// per-cell sums the Wick corrections need.  Immutable once built.
class WeightTable {
 public:
  WeightTable(const TimeGrid& grid, const WfbmParams& p,
              const QuadratureConfig& cfg = QuadratureConfig{});

  const TimeGrid& grid() const noexcept { return grid_; }
  std::size_t cells() const noexcept { return n_; }
  double operator()(std::size_t j, std::size_t i) const noexcept { return w_[j * n_ + i]; }
  // Row i of the symmetric table.
  std::span<const double> row(std::size_t i) const noexcept { return {w_.data() + i * n_, n_}; }
  // sum_{j<i} w(j, i) = <1_[0, t_i], 1_{cell i}>_H
  double past(std::size_t i) const noexcept { return past_[i]; }
  // (R(t_{i+1}, t_{i+1}) - R(t_i, t_i)) / 2, the cell integral of int_0^s phi(u, s) du.
  double kernel_column(std::size_t i) const noexcept { return column_[i]; }
  // R(t_i, t_i), i = 0..N
  double variance(std::size_t i) const noexcept { return variance_[i]; }

 private:
  TimeGrid grid_;
  std::size_t n_;
  std::vector<double> w_;
  std::vector<double> past_;
  std::vector<double> column_;
  std::vector<double> variance_;
};

// u(t_i) per path, with D_{r_j} u(t_i) on the (r, t) grid.  An empty dvalues
// vector stands for a zero derivative (deterministic integrand).
struct WickIntegrand {
  RowMatrix values;                 // n_paths x (N+1); column N is unused
  std::vector<RowMatrix> dvalues;   // per path, (N+1) x (N+1): (j, i) = D_{r_j} u(t_i)
};

struct IntegralPath {
  RowMatrix partials;  // n_paths x (N+1), partials(:, 0) = 0
};

struct GaussianLaw {
  double mean = 0.0;
  double variance = 0.0;
};

struct DualityReport {
  EstimateCI estimate;  // E[B(t) delta(u)]
  double target = 0.0;  // <1_[0,t], u>_H
  double z = 0.0;
};

struct MaximalReport {
  double a = 0.0, b = 0.0, p = 0.0, horizon = 0.0;
  std::vector<int> refinements;
  std::vector<EstimateCI> lhs;     // E sup_t |int_0^t u dB|^p per refinement
  double rhs_core = 0.0;           // T^2 int |u|^p
  std::vector<double> ratios;
  double sup_ratio = 0.0;
  double spread = 0.0;             // (max - min) / mean of the ratios
  bool bounded = false;
};

namespace skorokhod {

// One step of the discrete divergence:
// delta(F 1_{cell i}) = F dB_i - <DF, 1_{cell i}>_H, with DF on cell j taken at r_j.
// du[j] = D_{r_j} F for j < i.
double wick_increment(double u_i, double dB_i, std::span<const double> du,
                      const WeightTable& w, std::size_t i) noexcept;

IntegralPath wick_sum(const WickIntegrand& u, const PathEnsemble& ensemble,
                      const WeightTable& w);
IntegralPath wick_sum(const WickIntegrand& u, const PathEnsemble& ensemble,
                      const WfbmParams& p);

// Values of a deterministic piecewise-constant u at the left end of each cell.
// Throws DomainError if u has a breakpoint off the grid.
std::vector<double> on_grid(const PiecewiseConstantFn& u, const TimeGrid& grid);

// delta(u) = sum_i u(t_i) (B(t_{i+1}) - B(t_i)) for every path.
std::vector<double> deterministic_integral(const PiecewiseConstantFn& u,
                                           const PathEnsemble& ensemble);

GaussianLaw det_law(const PiecewiseConstantFn& u, const WfbmParams& p,
                    const QuadratureConfig& cfg = QuadratureConfig{});

DualityReport duality_check(double t, const PiecewiseConstantFn& u,
                            const PathEnsemble& ensemble, const WfbmParams& p);

// Monte Carlo LHS over grids with the given step counts on [0, T], T = u's
// right end.  p_exp must exceed 4 / (a + b + 1).
MaximalReport maximal_experiment(const PiecewiseConstantFn& u, const WfbmParams& p,
                                 double p_exp, std::size_t n_paths,
                                 const std::vector<int>& refinements, std::uint64_t seed,
                                 unsigned workers = 0);

std::string to_json(const MaximalReport& r);

}  // namespace skorokhod
}  // namespace wfbm
