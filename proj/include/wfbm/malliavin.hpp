#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "wfbm/model.hpp"
#include "wfbm/sampler.hpp"
#include "wfbm/skorokhod.hpp"

namespace wfbm {

// First-order derivative of one path, advanced column by column in t alongside
// the state.  v_j(t) = D_{r_j} x(t) obeys the linearized equation
//   dv = (A v + f'(x_d) v_d) dt + (B v + sigma'(x_d) v_d) dB,  v_d = v(t - tau),
// discretized with the same Wick step as the Euler scheme.  Second derivatives
// in the correction are closed by D_{r'} v ~ B v.
class DerivativePropagator {
 public:
  DerivativePropagator(const WeightTable& w, const SddeSpec& spec, DerivativeMode mode);

  // x has N+1 entries; x(i) for i < 0 comes from xi0.  Sets D(0, 0).
  void start(std::span<const double> x);

  // Row n -> row n + 1.  Needs x[0..n+1].
  void advance(std::size_t n, std::span<const double> x, double dB);

  // sum_{j<n} D(n, j) w(j, n)
  double contraction(std::size_t n) const noexcept;
  // sum_{j<n-m} D(n-m, j) w(j, n) and sum_{j<n-m} w(j, n)
  std::pair<double, double> delayed_contraction(std::size_t n) const noexcept;

  double at(std::size_t i, std::size_t j) const noexcept {
    return d_[DerivativeGrid::index(i, j)];
  }
  std::span<const double> row(std::size_t i) const noexcept {
    return {d_.data() + DerivativeGrid::index(i, 0), i + 1};
  }
  const std::vector<double>& packed() const noexcept { return d_; }

  // gamma(t_i) = trapezoid over r_0..r_i of D(i, j)^2
  double gamma(std::size_t i) const noexcept;
  double sup_abs() const noexcept;

  // State at grid index i (negative i reads xi0).
  double state(std::span<const double> x, long i) const noexcept {
    return i >= 0 ? x[static_cast<std::size_t>(i)] : history_[static_cast<std::size_t>(i + m_)];
  }

 private:
  double diagonal(std::span<const double> x, std::size_t i) const noexcept;

  const WeightTable& w_;
  const SddeSpec& spec_;
  DerivativeMode mode_;
  long m_;
  double dt_;
  std::vector<double> history_;  // xi0(t_{-m}) .. xi0(t_{-1})
  std::vector<double> d_;
};

namespace malliavin {

// Derivative grids for every path of a solved ensemble.  N <= 512.
DerivativeGrid propagate_first(const PathEnsemble& ensemble, const SddeSpec& spec,
                               const SolutionEnsemble& sol, const WfbmParams& p,
                               DerivativeMode mode = DerivativeMode::corrected,
                               unsigned workers = 0);

// Same propagation reduced to per-path summaries (no size cap).
DerivativeSummary summarize_first(const PathEnsemble& ensemble, const SddeSpec& spec,
                                  const SolutionEnsemble& sol, const WeightTable& w,
                                  DerivativeMode mode = DerivativeMode::corrected,
                                  unsigned workers = 0);

// Per-path gamma(t) = int_0^t |D_r x(t)|^2 dr (trapezoid in r).
std::vector<double> malliavin_covariance(const DerivativeGrid& dgrid, double t);
std::vector<double> malliavin_covariance(const DerivativeSummary& s, const TimeGrid& grid,
                                         double t);

struct ProbeReport {
  double t = 0.0;
  std::vector<double> eps;
  std::vector<double> prob;
  std::vector<double> bound;  // eps^p
  std::vector<double> upper;  // 3/n when no hits, else prob
  std::vector<std::size_t> hits;
  std::size_t n = 0;
  double eps0 = 0.0;
  bool pass = false;
};

// PASS when hits/n <= eps^p for every eps <= eps0 = max(eps).  With no hits
// the frequency is consistent with any bound; 3/n is reported as its upper limit.
ProbeReport small_ball_probe(std::span<const double> gamma, double t,
                             const std::vector<double>& epsilons, double p_exp);
ProbeReport small_ball_probe(const DerivativeGrid& dgrid, double t,
                             const std::vector<double>& epsilons, double p_exp);

std::string to_json(const ProbeReport& r);

// CSV `r,t,D` for one path, lower triangle only.
void write_derivative_csv(std::ostream& os, const DerivativeGrid& dgrid, std::size_t path);

}  // namespace malliavin
}  // namespace wfbm
