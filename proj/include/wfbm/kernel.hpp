#pragma once

#include <span>
#include <vector>

#include "wfbm/quadrature.hpp"

namespace wfbm {

// Exponents (a, b) of a weighted fractional Brownian motion.  Construction
// enforces a > -1, 0 < b < 1, b < a + 1 and a + b < 1.
class WfbmParams {
 public:
  WfbmParams(double a, double b);

  double a() const noexcept { return a_; }
  double b() const noexcept { return b_; }
  // Self-similarity index (a+b+1)/2.
  double hurst() const noexcept { return 0.5 * (a_ + b_ + 1.0); }
  // B(a+1, b+1)
  double beta() const noexcept { return beta_; }
  // Upper constant of the increment-variance sandwich, b / (2 B(a+1, b+1)).
  double sandwich_upper() const noexcept { return b_ / (2.0 * beta_); }

 private:
  double a_;
  double b_;
  double beta_;
};

// Piecewise-constant function: values[i] on [grid[i], grid[i+1]).
struct PiecewiseConstantFn {
  std::vector<double> grid;
  std::vector<double> values;

  void validate() const;
  double operator()(double t) const;

  static PiecewiseConstantFn indicator(double lo, double hi);
  static PiecewiseConstantFn zero(double horizon);
};

// Complete beta function B(p, q).
double beta_function(double p, double q);

// Regularized lower incomplete beta I_x(p, q).
double reg_inc_beta(double x, double p, double q,
                    const QuadratureConfig& cfg = QuadratureConfig{});

// Unregularized integral of v^(p-1) (1-v)^(q-1) over [x0, x1] in [0, 1].  Picks
// the lower or upper continued-fraction route per endpoint so differences of
// nearly equal quantities are avoided.
double beta_interval(double x0, double x1, double p, double q,
                     const QuadratureConfig& cfg = QuadratureConfig{});

namespace kernel {

// b (t^s)^a (t v s - t ^ s)^(b-1); t != s.
double phi(double t, double s, const WfbmParams& p);

// R(t, s) = int_0^{s^t} u^a [(t-u)^b + (s-u)^b] du
double covariance(double t, double s, const WfbmParams& p,
                  const QuadratureConfig& cfg = QuadratureConfig{});

// R(t, t) = 2 t^(a+b+1) B(a+1, b+1)
double variance(double t, const WfbmParams& p);

// E[(B(t) - B(s))^2]
double increment_variance(double t, double s, const WfbmParams& p,
                          const QuadratureConfig& cfg = QuadratureConfig{});

// int_lo^hi u^a (c-u)^b du for 0 <= lo <= hi <= c.
double power_segment(double lo, double hi, double c, const WfbmParams& p,
                     const QuadratureConfig& cfg = QuadratureConfig{});

// <1_I, 1_J>_H for cells I = [s0, s1], J = [t0, t1].
double cell_weight(double s0, double s1, double t0, double t1, const WfbmParams& p,
                   const QuadratureConfig& cfg = QuadratureConfig{});

double hilbert_inner(const PiecewiseConstantFn& u, const PiecewiseConstantFn& v,
                     const WfbmParams& p, const QuadratureConfig& cfg = QuadratureConfig{});

// ||u||^2 in |H|: the kernel integral of |u(s)||u(t)|.
double hilbert_norm_abs(const PiecewiseConstantFn& u, const WfbmParams& p,
                        const QuadratureConfig& cfg = QuadratureConfig{});

}  // namespace kernel
}  // namespace wfbm
