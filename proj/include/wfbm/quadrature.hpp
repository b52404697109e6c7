#pragma once

#include <functional>
#include <vector>

namespace wfbm {

struct QuadratureConfig {
  int node_count = 10;          // Gauss-Legendre order per panel
  double tolerance = 1e-8;      // absolute, scaled by max(1, |result|)
  int max_refinements = 40;     // maximum bisection depth

  void validate() const;
};

// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  explicit GaussLegendreRule(int n);
};

// Adaptive bisection with a fixed Gauss-Legendre rule.  Panels are split until
// the rule on the panel agrees with the sum over its two halves.  Throws
// AccuracyError if max_refinements is exhausted.
double integrate(const std::function<double(double)>& g, double lo, double hi,
                 const QuadratureConfig& cfg);

// Integral of (x-lo)^alpha_lo * (hi-x)^alpha_hi * g(x) over [lo, hi] with
// alpha > -1.  Each half of the interval is mapped by x = end +- L v^(1/(alpha+1)),
// which absorbs the algebraic factor at that end into the Jacobian.
double integrate_algebraic(const std::function<double(double)>& g, double lo, double hi,
                           double alpha_lo, double alpha_hi, const QuadratureConfig& cfg);

}  // namespace wfbm
