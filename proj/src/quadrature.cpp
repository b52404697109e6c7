#include "wfbm/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <utility>

#include "wfbm/errors.hpp"

namespace wfbm {

void QuadratureConfig::validate() const {
  if (node_count < 2) throw DomainError("quadrature node_count must be >= 2");
  if (!(tolerance > 0.0)) throw DomainError("quadrature tolerance must be > 0");
  if (max_refinements < 1) throw DomainError("quadrature max_refinements must be >= 1");
}

GaussLegendreRule::GaussLegendreRule(int n) : nodes(n), weights(n) {
  if (n < 2) throw DomainError("Gauss-Legendre rule needs at least 2 nodes");
  // Newton iteration on P_n from the Chebyshev-like initial guess.
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // recompute derivative at the converged node
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = pk;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    weights[i] = w;
    weights[n - 1 - i] = w;
  }
}

namespace {

double apply_rule(const GaussLegendreRule& rule, const std::function<double(double)>& g,
                  double lo, double hi) {
  const double mid = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    sum += rule.weights[i] * g(mid + half * rule.nodes[i]);
  }
  return sum * half;
}

struct Panel {
  double lo, hi, estimate;
  int depth;
};

}  // namespace

double integrate(const std::function<double(double)>& g, double lo, double hi,
                 const QuadratureConfig& cfg) {
  cfg.validate();
  if (hi == lo) return 0.0;
  if (hi < lo) return -integrate(g, hi, lo, cfg);

  const GaussLegendreRule rule(cfg.node_count);
  const double width = hi - lo;
  std::vector<Panel> stack{{lo, hi, apply_rule(rule, g, lo, hi), 0}};
  double total = 0.0;
  double worst = 0.0;
  bool failed = false;

  while (!stack.empty()) {
    const Panel p = stack.back();
    stack.pop_back();
    const double mid = 0.5 * (p.lo + p.hi);
    const double left = apply_rule(rule, g, p.lo, mid);
    const double right = apply_rule(rule, g, mid, p.hi);
    const double refined = left + right;
    const double err = std::abs(refined - p.estimate);
    const double budget =
        cfg.tolerance * std::max(1.0, std::abs(refined)) * (p.hi - p.lo) / width;
    if (err <= budget || err < 1e-15 * std::abs(refined)) {
      total += refined;
      continue;
    }
    if (p.depth + 1 >= cfg.max_refinements) {
      total += refined;
      worst = std::max(worst, err);
      failed = true;
      continue;
    }
    stack.push_back({mid, p.hi, right, p.depth + 1});
    stack.push_back({p.lo, mid, left, p.depth + 1});
  }
  if (failed) throw AccuracyError("adaptive quadrature did not converge", worst);
  return total;
}

double integrate_algebraic(const std::function<double(double)>& g, double lo, double hi,
                           double alpha_lo, double alpha_hi, const QuadratureConfig& cfg) {
  if (!(alpha_lo > -1.0) || !(alpha_hi > -1.0)) {
    throw DomainError("algebraic endpoint exponents must exceed -1");
  }
  if (hi <= lo) {
    if (hi == lo) return 0.0;
    throw DomainError("integrate_algebraic requires lo <= hi");
  }
  const double mid = 0.5 * (lo + hi);
  const double len = mid - lo;

  // left half: x = lo + len * v^(1/(alpha_lo+1))
  const double el = 1.0 / (alpha_lo + 1.0);
  auto left = [&](double v) {
    const double x = lo + len * std::pow(v, el);
    return std::pow(hi - x, alpha_hi) * g(x);
  };
  // right half: x = hi - len * v^(1/(alpha_hi+1))
  const double er = 1.0 / (alpha_hi + 1.0);
  auto right = [&](double v) {
    const double x = hi - len * std::pow(v, er);
    return std::pow(x - lo, alpha_lo) * g(x);
  };
  const double left_scale = std::pow(len, alpha_lo + 1.0) * el;
  const double right_scale = std::pow(len, alpha_hi + 1.0) * er;
  return left_scale * integrate(left, 0.0, 1.0, cfg) +
         right_scale * integrate(right, 0.0, 1.0, cfg);
}

}  // namespace wfbm
