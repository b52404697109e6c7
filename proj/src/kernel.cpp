#include "wfbm/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "wfbm/errors.hpp"

namespace wfbm {

WfbmParams::WfbmParams(double a, double b) : a_(a), b_(b) {
  auto fail = [&](const char* constraint) {
    std::ostringstream os;
    os << "wfBm exponents (a=" << a << ", b=" << b << ") violate " << constraint;
    throw DomainError(os.str());
  };
  if (!std::isfinite(a) || !std::isfinite(b)) fail("finiteness");
  if (!(a > -1.0)) fail("a > -1");
  if (!(b > 0.0)) fail("b > 0");
  if (!(b < 1.0)) fail("b < 1");
  if (!(b < a + 1.0)) fail("b < a + 1");
  if (!(a + b < 1.0)) fail("a + b < 1");
  beta_ = beta_function(a + 1.0, b + 1.0);
}

void PiecewiseConstantFn::validate() const {
  if (grid.size() < 2) throw DomainError("piecewise-constant function needs >= 2 breakpoints");
  if (values.size() + 1 != grid.size()) {
    throw DomainError("piecewise-constant function: values.size() must equal grid.size() - 1");
  }
  if (!(grid.front() >= 0.0)) throw DomainError("piecewise-constant function starts before 0");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) {
      throw DomainError("piecewise-constant function grid is not strictly increasing");
    }
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw DomainError("piecewise-constant function has non-finite value");
  }
}

double PiecewiseConstantFn::operator()(double t) const {
  if (t < grid.front() || t >= grid.back()) return 0.0;
  const auto it = std::upper_bound(grid.begin(), grid.end(), t);
  return values[static_cast<std::size_t>(it - grid.begin()) - 1];
}

PiecewiseConstantFn PiecewiseConstantFn::indicator(double lo, double hi) {
  return {{lo, hi}, {1.0}};
}

PiecewiseConstantFn PiecewiseConstantFn::zero(double horizon) {
  return {{0.0, horizon}, {0.0}};
}

// ---------------------------------------------------------------------------
// Beta functions

double beta_function(double p, double q) {
  if (!(p > 0.0) || !(q > 0.0)) throw DomainError("beta function needs p, q > 0");
  return std::exp(std::lgamma(p) + std::lgamma(q) - std::lgamma(p + q));
}

namespace {

// Modified Lentz evaluation of the incomplete-beta continued fraction.
bool beta_continued_fraction(double x, double p, double q, double& out) {
  constexpr int kMaxIter = 1000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = p + q;
  const double qap = p + 1.0;
  const double qam = p - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (q - m) * x / ((qam + m2) * (p + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(p + m) * (qab + m) * x / ((p + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) {
      out = h;
      return true;
    }
  }
  return false;
}

// int_0^x v^(p-1) (1-v)^(q-1) dv via the continued fraction.
bool lower_direct(double x, double p, double q, double& out) {
  if (x <= 0.0) {
    out = 0.0;
    return true;
  }
  double cf = 0.0;
  if (!beta_continued_fraction(x, p, q, cf)) return false;
  out = std::exp(p * std::log(x) + q * std::log1p(-x)) * cf / p;
  return std::isfinite(out);
}

// int_x^1 v^(p-1) (1-v)^(q-1) dv
bool upper_direct(double x, double p, double q, double& out) {
  if (x >= 1.0) {
    out = 0.0;
    return true;
  }
  return lower_direct(1.0 - x, q, p, out);
}

double beta_interval_quadrature(double x0, double x1, double p, double q,
                                const QuadratureConfig& cfg) {
  const bool at_zero = x0 == 0.0;
  const bool at_one = x1 == 1.0;
  auto g = [&](double v) {
    double r = 1.0;
    if (!at_zero) r *= std::pow(v, p - 1.0);
    if (!at_one) r *= std::pow(1.0 - v, q - 1.0);
    return r;
  };
  return integrate_algebraic(g, x0, x1, at_zero ? p - 1.0 : 0.0, at_one ? q - 1.0 : 0.0, cfg);
}

void check_beta_args(double x, double p, double q) {
  if (!(p > 0.0) || !(q > 0.0)) throw DomainError("incomplete beta needs p, q > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("incomplete beta needs 0 <= x <= 1");
}

}  // namespace

double beta_interval(double x0, double x1, double p, double q, const QuadratureConfig& cfg) {
  check_beta_args(x0, p, q);
  check_beta_args(x1, p, q);
  if (x1 < x0) throw DomainError("beta_interval needs x0 <= x1");
  if (x1 == x0) return 0.0;

  const double pivot = p / (p + q);
  double r0 = 0.0, r1 = 0.0;
  bool ok = false;
  if (x1 <= pivot) {
    ok = lower_direct(x1, p, q, r1) && lower_direct(x0, p, q, r0);
    if (ok) return std::max(0.0, r1 - r0);
  } else if (x0 >= pivot) {
    ok = upper_direct(x0, p, q, r0) && upper_direct(x1, p, q, r1);
    if (ok) return std::max(0.0, r0 - r1);
  } else {
    ok = lower_direct(x0, p, q, r0) && upper_direct(x1, p, q, r1);
    if (ok) return std::max(0.0, beta_function(p, q) - r0 - r1);
  }
  return beta_interval_quadrature(x0, x1, p, q, cfg);
}

double reg_inc_beta(double x, double p, double q, const QuadratureConfig& cfg) {
  check_beta_args(x, p, q);
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double total = beta_function(p, q);
  if (x <= p / (p + q)) return beta_interval(0.0, x, p, q, cfg) / total;
  return 1.0 - beta_interval(x, 1.0, p, q, cfg) / total;
}

// ---------------------------------------------------------------------------
// Kernel

namespace kernel {

namespace {
void check_time(double t, const char* what) {
  if (!(t >= 0.0) || !std::isfinite(t)) {
    throw DomainError(std::string(what) + ": time must be finite and >= 0");
  }
}
}  // namespace

double phi(double t, double s, const WfbmParams& p) {
  check_time(t, "phi");
  check_time(s, "phi");
  if (t == s) throw SingularityError("phi is singular on the diagonal t = s");
  const double lo = std::min(t, s);
  const double hi = std::max(t, s);
  return p.b() * std::pow(lo, p.a()) * std::pow(hi - lo, p.b() - 1.0);
}

double power_segment(double lo, double hi, double c, const WfbmParams& p,
                     const QuadratureConfig& cfg) {
  if (!(lo >= 0.0) || !(hi >= lo) || !(c >= hi)) {
    throw DomainError("power_segment needs 0 <= lo <= hi <= c");
  }
  if (hi == lo || c == 0.0) return 0.0;
  const double x0 = lo / c;
  const double x1 = std::min(1.0, hi / c);
  return std::pow(c, p.a() + p.b() + 1.0) * beta_interval(x0, x1, p.a() + 1.0, p.b() + 1.0, cfg);
}

double covariance(double t, double s, const WfbmParams& p, const QuadratureConfig& cfg) {
  check_time(t, "covariance");
  check_time(s, "covariance");
  if (s > t) std::swap(s, t);
  if (s == 0.0) return 0.0;
  return power_segment(0.0, s, s, p, cfg) + power_segment(0.0, s, t, p, cfg);
}

double variance(double t, const WfbmParams& p) {
  check_time(t, "variance");
  if (t == 0.0) return 0.0;
  return 2.0 * std::pow(t, p.a() + p.b() + 1.0) * p.beta();
}

double increment_variance(double t, double s, const WfbmParams& p,
                          const QuadratureConfig& cfg) {
  check_time(t, "increment_variance");
  check_time(s, "increment_variance");
  if (s > t) std::swap(s, t);
  // R(t,t) + R(s,s) - 2R(t,s) collapses to 2 int_s^t u^a (t-u)^b du.
  return 2.0 * power_segment(s, t, t, p, cfg);
}

namespace {

// int_{s in I} int_{t in J, t > s} phi(t, s) dt ds with the t-integral done in
// closed form: s^a [(t1 - s)^b - (max(t0, s) - s)^b].
double half_weight(double s0, double s1, double t0, double t1, const WfbmParams& p,
                   const QuadratureConfig& cfg) {
  double r = 0.0;
  if (s0 < t0) {
    const double hi = std::min(s1, t0);
    r += power_segment(s0, hi, t1, p, cfg) - power_segment(s0, hi, t0, p, cfg);
  }
  const double lo = std::max(s0, t0);
  const double hi = std::min(s1, t1);
  if (lo < hi) r += power_segment(lo, hi, t1, p, cfg);
  return r;
}

}  // namespace

double cell_weight(double s0, double s1, double t0, double t1, const WfbmParams& p,
                   const QuadratureConfig& cfg) {
  if (!(s0 >= 0.0) || !(t0 >= 0.0) || !(s1 >= s0) || !(t1 >= t0)) {
    throw DomainError("cell_weight needs ordered non-negative cells");
  }
  return half_weight(s0, s1, t0, t1, p, cfg) + half_weight(t0, t1, s0, s1, p, cfg);
}

namespace {

// Values of u and v on the common refinement of their breakpoints.
struct Merged {
  std::vector<double> grid;
  std::vector<double> u;
  std::vector<double> v;
};

Merged merge(const PiecewiseConstantFn& u, const PiecewiseConstantFn& v) {
  u.validate();
  v.validate();
  Merged m;
  m.grid.reserve(u.grid.size() + v.grid.size());
  std::merge(u.grid.begin(), u.grid.end(), v.grid.begin(), v.grid.end(),
             std::back_inserter(m.grid));
  m.grid.erase(std::unique(m.grid.begin(), m.grid.end()), m.grid.end());
  const std::size_t cells = m.grid.size() - 1;
  m.u.resize(cells);
  m.v.resize(cells);
  for (std::size_t k = 0; k < cells; ++k) {
    m.u[k] = u(m.grid[k]);
    m.v[k] = v(m.grid[k]);
  }
  return m;
}

double bilinear(const Merged& m, const WfbmParams& p, const QuadratureConfig& cfg) {
  const std::size_t cells = m.u.size();
  double total = 0.0;
  for (std::size_t k = 0; k < cells; ++k) {
    for (std::size_t l = k; l < cells; ++l) {
      const double coeff = (k == l) ? m.u[k] * m.v[k] : m.u[k] * m.v[l] + m.u[l] * m.v[k];
      if (coeff == 0.0) continue;
      total += coeff * cell_weight(m.grid[k], m.grid[k + 1], m.grid[l], m.grid[l + 1], p, cfg);
    }
  }
  return total;
}

}  // namespace

double hilbert_inner(const PiecewiseConstantFn& u, const PiecewiseConstantFn& v,
                     const WfbmParams& p, const QuadratureConfig& cfg) {
  return bilinear(merge(u, v), p, cfg);
}

double hilbert_norm_abs(const PiecewiseConstantFn& u, const WfbmParams& p,
                        const QuadratureConfig& cfg) {
  PiecewiseConstantFn abs_u = u;
  for (double& x : abs_u.values) x = std::abs(x);
  return bilinear(merge(abs_u, abs_u), p, cfg);
}

}  // namespace kernel
}  // namespace wfbm
