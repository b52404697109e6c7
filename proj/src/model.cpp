#include "wfbm/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <regex>

#include "wfbm/errors.hpp"
#include "wfbm/rng.hpp"

namespace wfbm {

namespace {

std::string shortest(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_number(const std::string& s) {
  const auto first = s.find_first_not_of(" \t");
  const auto last = s.find_last_not_of(" \t");
  if (first == std::string::npos) throw DomainError("empty function argument");
  const std::string t = s.substr(first, last - first + 1);
  double v = 0.0;
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size() || !std::isfinite(v)) {
    throw DomainError("bad function argument '" + t + "'");
  }
  return v;
}

}  // namespace

ScalarFunction ScalarFunction::constant(double c) { return {Kind::constant, {c}}; }
ScalarFunction ScalarFunction::linear(double k) { return {Kind::linear, {k}}; }
ScalarFunction ScalarFunction::sin_shifted(double c0, double c1) {
  return {Kind::sin_shifted, {c0, c1}};
}

ScalarFunction ScalarFunction::parse(const std::string& text) {
  static const std::regex re(R"(^\s*([a-z][a-z-]*)\s*\(([^()]*)\)\s*$)");
  std::smatch m;
  if (!std::regex_match(text, m, re)) {
    throw DomainError("cannot parse function '" + text + "'; expected name(args)");
  }
  const std::string name = m[1];
  std::vector<double> args;
  std::string rest = m[2];
  std::size_t pos = 0;
  while (true) {
    const auto comma = rest.find(',', pos);
    args.push_back(parse_number(rest.substr(pos, comma - pos)));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  auto arity = [&](std::size_t n) {
    if (args.size() != n) {
      throw DomainError(name + " takes " + std::to_string(n) + " argument(s)");
    }
  };
  if (name == "const") {
    arity(1);
    return constant(args[0]);
  }
  if (name == "linear") {
    arity(1);
    return linear(args[0]);
  }
  if (name == "sin-shifted") {
    arity(2);
    return sin_shifted(args[0], args[1]);
  }
  throw DomainError("unknown function '" + name + "' (known: const, linear, sin-shifted)");
}

double ScalarFunction::operator()(double x) const noexcept {
  switch (kind_) {
    case Kind::constant: return c_[0];
    case Kind::linear: return c_[0] * x;
    case Kind::sin_shifted: return c_[0] + c_[1] * std::sin(x);
  }
  return 0.0;
}

double ScalarFunction::d1(double x) const noexcept {
  switch (kind_) {
    case Kind::constant: return 0.0;
    case Kind::linear: return c_[0];
    case Kind::sin_shifted: return c_[1] * std::cos(x);
  }
  return 0.0;
}

double ScalarFunction::d2(double x) const noexcept {
  return kind_ == Kind::sin_shifted ? -c_[1] * std::sin(x) : 0.0;
}

std::string ScalarFunction::name() const {
  switch (kind_) {
    case Kind::constant: return "const";
    case Kind::linear: return "linear";
    case Kind::sin_shifted: return "sin-shifted";
  }
  return {};
}

std::string ScalarFunction::text() const {
  std::string s = name() + "(";
  for (std::size_t i = 0; i < c_.size(); ++i) {
    if (i) s += ",";
    s += shortest(c_[i]);
  }
  return s + ")";
}

double ScalarFunction::lipschitz_sq() const noexcept {
  switch (kind_) {
    case Kind::constant: return 0.0;
    case Kind::linear: return c_[0] * c_[0];
    case Kind::sin_shifted: return c_[1] * c_[1];
  }
  return 0.0;
}

double ScalarFunction::growth() const noexcept {
  switch (kind_) {
    case Kind::constant: return c_[0] * c_[0];
    case Kind::linear: return c_[0] * c_[0];
    case Kind::sin_shifted: {
      const double s = std::abs(c_[0]) + std::abs(c_[1]);
      return s * s;
    }
  }
  return 0.0;
}

double ScalarFunction::floor() const noexcept {
  switch (kind_) {
    case Kind::constant: return std::abs(c_[0]);
    case Kind::linear: return 0.0;
    case Kind::sin_shifted: return std::max(0.0, std::abs(c_[0]) - std::abs(c_[1]));
  }
  return 0.0;
}

bool ScalarFunction::is_constant() const noexcept {
  switch (kind_) {
    case Kind::constant: return true;
    case Kind::linear: return c_[0] == 0.0;
    case Kind::sin_shifted: return c_[1] == 0.0;
  }
  return false;
}

bool ScalarFunction::is_zero() const noexcept { return is_constant() && (*this)(0.0) == 0.0; }

std::vector<CatalogEntry> list_functions() {
  return {
      {"const", "const(c): x -> c", "0", "c^2", "|c|"},
      {"linear", "linear(k): x -> k x", "k^2", "k^2", "0"},
      {"sin-shifted", "sin-shifted(c0,c1): x -> c0 + c1 sin(x)", "c1^2", "(|c0| + |c1|)^2",
       "max(0, |c0| - |c1|)"},
  };
}

SddeSpec SddeSpec::make(double A, double B, ScalarFunction f, ScalarFunction sigma, double tau,
                        double xi0, double T) {
  SddeSpec s;
  s.A = A;
  s.B = B;
  s.f = f;
  s.sigma = sigma;
  s.tau = tau;
  s.xi0 = [xi0](double) { return xi0; };
  s.T = T;
  s.lipschitz_K1 = std::max(f.lipschitz_sq(), sigma.lipschitz_sq());
  s.linear_growth_L = f.growth() + sigma.growth();
  s.sigma_floor_M0 = sigma.floor();
  return s;
}

void SddeSpec::validate(std::uint64_t seed) const {
  if (!std::isfinite(A) || !std::isfinite(B)) throw DomainError("A and B must be finite");
  if (!(tau > 0.0)) throw DomainError("delay tau must be > 0");
  if (!(T > tau)) throw DomainError("horizon T must exceed the delay tau");
  if (lipschitz_K1 < 0.0 || linear_growth_L < 0.0 || sigma_floor_M0 < 0.0) {
    throw DomainError("K1, L and M0 must be nonnegative");
  }
  NormalStream rng(seed, 0);
  for (int k = 0; k < 256; ++k) {
    const double x = 5.0 * rng.next();
    const double y = 5.0 * rng.next();
    const double dx2 = (x - y) * (x - y);
    const double slack = 1e-12 * (1.0 + dx2);
    const double df = f(x) - f(y), ds = sigma(x) - sigma(y);
    if (df * df > lipschitz_K1 * dx2 + slack) throw DomainError("f violates the Lipschitz bound K1");
    if (ds * ds > lipschitz_K1 * dx2 + slack) {
      throw DomainError("sigma violates the Lipschitz bound K1");
    }
    const double g = f(x) * f(x) + sigma(x) * sigma(x);
    if (g > linear_growth_L * (1.0 + x * x) * (1.0 + 1e-12)) {
      throw DomainError("f, sigma violate the linear growth bound L");
    }
    if (sigma_floor_M0 > 0.0 && !(std::abs(sigma(x)) > sigma_floor_M0 * (1.0 - 1e-12))) {
      throw DomainError("sigma violates the floor M0");
    }
  }
}

std::string to_string(Scheme s) { return s == Scheme::euler ? "euler" : "stepwise"; }
std::string to_string(Representation r) { return r == Representation::wick ? "wick" : "paper"; }
std::string to_string(DerivativeMode d) {
  return d == DerivativeMode::corrected ? "corrected" : "strict-paper";
}

}  // namespace wfbm
