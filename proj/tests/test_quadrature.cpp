#include <cmath>

#include <doctest.h>

#include "wfbm/errors.hpp"
#include "wfbm/quadrature.hpp"

using namespace wfbm;

TEST_CASE("gauss-legendre rule integrates polynomials of degree 2n-1 exactly") {
  const GaussLegendreRule r(5);
  double s = 0.0;
  for (std::size_t k = 0; k < r.nodes.size(); ++k) s += r.weights[k] * std::pow(r.nodes[k], 8);
  CHECK(s == doctest::Approx(2.0 / 9.0).epsilon(1e-14));
}

TEST_CASE("adaptive integration of smooth and kinked integrands") {
  QuadratureConfig cfg;
  CHECK(integrate([](double x) { return std::exp(x); }, 0.0, 1.0, cfg) ==
        doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-12));
  CHECK(integrate([](double x) { return std::abs(x - 0.3); }, 0.0, 1.0, cfg) ==
        doctest::Approx(0.5 * (0.09 + 0.49)).epsilon(1e-9));
}

TEST_CASE("algebraic endpoint weights") {
  QuadratureConfig cfg;
  // int_0^1 x^-0.5 (1-x)^-0.25 dx = B(0.5, 0.75)
  const double ref = std::tgamma(0.5) * std::tgamma(0.75) / std::tgamma(1.25);
  CHECK(integrate_algebraic([](double) { return 1.0; }, 0.0, 1.0, -0.5, -0.25, cfg) ==
        doctest::Approx(ref).epsilon(1e-10));
}

TEST_CASE("exhausted refinement depth reports the achieved tolerance") {
  QuadratureConfig cfg;
  cfg.max_refinements = 1;
  cfg.tolerance = 1e-14;
  try {
    integrate([](double x) { return std::sqrt(std::abs(std::sin(40.0 * x))); }, 0.0, 3.0, cfg);
    FAIL("expected AccuracyError");
  } catch (const AccuracyError& e) {
    CHECK(e.achieved() > 0.0);
  }
}

TEST_CASE("invalid configuration is rejected") {
  QuadratureConfig cfg;
  cfg.node_count = 1;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg.node_count = 10;
  cfg.tolerance = 0.0;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
}
