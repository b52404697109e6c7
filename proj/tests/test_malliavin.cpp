#include <cmath>
#include <sstream>

#include <doctest.h>

#include "wfbm/errors.hpp"
#include "wfbm/malliavin.hpp"
#include "wfbm/sdde.hpp"

using namespace wfbm;
using doctest::Approx;

namespace {

const WfbmParams fbm(0.0, 0.5);

SddeSpec make(double A, double B, double f, double sigma) {
  return SddeSpec::make(A, B, ScalarFunction::constant(f), ScalarFunction::constant(sigma), 0.25, 1.0, 1.0);
}

struct Run {
  PathEnsemble e;
  SolveResult r;
};

Run run(const SddeSpec& spec, int m, std::size_t n, Scheme scheme = Scheme::euler,
        DerivativeMode mode = DerivativeMode::corrected) {
  const TimeGrid g(spec.tau, m, spec.T);
  auto e = sampler::sample(g, fbm, n, 31);
  SolverOptions o;
  o.keep_grids = n;
  o.derivative_mode = mode;
  auto r = sdde::solve(scheme, e, spec, fbm, o);
  return {std::move(e), std::move(r)};
}

// max |D_r x(t) - want(path, t_i)| over the lower triangle
template <class F>
double max_error(const DerivativeGrid& d, F want) {
  double worst = 0.0;
  const std::size_t pts = d.grid.size() + 1;
  for (std::size_t p = 0; p < d.n_paths(); ++p) {
    for (std::size_t i = 0; i < pts; ++i) {
      for (std::size_t j = 0; j <= i; ++j) worst = std::max(worst, std::abs(d.at(p, j, i) - want(p, i)));
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("pure linear derivative is B x") {
  const auto spec = make(-0.5, 0.3, 0.0, 0.0);
  const auto [e, r] = run(spec, 8, 20);
  const auto& x = r.solution.x;
  CHECK(max_error(r.grids, [&](std::size_t p, std::size_t i) {
          return 0.3 * x(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(i));
        }) < 1e-12);
  const auto gamma = malliavin::malliavin_covariance(r.grids, 1.0);
  for (std::size_t p = 0; p < gamma.size(); ++p) {
    CHECK(gamma[p] == Approx(0.09 * std::pow(x(static_cast<Eigen::Index>(p), 32), 2)).epsilon(1e-10));
  }
  CHECK(r.grids.at(0, 5, 4) == 0.0);
}

TEST_CASE("constant diffusion derivative") {
  const auto [e, r] = run(make(0.0, 0.0, 0.0, 0.4), 8, 5);
  for (Scheme s : {Scheme::stepwise, Scheme::euler}) {
    const auto rs = run(make(0.0, 0.0, 0.0, 0.4), 8, 5, s);
    CHECK(max_error(rs.r.grids, [](std::size_t, std::size_t) { return 0.4; }) < 1e-15);
  }
  for (double t : {0.0, 0.5, 1.0}) {
    for (double g : malliavin::malliavin_covariance(r.grids, t)) CHECK(g == Approx(0.16 * t).epsilon(1e-12));
  }
  CHECK_THROWS_AS(malliavin::malliavin_covariance(r.grids, 0.3), DomainError);
  CHECK_THROWS_AS(malliavin::malliavin_covariance(r.derivative, r.grids.grid, 0.3), DomainError);
  const auto from_summary = malliavin::malliavin_covariance(r.derivative, r.grids.grid, 1.0);
  CHECK(from_summary == malliavin::malliavin_covariance(r.grids, 1.0));
  CHECK(r.derivative.sup_abs[0] == Approx(0.4));
}

TEST_CASE("strict mode drops the source near the diagonal") {
  const auto spec = make(0.0, 0.0, 0.0, 0.4);
  const auto r = run(spec, 8, 3, Scheme::euler, DerivativeMode::strict).r;
  const std::size_t m = 8;
  for (std::size_t i = 0; i <= 32; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double want = j + m <= i ? 0.4 : 0.0;
      CHECK(r.grids.at(1, j, i) == want);
    }
  }
  CHECK(max_error(r.grids, [](std::size_t, std::size_t) { return 0.4; }) == Approx(0.4));
}

TEST_CASE("derivative scales with the coefficients") {
  const auto base = run(make(0.0, 0.0, 0.2, 0.4), 8, 4).r.grids;
  const auto scaled = run(make(0.0, 0.0, 0.5, 1.0), 8, 4).r.grids;
  for (std::size_t p = 0; p < 4; ++p) {
    for (std::size_t k = 0; k < base.d[p].size(); ++k) CHECK(scaled.d[p][k] == Approx(2.5 * base.d[p][k]));
  }
}

TEST_CASE("propagate_first matches the solver's grids") {
  const auto spec = SddeSpec::make(-0.5, 0.3, ScalarFunction::constant(0.2),
                                   ScalarFunction::sin_shifted(0.5, 0.1), 0.25, 1.0, 1.0);
  const auto [e, r] = run(spec, 8, 6);
  const auto d = malliavin::propagate_first(e, spec, r.solution, fbm);
  CHECK(d.d == r.grids.d);
  const auto s = malliavin::summarize_first(e, spec, r.solution, WeightTable(e.grid, fbm));
  CHECK(s.gamma == r.derivative.gamma);

  const auto big = sampler::sample(TimeGrid(0.25, 160, 1.0), fbm, 2, 1);
  const auto sol = sdde::solve_euler(big, spec, fbm).solution;
  CHECK_THROWS_AS(malliavin::propagate_first(big, spec, sol, fbm), DomainError);
  CHECK_THROWS_AS(malliavin::propagate_first(e, spec, sol, fbm), DomainError);
}

TEST_CASE("stepwise pure linear derivative converges") {
  const auto spec = make(0.0, 0.3, 0.0, 0.0);
  double prev = INFINITY;
  for (int m : {4, 8, 16, 32}) {
    const auto r = run(spec, m, 100, Scheme::stepwise).r;
    const double err = max_error(r.grids, [&](std::size_t p, std::size_t i) {
      return 0.3 * r.solution.x(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(i));
    });
    CHECK(err < prev);
    prev = err;
  }
}

TEST_CASE("small ball probe verdicts") {
  const std::vector<double> eps{0.1, 0.05, 0.01};
  std::vector<double> zero(1000, 0.0);
  const auto bad = malliavin::small_ball_probe(zero, 1.0, eps, 2.0);
  CHECK_FALSE(bad.pass);
  CHECK(bad.prob == std::vector<double>{1.0, 1.0, 1.0});
  CHECK(bad.eps0 == 0.1);

  std::vector<double> good(1000, 0.5);
  const auto ok = malliavin::small_ball_probe(good, 1.0, eps, 2.0);
  CHECK(ok.pass);
  CHECK(ok.upper[0] == Approx(0.003));
  CHECK(ok.bound[1] == Approx(0.0025));

  // 5 of 1000 below 0.1 is within 0.1^2, the same 5 below 0.05 is not
  good[0] = good[1] = good[2] = good[3] = good[4] = 0.03;
  CHECK_FALSE(malliavin::small_ball_probe(good, 1.0, eps, 2.0).pass);
  good[0] = good[1] = good[2] = good[3] = good[4] = 0.07;
  CHECK(malliavin::small_ball_probe(good, 1.0, eps, 2.0).pass);

  CHECK_THROWS_AS(malliavin::small_ball_probe(good, 1.0, {0.01, 0.1}, 2.0), DomainError);
  CHECK_THROWS_AS(malliavin::small_ball_probe(good, 1.0, {0.1, -0.1}, 2.0), DomainError);
  const auto j = malliavin::to_json(ok);
  CHECK(j.find("\"verdict\":\"PASS\"") != std::string::npos);
  CHECK(j.find("\"bound\"") != std::string::npos);
}

TEST_CASE("derivative csv") {
  const auto r = run(make(0.0, 0.0, 0.0, 0.4), 2, 1).r;
  std::ostringstream os;
  malliavin::write_derivative_csv(os, r.grids, 0);
  const auto s = os.str();
  CHECK(s.rfind("r,t,D\n", 0) == 0);
  CHECK(std::count(s.begin(), s.end(), '\n') == 1 + 45);
  CHECK_THROWS_AS(malliavin::write_derivative_csv(os, r.grids, 3), DomainError);
}
