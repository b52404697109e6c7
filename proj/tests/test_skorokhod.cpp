#include <cmath>

#include <doctest.h>

#include "oracles.hpp"
#include "wfbm/errors.hpp"
#include "wfbm/skorokhod.hpp"

using namespace wfbm;
using doctest::Approx;

namespace {

const WfbmParams fbm(0.0, 0.5);

// Integrand u = B with D_{r_j} B(t_i) = 1 for r_j < t_i.
WickIntegrand brownian_integrand(const PathEnsemble& e) {
  WickIntegrand u{e.paths, {}};
  const auto n = e.paths.cols();
  RowMatrix d = RowMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) d(j, i) = 1.0;
  }
  u.dvalues.assign(e.n_paths(), d);
  return u;
}

}  // namespace

TEST_CASE("weight table") {
  const TimeGrid g(0.25, 4, 1.0);
  const WfbmParams p(0.5, 0.25);
  const WeightTable w(g, p);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto cell = PiecewiseConstantFn::indicator(g.time(i), g.time(i + 1));
    CHECK(w.past(i) == Approx(i == 0 ? 0.0
                                     : kernel::hilbert_inner(PiecewiseConstantFn::indicator(0.0, g.time(i)), cell, p))
                           .epsilon(1e-8));
    CHECK(w.kernel_column(i) ==
          Approx(0.5 * (kernel::variance(g.time(i + 1), p) - kernel::variance(g.time(i), p))).epsilon(1e-14));
    for (std::size_t j = 0; j < g.size(); ++j) CHECK(w(j, i) == w(i, j));
  }
  CHECK(w(3, 9) == Approx(oracle::inner({g.time(3), g.time(4)}, {1.0}, {g.time(9), g.time(10)}, {1.0}, 0.5, 0.25))
                       .epsilon(1e-7));
  // the full table sums to the variance at T
  double total = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t j = 0; j < g.size(); ++j) total += w(i, j);
  }
  CHECK(total == Approx(kernel::variance(1.0, p)).epsilon(1e-9));
}

TEST_CASE("deterministic integrand reduces to the left-point sum") {
  const TimeGrid g(0.25, 4, 1.0);
  const auto e = sampler::sample(g, fbm, 20, 3);
  WickIntegrand u{RowMatrix::Zero(20, 17), {}};
  for (Eigen::Index i = 0; i < 17; ++i) u.values.col(i).setConstant(std::cos(0.3 * static_cast<double>(i)));
  const auto out = skorokhod::wick_sum(u, e, fbm);
  for (Eigen::Index k = 0; k < 20; ++k) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < 16; ++i) s += u.values(k, i) * (e.paths(k, i + 1) - e.paths(k, i));
    CHECK(out.partials(k, 16) == s);
    CHECK(out.partials(k, 0) == 0.0);
  }
}

TEST_CASE("wick_sum rejects mismatched inputs") {
  const auto e = sampler::sample(TimeGrid(0.25, 4, 1.0), fbm, 4, 3);
  WickIntegrand u{RowMatrix::Zero(4, 9), {}};
  CHECK_THROWS_AS(skorokhod::wick_sum(u, e, fbm), DomainError);
  const WeightTable other(TimeGrid(0.25, 2, 1.0), fbm);
  WickIntegrand ok{RowMatrix::Zero(4, 17), {}};
  CHECK_THROWS_AS(skorokhod::wick_sum(ok, e, other), DomainError);
}

TEST_CASE("int B dB is centred and converges to the Ito-formula value") {
  double prev = INFINITY;
  double c0 = 0.0;
  for (int m : {4, 8, 16, 32}) {
    const TimeGrid g = TimeGrid::over_horizon(1.0, m);
    const auto e = sampler::sample(g, fbm, m == 32 ? 10000 : 2000, 17);
    const auto out = skorokhod::wick_sum(brownian_integrand(e), e, fbm);
    std::vector<double> fin(e.n_paths()), err(e.n_paths());
    const double v = kernel::variance(1.0, fbm);
    for (std::size_t k = 0; k < fin.size(); ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      fin[k] = out.partials(kk, m);
      const double b = e.paths(kk, m);
      err[k] = std::pow(fin[k] - 0.5 * (b * b - v), 2);
    }
    const double l2 = std::sqrt(stats::mc_mean(err).value);
    const double dt_b = std::pow(1.0 / m, fbm.b());
    if (m == 4) c0 = l2 / dt_b;
    CHECK(l2 < prev);
    CHECK(l2 <= 1.5 * c0 * dt_b);
    prev = l2;
    if (m == 32) {
      const auto mean = stats::mc_mean(fin);
      CHECK(std::abs(mean.value) <= 3.0 * mean.std_error);
    }
  }
}

TEST_CASE("exact law of deterministic integrals") {
  CHECK(skorokhod::det_law(PiecewiseConstantFn::indicator(0.0, 1.0), fbm).variance ==
        Approx(4.0 / 3.0).epsilon(1e-8));
  CHECK(skorokhod::det_law(PiecewiseConstantFn::zero(1.0), fbm).variance == 0.0);
  const PiecewiseConstantFn two{{0.0, 0.5, 1.0}, {1.0, -1.0}};
  const auto law = skorokhod::det_law(two, fbm);
  CHECK(law.mean == 0.0);
  CHECK(law.variance == Approx(oracle::inner(two.grid, two.values, two.grid, two.values, 0.0, 0.5)).epsilon(1e-6));
  // 2 Var B(1/2) - 2 Cov(B(1/2), B(1) - B(1/2)) + ... expressed through R
  const double r = 2.0 * kernel::variance(0.5, fbm) + kernel::variance(1.0, fbm) - 2.0 * kernel::covariance(1.0, 0.5, fbm) -
                   2.0 * (kernel::covariance(1.0, 0.5, fbm) - kernel::variance(0.5, fbm));
  CHECK(law.variance == Approx(r).epsilon(1e-8));
}

TEST_CASE("duality and isometry for deterministic integrands") {
  const WfbmParams p(0.5, 0.25);
  const TimeGrid g(0.25, 8, 1.0);
  const auto e = sampler::sample(g, p, 20000, 8);
  const auto u = PiecewiseConstantFn::indicator(0.0, 0.5);
  const auto d = skorokhod::duality_check(1.0, u, e, p);
  CHECK(d.target == Approx(kernel::covariance(1.0, 0.5, p)).epsilon(1e-6));
  CHECK(std::abs(d.z) <= 4.0);

  const PiecewiseConstantFn w{{0.0, 0.25, 0.75, 1.0}, {2.0, -1.0, 0.5}};
  const auto delta = skorokhod::deterministic_integral(w, e);
  std::vector<double> sq(delta.size());
  for (std::size_t k = 0; k < sq.size(); ++k) sq[k] = delta[k] * delta[k];
  CHECK(std::abs(stats::mc_mean(sq).z_score(skorokhod::det_law(w, p).variance)) <= 5.0);
  CHECK(std::abs(stats::mc_mean(delta).z_score(0.0)) <= 4.0);

  CHECK_THROWS_AS(skorokhod::on_grid(PiecewiseConstantFn::indicator(0.0, 0.3), g), DomainError);
  CHECK_THROWS_AS(skorokhod::duality_check(0.3, u, e, p), DomainError);
}

TEST_CASE("linearity in the integrand") {
  const TimeGrid g(0.25, 4, 1.0);
  const auto e = sampler::sample(g, fbm, 30, 4);
  const auto u = brownian_integrand(e);
  const WeightTable w(g, fbm);
  const auto base = skorokhod::wick_sum(u, e, w);
  for (double c : {2.0, 0.5, -4.0}) {
    WickIntegrand cu = u;
    cu.values *= c;
    for (auto& d : cu.dvalues) d *= c;
    CHECK(skorokhod::wick_sum(cu, e, w).partials == c * base.partials);
  }
  WickIntegrand cu = u;
  cu.values *= 0.3;
  for (auto& d : cu.dvalues) d *= 0.3;
  const RowMatrix diff = skorokhod::wick_sum(cu, e, w).partials - 0.3 * base.partials;
  CHECK(diff.cwiseAbs().maxCoeff() <= 1e-14 * (1.0 + base.partials.cwiseAbs().maxCoeff()));
}

TEST_CASE("maximal inequality experiment") {
  const PiecewiseConstantFn one{{0.0, 1.0}, {1.0}};
  CHECK_THROWS_AS(skorokhod::maximal_experiment(one, fbm, 2.5, 100, {8}, 1), DomainError);
  const auto zero = skorokhod::maximal_experiment(PiecewiseConstantFn::zero(1.0), fbm, 3.0, 100, {8, 16}, 1);
  CHECK(zero.lhs[0].value == 0.0);
  CHECK(zero.ratios[0] == 0.0);
  const auto r = skorokhod::maximal_experiment(one, fbm, 3.0, 4000, {8, 16, 32}, 5);
  CHECK(r.rhs_core == Approx(1.0));
  CHECK(r.ratios.size() == 3);
  CHECK(r.bounded);
  CHECK(r.spread < 0.2);
  const std::string j = skorokhod::to_json(r);
  CHECK(j.find("\"experiment\":\"maximal\"") != std::string::npos);
  CHECK(j.find("\"verdict\":\"bounded\"") != std::string::npos);
}
