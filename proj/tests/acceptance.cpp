// Acceptance run: one PASS/FAIL line per criterion.
//   acceptance            run all
//   acceptance --only N   run criterion N

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "wfbm/experiment.hpp"
#include "wfbm/malliavin.hpp"
#include "wfbm/sdde.hpp"
#include "wfbm/skorokhod.hpp"
#include "wfbm/stats.hpp"

using namespace wfbm;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

std::string list(const std::vector<double>& v, int prec = 4) {
  std::string s = "[";
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? ", " : "") + fmt(v[k], prec);
  return s + "]";
}

bool strictly_decreasing(const std::vector<double>& e, double floor = 0.0) {
  for (std::size_t k = 1; k < e.size(); ++k) {
    if (!(e[k] < e[k - 1] || e[k] <= floor)) return false;
  }
  return true;
}

std::vector<double> column(const RowMatrix& x, Eigen::Index i) {
  std::vector<double> v(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index k = 0; k < x.rows(); ++k) v[static_cast<std::size_t>(k)] = x(k, i);
  return v;
}

SddeSpec benchmark(double B = 0.3) {
  return SddeSpec::make(-0.5, B, ScalarFunction::constant(0.2), ScalarFunction::sin_shifted(0.5, 0.1), 0.25, 1.0,
                        1.0);
}

SddeSpec linear_spec(double A, double B, double f, double sigma) {
  return SddeSpec::make(A, B, ScalarFunction::constant(f), ScalarFunction::constant(sigma), 0.25, 1.0, 1.0);
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

PathEnsemble restrict_to(const PathEnsemble& fine, const TimeGrid& g) {
  const auto stride = static_cast<Eigen::Index>(fine.grid.size() / g.size());
  RowMatrix paths(fine.paths.rows(), static_cast<Eigen::Index>(g.size()) + 1);
  for (Eigen::Index i = 0; i < paths.cols(); ++i) paths.col(i) = fine.paths.col(i * stride);
  return {g, paths, fine.seed};
}

// 1. covariance for a = 0 against the fBm closed form
Outcome fbm_reduction() {
  double worst = 0.0;
  for (double b : {0.2, 0.5, 0.8}) {
    const WfbmParams p(0.0, b);
    for (int i = 1; i <= 20; ++i) {
      for (int j = 1; j <= 20; ++j) {
        const double t = 0.05 * i, s = 0.05 * j;
        worst = std::max(worst, std::abs(kernel::covariance(t, s, p) - oracle::fbm_covariance(t, s, b)));
      }
    }
  }
  return {worst <= 1e-10, "max |R - fBm| = " + fmt(worst, 3) + " over b in {0.2, 0.5, 0.8}, 20x20"};
}

// 2. double integral of phi and the H inner product of indicators against R
Outcome kernel_consistency() {
  double worst = 0.0;
  for (auto [a, b] : {std::pair{0.0, 0.5}, std::pair{0.5, 0.25}, std::pair{-0.3, 0.6}}) {
    const WfbmParams p(a, b);
    for (double t : {0.3, 0.7, 1.0}) {
      worst = std::max(worst, std::abs(oracle::inner({0.0, t}, {1.0}, {0.0, t}, {1.0}, a, b) - kernel::variance(t, p)));
      for (double s : {0.2, 0.5, 1.0}) {
        const double h = kernel::hilbert_inner(PiecewiseConstantFn::indicator(0.0, s),
                                               PiecewiseConstantFn::indicator(0.0, t), p);
        worst = std::max(worst, std::abs(h - kernel::covariance(t, s, p)));
        worst = std::max(worst, std::abs(h - oracle::covariance(t, s, a, b)));
      }
    }
  }
  return {worst <= 1e-6, "max deviation " + fmt(worst, 3) + " for (a,b) in {(0,.5), (.5,.25), (-.3,.6)}"};
}

// 3. empirical covariance of sampled paths
Outcome sampling_law() {
  const std::size_t n = 10000;
  double worst = 0.0;
  double var_z = 0.0;
  for (auto [a, b] : {std::pair{0.0, 0.5}, std::pair{0.5, 0.25}}) {
    const WfbmParams p(a, b);
    const TimeGrid g = TimeGrid::over_horizon(1.0, 64);
    const auto e = sampler::sample(g, p, n, 2024);
    std::vector<double> prod(n);
    for (Eigen::Index i = 1; i <= 64; ++i) {
      for (Eigen::Index j = 1; j <= i; ++j) {
        for (std::size_t k = 0; k < n; ++k) {
          const auto kk = static_cast<Eigen::Index>(k);
          prod[k] = e.paths(kk, i) * e.paths(kk, j);
        }
        const auto est = stats::mc_mean(prod);
        const double z = est.z_score(kernel::covariance(g.time(static_cast<std::size_t>(i)),
                                                        g.time(static_cast<std::size_t>(j)), p));
        worst = std::max(worst, std::abs(z));
        if (a == 0.0 && i == 64 && j == 64) var_z = est.z_score(4.0 / 3.0);
      }
    }
  }
  return {worst <= 5.0 && std::abs(var_z) <= 3.0,
          "max |z| over covariance entries " + fmt(worst, 3) + ", Var B(1) z = " + fmt(var_z, 3) + " (n=1e4, N=64)"};
}

// 4. increment variance ratio across refinements
Outcome increment_sandwich() {
  bool ok = true;
  std::string detail;
  for (auto [a, b] : {std::pair{0.0, 0.5}, std::pair{0.5, 0.25}}) {
    const WfbmParams p(a, b);
    std::vector<double> lo, hi;
    for (int m : {8, 16, 32}) {
      double rmin = INFINITY, rmax = 0.0;
      for (int i = 1; i <= m; ++i) {
        for (int j = 0; j < i; ++j) {
          const double t = static_cast<double>(i) / m, s = static_cast<double>(j) / m;
          const double r = kernel::increment_variance(t, s, p) / (std::pow(t, a) * std::pow(t - s, 1.0 + b));
          rmin = std::min(rmin, r);
          rmax = std::max(rmax, r);
        }
      }
      lo.push_back(rmin);
      hi.push_back(rmax);
    }
    // the interval seen at m = 8 must hold, to 10%, at every finer grid
    for (std::size_t k = 0; k < lo.size(); ++k) {
      ok = ok && std::isfinite(hi[k]) && lo[k] > 0.0 && lo[k] >= 0.9 * lo[0] && hi[k] <= 1.1 * hi[0];
    }
    detail += "(a,b)=(" + fmt(a) + "," + fmt(b) + "): min " + list(lo) + " max " + list(hi) +
              "; REPORT-ONLY envelope K_ab = " + fmt(p.sandwich_upper()) + ". ";
  }
  return {ok, detail};
}

// 5. duality, isometry, and the Ito-formula oracle for int B dB
Outcome duality_isometry() {
  const WfbmParams p(0.5, 0.25);
  const TimeGrid g(0.25, 8, 1.0);
  const auto e = sampler::sample(g, p, 20000, 55);
  const auto d = skorokhod::duality_check(1.0, PiecewiseConstantFn::indicator(0.0, 0.5), e, p);
  const PiecewiseConstantFn w{{0.0, 0.25, 0.75, 1.0}, {2.0, -1.0, 0.5}};
  const auto delta = skorokhod::deterministic_integral(w, e);
  std::vector<double> sq(delta.size());
  for (std::size_t k = 0; k < sq.size(); ++k) sq[k] = delta[k] * delta[k];
  const double z_iso = stats::mc_mean(sq).z_score(skorokhod::det_law(w, p).variance);
  const double z_mean = stats::mc_mean(delta).z_score(0.0);

  std::vector<double> err;
  for (int m : {4, 8, 16, 32}) {
    const TimeGrid gm = TimeGrid::over_horizon(1.0, m);
    const auto em = sampler::sample(gm, p, 4000, 77);
    WickIntegrand u{em.paths, {}};
    RowMatrix dv = RowMatrix::Zero(m + 1, m + 1);
    for (int i = 0; i <= m; ++i) {
      for (int j = 0; j < i; ++j) dv(j, i) = 1.0;
    }
    u.dvalues.assign(em.n_paths(), dv);
    const auto out = skorokhod::wick_sum(u, em, p);
    const double v = kernel::variance(1.0, p);
    double s = 0.0;
    for (Eigen::Index k = 0; k < out.partials.rows(); ++k) {
      const double b = em.paths(k, m);
      s += std::pow(out.partials(k, m) - 0.5 * (b * b - v), 2);
    }
    err.push_back(std::sqrt(s / static_cast<double>(out.partials.rows())));
  }
  const bool ok = std::abs(d.z) <= 4.0 && std::abs(z_iso) <= 4.0 && std::abs(z_mean) <= 4.0 && strictly_decreasing(err);
  return {ok, "duality z = " + fmt(d.z, 3) + ", isometry z = " + fmt(z_iso, 3) + ", zero-mean z = " + fmt(z_mean, 3) +
                  " (n=2e4); Ito L2 error over m=4..32 " + list(err, 3)};
}

// 6. maximal inequality ratio for u = 1
Outcome maximal_inequality() {
  const WfbmParams p(0.0, 0.5);
  std::vector<double> finest, spreads;
  bool ok = true;
  for (double T : {0.5, 1.0, 2.0}) {
    const auto r = skorokhod::maximal_experiment(PiecewiseConstantFn::indicator(0.0, T), p, 3.0, 10000, {8, 16, 32}, 66);
    ok = ok && r.bounded;
    spreads.push_back(r.spread);
    finest.push_back(r.ratios.back());
  }
  const double lo = *std::min_element(finest.begin(), finest.end());
  const double hi = *std::max_element(finest.begin(), finest.end());
  const double across = (hi - lo) / (0.5 * (hi + lo));
  ok = ok && across < 0.2;
  return {ok, "spread across refinements per T " + list(spreads, 3) + "; ratio at T = 0.5, 1, 2 " + list(finest) +
                  ", spread across T " + fmt(across, 3) + " (needs < 0.2)"};
}

// 7. mean identity for both schemes; pure linear prefactor audit
Outcome mean_identity() {
  const WfbmParams p(0.0, 0.5);
  const auto spec = benchmark();
  const TimeGrid g(0.25, 16, 1.0);
  const auto e = sampler::sample(g, p, 20000, 7);
  const WeightTable w(g, p);
  const auto oracle = stats::mean_oracle(-0.5, 0.2, 1.0, g);
  bool ok = true;
  std::string detail;
  for (Scheme s : {Scheme::euler, Scheme::stepwise}) {
    const auto x = sdde::solve(s, e, spec, p, {}, &w).solution.x;
    double worst = 0.0;
    for (std::size_t i = 0; i <= g.size(); ++i) {
      worst = std::max(worst, std::abs(stats::mc_mean(column(x, static_cast<Eigen::Index>(i))).z_score(oracle[i])));
    }
    ok = ok && worst <= 4.0;
    detail += to_string(s) + " max |z| = " + fmt(worst, 3) + "; ";
  }
  const auto lin = linear_spec(-0.5, 0.3, 0.0, 0.0);
  SolverOptions paper;
  paper.representation = Representation::paper;
  const auto xw = sdde::solve_stepwise(e, lin, p, {}, &w).solution.x;
  const auto xp = sdde::solve_stepwise(e, lin, p, paper, &w).solution.x;
  const double target = std::exp(-0.5);
  detail += "REPORT-ONLY pure-linear audit at t=1: wick z = " +
            fmt(stats::mc_mean(column(xw, 64)).z_score(target), 3) +
            ", paper z = " + fmt(stats::mc_mean(column(xp, 64)).z_score(target), 3);
  return {ok, detail};
}

// 8. second moment of the pure linear Wick solution
Outcome second_moment() {
  const WfbmParams p(0.0, 0.5);
  const TimeGrid g(0.25, 16, 1.0);
  const auto e = sampler::sample(g, p, 20000, 8);
  const auto x = sdde::solve_stepwise(e, linear_spec(0.0, 0.3, 0.0, 0.0), p).solution.x;
  auto v = column(x, 64);
  for (auto& y : v) y *= y;
  const double target = std::exp(0.09 * kernel::variance(1.0, p));
  const auto est = stats::mc_mean(v);
  const double z = est.z_score(target);
  return {std::abs(z) <= 4.0, "E x(1)^2 = " + fmt(est.value, 5) + " +- " + fmt(est.std_error, 2) + " vs " +
                                  fmt(target, 5) + ", z = " + fmt(z, 3)};
}

// 9. derivative against the closed forms; strict mode discrepancy
Outcome derivative_oracles() {
  const WfbmParams p(0.0, 0.5);
  auto max_err = [](const SolveResult& r, auto want) {
    double worst = 0.0;
    for (std::size_t k = 0; k < r.grids.n_paths(); ++k) {
      for (std::size_t i = 0; i <= r.grids.grid.size(); ++i) {
        for (std::size_t j = 0; j <= i; ++j) worst = std::max(worst, std::abs(r.grids.at(k, j, i) - want(k, i)));
      }
    }
    return worst;
  };
  std::vector<double> e_const_step, e_const_euler, e_lin_step, e_lin_euler, e_strict;
  // coarse grids see the fine paths at their own points, so the refinements are coupled
  const auto fine = sampler::sample(TimeGrid(0.25, 32, 1.0), p, 200, 9);
  for (int m : {4, 8, 16, 32}) {
    const TimeGrid g(0.25, m, 1.0);
    const auto e = restrict_to(fine, g);
    SolverOptions o;
    o.keep_grids = 200;
    const auto cs = linear_spec(0.0, 0.0, 0.0, 0.4);
    const auto konst = [](std::size_t, std::size_t) { return 0.4; };
    e_const_step.push_back(max_err(sdde::solve_stepwise(e, cs, p, o), konst));
    e_const_euler.push_back(max_err(sdde::solve_euler(e, cs, p, o), konst));
    SolverOptions strict = o;
    strict.derivative_mode = DerivativeMode::strict;
    e_strict.push_back(max_err(sdde::solve_euler(e, cs, p, strict), konst));

    const auto ls = linear_spec(0.0, 0.3, 0.0, 0.0);
    for (Scheme s : {Scheme::stepwise, Scheme::euler}) {
      const auto r = sdde::solve(s, e, ls, p, o);
      const double err = max_err(r, [&](std::size_t k, std::size_t i) {
        return 0.3 * r.solution.x(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i));
      });
      (s == Scheme::stepwise ? e_lin_step : e_lin_euler).push_back(err);
    }
  }
  const double tiny = 1e-12;
  const bool ok = strictly_decreasing(e_const_step, tiny) && strictly_decreasing(e_const_euler, tiny) &&
                  strictly_decreasing(e_lin_step, tiny) && strictly_decreasing(e_lin_euler, tiny) &&
                  *std::min_element(e_strict.begin(), e_strict.end()) > 0.1;
  return {ok, "constant sigma: stepwise " + list(e_const_step, 2) + ", euler " + list(e_const_euler, 2) +
                  "; pure linear: stepwise " + list(e_lin_step, 3) + ", euler " + list(e_lin_euler, 2) +
                  "; strict-paper discrepancy " + list(e_strict, 3) + " (m = 4..32)"};
}

ExperimentConfig base_config(const std::string& experiment, double B) {
  ExperimentConfig c;
  c.experiment = experiment;
  c.tau = 0.25;
  c.steps_per_delay = 16;
  c.T = 1.0;
  c.A = -0.5;
  c.B = B;
  c.f = "const(0.2)";
  c.sigma = "sin-shifted(0.5,0.1)";
  c.seed = 10;
  return c;
}

fs::path out_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("wfbm_acceptance_" + name);
  fs::remove_all(d);
  return d;
}

// 10. sup-moment trends through the moments experiment
Outcome moment_boundedness() {
  auto c = base_config("moments", 0.3);
  c.n_paths = 4000;
  c.output_dir = out_dir("moments");
  const auto r = experiment::run(c);
  std::string detail;
  bool ok = true;
  for (const auto& ch : r.checks) {
    if (ch.verdict == Verdict::report_only) continue;
    ok = ok && ch.verdict == Verdict::pass;
    detail += ch.name + " z=" + fmt(ch.value, 3) + " ";
  }
  return {ok && !r.checks.empty(), detail + "(n=4000, m in {8,16,32})"};
}

// 11. small-ball probe and density heuristics
Outcome density_probe() {
  const WfbmParams p(0.0, 0.5);
  const TimeGrid g(0.25, 16, 1.0);
  const auto e = sampler::sample(g, p, 20000, 11);
  const WeightTable w(g, p);
  const std::vector<double> eps{0.1, 0.05, 0.01};

  const auto hyp = benchmark(0.0);
  const auto r = sdde::solve_euler(e, hyp, p, {}, &w);
  const auto good = malliavin::small_ball_probe(malliavin::malliavin_covariance(r.derivative, g, 1.0), 1.0, eps, 2.0);

  const auto degenerate = linear_spec(-0.5, 0.0, 0.2, 0.0);
  const auto rd = sdde::solve_euler(e, degenerate, p, {}, &w);
  const auto bad = malliavin::small_ball_probe(malliavin::malliavin_covariance(rd.derivative, g, 1.0), 1.0, eps, 2.0);

  const auto x1 = column(r.solution.x, 64);
  std::vector<double> sorted = x1;
  const double q1 = stats::quantile(sorted, 0.1), q9 = stats::quantile(sorted, 0.9);
  std::vector<double> mid;
  for (int k = 0; k <= 100; ++k) mid.push_back(q1 + (q9 - q1) * k / 100.0);
  const auto dens = stats::kde(x1, mid);
  const double fmin = *std::min_element(dens.density.begin(), dens.density.end());
  const double h = stats::silverman_bandwidth(x1);
  const double agree = stats::kde_sign_agreement(x1, stats::stability_points(x1, h), h);

  const auto rb = sdde::solve_euler(e, benchmark(0.3), p, {}, &w);
  const auto bench = malliavin::small_ball_probe(malliavin::malliavin_covariance(rb.derivative, g, 1.0), 1.0, eps, 2.0);

  const bool ok = good.pass && !bad.pass && fmin > 0.0 && agree >= 0.9;
  return {ok, "sigma-floor spec (B=0, M0=0.4): P(gamma<eps) " + list(good.prob, 3) + " -> " +
                  (good.pass ? "PASS" : "FAIL") + "; degenerate: " + list(bad.prob, 3) + " -> " +
                  (bad.pass ? "PASS" : "FAIL") + "; KDE min on inter-decile " + fmt(fmin, 3) +
                  ", sign agreement " + fmt(agree, 3) + "; REPORT-ONLY B=0.3: " + list(bench.prob, 3) + " -> " +
                  (bench.pass ? "PASS" : "FAIL")};
}

// 12. byte-identical outputs across reruns and worker counts
Outcome determinism() {
  std::vector<ExperimentConfig> configs;
  for (const char* x : {"kernel-table", "sample", "solve", "derivative", "density", "duality", "maximal", "moments"}) {
    auto c = base_config(x, 0.3);
    c.steps_per_delay = 8;
    c.n_paths = 400;
    if (std::string(x) == "duality") {
      c.a = 0.5;
      c.b = 0.25;
    }
    configs.push_back(c);
  }
  std::size_t compared = 0;
  std::vector<std::string> mismatched;
  for (auto c : configs) {
    std::vector<fs::path> dirs;
    std::vector<ExperimentReport> reports;
    for (unsigned threads : {1u, 4u, 4u}) {
      c.threads = threads;
      c.output_dir = out_dir(c.experiment + "_" + std::to_string(dirs.size()));
      reports.push_back(experiment::run(c));
      dirs.push_back(c.output_dir);
    }
    for (std::size_t k = 1; k < dirs.size(); ++k) {
      if (reports[k].files != reports[0].files) mismatched.push_back(c.experiment + ":manifest");
      for (const auto& f : reports[0].files) {
        ++compared;
        if (slurp(dirs[0] / f) != slurp(dirs[k] / f)) mismatched.push_back(c.experiment + "/" + f);
      }
    }
  }
  std::string detail = std::to_string(compared) + " file comparisons over 8 experiments, threads {1,4,4}";
  for (const auto& m : mismatched) detail += "; differs: " + m;
  return {mismatched.empty() && compared > 0, detail};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "fbm-reduction", fbm_reduction},
      {2, "kernel-consistency", kernel_consistency},
      {3, "sampling-law", sampling_law},
      {4, "increment-sandwich", increment_sandwich},
      {5, "duality-isometry", duality_isometry},
      {6, "maximal-inequality", maximal_inequality},
      {7, "solver-mean-identity", mean_identity},
      {8, "pure-linear-second-moment", second_moment},
      {9, "derivative-oracles", derivative_oracles},
      {10, "moment-boundedness", moment_boundedness},
      {11, "density-probe", density_probe},
      {12, "determinism", determinism},
  };
  int only = 0;
  for (int k = 1; k < argc; ++k) {
    if (std::strcmp(argv[k], "--only") == 0 && k + 1 < argc) {
      only = std::atoi(argv[++k]);
    } else {
      std::cerr << "usage: acceptance [--only N]\n";
      return 2;
    }
  }
  bool ok = true;
  for (const auto& c : all) {
    if (only && c.id != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << c.id << ' ' << c.name << " (" << o.detail << ") ["
              << fmt(secs, 3) << " s]" << std::endl;
    ok = ok && o.pass;
  }
  return ok ? 0 : 1;
}
