#include "wfbm/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "wfbm/errors.hpp"
#include "wfbm/kernel.hpp"
#include "wfbm/malliavin.hpp"
#include "wfbm/sampler.hpp"
#include "wfbm/sdde.hpp"
#include "wfbm/skorokhod.hpp"
#include "wfbm/stats.hpp"

namespace wfbm {

using json = nlohmann::ordered_json;

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_real(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size() || !std::isfinite(v)) {
    throw ConfigError(key, "expected a real number, got '" + t + "'");
  }
  return v;
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw ConfigError(key, "expected a nonnegative integer, got '" + t + "'");
  }
  return v;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> parse_reals(const std::string& key, const std::string& text) {
  std::vector<double> v;
  for (const auto& s : split_list(text)) v.push_back(parse_real(key, s));
  if (v.empty()) throw ConfigError(key, "expected a comma separated list");
  return v;
}

std::vector<int> parse_ints(const std::string& key, const std::string& text) {
  std::vector<int> v;
  for (const auto& s : split_list(text)) {
    const auto u = parse_unsigned(key, s);
    if (u < 1 || u > 1u << 20) throw ConfigError(key, "refinement out of range");
    v.push_back(static_cast<int>(u));
  }
  if (v.empty()) throw ConfigError(key, "expected a comma separated list");
  return v;
}

std::string num(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::vector<std::string> ExperimentConfig::experiments() {
  return {"kernel-table", "sample", "solve", "derivative", "moments", "maximal", "density", "duality"};
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  ExperimentConfig c;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"experiment", [&](const std::string&, const std::string& v) { c.experiment = trim(v); }},
      {"output_dir", [&](const std::string&, const std::string& v) { c.output_dir = trim(v); }},
      {"params.a", [&](const std::string& k, const std::string& v) { c.a = parse_real(k, v); }},
      {"params.b", [&](const std::string& k, const std::string& v) { c.b = parse_real(k, v); }},
      {"grid.tau", [&](const std::string& k, const std::string& v) { c.tau = parse_real(k, v); }},
      {"grid.steps_per_delay",
       [&](const std::string& k, const std::string& v) {
         const auto m = parse_unsigned(k, v);
         if (m < 1 || m > 1u << 20) throw ConfigError(k, "must be in [1, 2^20]");
         c.steps_per_delay = static_cast<int>(m);
       }},
      {"grid.T", [&](const std::string& k, const std::string& v) { c.T = parse_real(k, v); }},
      {"spec.A", [&](const std::string& k, const std::string& v) { c.A = parse_real(k, v); }},
      {"spec.B", [&](const std::string& k, const std::string& v) { c.B = parse_real(k, v); }},
      {"spec.f", [&](const std::string&, const std::string& v) { c.f = trim(v); }},
      {"spec.sigma", [&](const std::string&, const std::string& v) { c.sigma = trim(v); }},
      {"spec.xi0", [&](const std::string& k, const std::string& v) { c.xi0 = parse_real(k, v); }},
      {"mc.n_paths",
       [&](const std::string& k, const std::string& v) {
         c.n_paths = static_cast<std::size_t>(parse_unsigned(k, v));
       }},
      {"mc.seed", [&](const std::string& k, const std::string& v) { c.seed = parse_unsigned(k, v); }},
      {"options.scheme",
       [&](const std::string& k, const std::string& v) {
         const auto s = trim(v);
         if (s == "euler") c.scheme = Scheme::euler;
         else if (s == "stepwise") c.scheme = Scheme::stepwise;
         else throw ConfigError(k, "expected euler or stepwise");
       }},
      {"options.representation",
       [&](const std::string& k, const std::string& v) {
         const auto s = trim(v);
         if (s == "wick") c.representation = Representation::wick;
         else if (s == "paper") c.representation = Representation::paper;
         else throw ConfigError(k, "expected wick or paper");
       }},
      {"options.derivative_mode",
       [&](const std::string& k, const std::string& v) {
         const auto s = trim(v);
         if (s == "corrected") c.derivative_mode = DerivativeMode::corrected;
         else if (s == "strict-paper" || s == "strict") c.derivative_mode = DerivativeMode::strict;
         else throw ConfigError(k, "expected corrected or strict-paper");
       }},
      {"options.p", [&](const std::string& k, const std::string& v) { c.p = parse_reals(k, v); }},
      {"options.refinements",
       [&](const std::string& k, const std::string& v) { c.refinements = parse_ints(k, v); }},
      {"options.eps", [&](const std::string& k, const std::string& v) { c.eps = parse_reals(k, v); }},
      {"options.t", [&](const std::string& k, const std::string& v) { c.t = parse_real(k, v); }},
      {"options.p_probe",
       [&](const std::string& k, const std::string& v) { c.p_probe = parse_real(k, v); }},
      {"options.s", [&](const std::string& k, const std::string& v) { c.s = parse_real(k, v); }},
      {"options.horizons",
       [&](const std::string& k, const std::string& v) { c.horizons = parse_reals(k, v); }},
      {"options.dump_paths",
       [&](const std::string& k, const std::string& v) {
         c.dump_paths = static_cast<std::size_t>(parse_unsigned(k, v));
       }},
  };
  const std::set<std::string> sections = {"params", "grid", "spec", "mc", "options"};

  std::istringstream in(text);
  std::string line, section;
  std::set<std::string> seen;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno), "bad section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!sections.count(section)) throw ConfigError(section, "unknown section");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno), "expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string full = section.empty() ? key : section + "." + key;
    const auto it = setters.find(full);
    if (it == setters.end()) throw ConfigError(full, "unknown key");
    if (!seen.insert(full).second) throw ConfigError(full, "duplicate key");
    it->second(full, line.substr(eq + 1));
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) throw ConfigError("config", "cannot open " + file.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse(ss.str());
}

void ExperimentConfig::validate() const {
  const auto names = experiments();
  if (std::find(names.begin(), names.end(), experiment) == names.end()) {
    throw ConfigError("experiment", "unknown experiment '" + experiment + "'");
  }
  WfbmParams(a, b);
  TimeGrid(tau, steps_per_delay, T);
  try {
    ScalarFunction::parse(f);
  } catch (const DomainError& e) {
    throw ConfigError("spec.f", e.what());
  }
  try {
    ScalarFunction::parse(sigma);
  } catch (const DomainError& e) {
    throw ConfigError("spec.sigma", e.what());
  }
  if (n_paths < 2) throw ConfigError("mc.n_paths", "must be >= 2");
  for (double v : p) {
    if (!(v > 0.0)) throw ConfigError("options.p", "exponents must be > 0");
  }
  for (double h : horizons) {
    if (!(h > 0.0)) throw ConfigError("options.horizons", "must be > 0");
  }
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "PASS";
    case Verdict::fail: return "FAIL";
    case Verdict::report_only: return "REPORT-ONLY";
  }
  return {};
}

bool ExperimentReport::ok() const noexcept {
  return std::none_of(checks.begin(), checks.end(),
                      [](const Check& c) { return c.verdict == Verdict::fail; });
}

namespace experiment {

namespace {

class Context {
 public:
  Context(const ExperimentConfig& c) : cfg(c), params(c.a, c.b) {
    report.experiment = c.experiment;
    std::filesystem::create_directories(c.output_dir);
  }

  void check(std::string name, bool ok, double value, std::string detail = {}) {
    report.checks.push_back({std::move(name), ok ? Verdict::pass : Verdict::fail, value, std::move(detail)});
  }
  void note(std::string name, double value, std::string detail = {}) {
    report.checks.push_back({std::move(name), Verdict::report_only, value, std::move(detail)});
  }

  template <typename Writer>
  void write(const std::string& name, Writer&& w) {
    std::ofstream os(cfg.output_dir / name, std::ios::binary);
    if (!os) throw DomainError("cannot write " + (cfg.output_dir / name).string());
    w(os);
    report.files.push_back(name);
  }

  void quantity(const std::string& name, const EstimateCI& e) {
    quantities.push_back({name, e});
  }
  void flush_quantities() {
    if (quantities.empty()) return;
    write("moments.csv", [&](std::ostream& os) {
      os << "quantity,value,std_error,n\n" << std::setprecision(17);
      for (const auto& [n, e] : quantities) os << n << ',' << e.value << ',' << e.std_error << ',' << e.n << '\n';
    });
  }

  SddeSpec spec() const {
    auto s = SddeSpec::make(cfg.A, cfg.B, ScalarFunction::parse(cfg.f),
                            ScalarFunction::parse(cfg.sigma), cfg.tau, cfg.xi0, cfg.T);
    s.validate(cfg.seed);
    return s;
  }
  TimeGrid grid() const { return TimeGrid(cfg.tau, cfg.steps_per_delay, cfg.T); }
  SolverOptions solver(std::size_t keep = 0) const {
    SolverOptions o;
    o.representation = cfg.representation;
    o.derivative_mode = cfg.derivative_mode;
    o.keep_grids = keep;
    o.workers = cfg.threads;
    return o;
  }
  double probe_time() const { return cfg.t.value_or(cfg.T); }

  const ExperimentConfig& cfg;
  WfbmParams params;
  ExperimentReport report;
  std::vector<std::pair<std::string, EstimateCI>> quantities;
};

std::string at_t(const std::string& q, double t) { return q + "(t=" + num(t) + ")"; }

void probe(Context& ctx, const SddeSpec& spec, const SolveResult& res) {
  const double t = ctx.probe_time();
  const auto gamma = malliavin::malliavin_covariance(res.derivative, res.solution.grid, t);
  const auto pr = malliavin::small_ball_probe(gamma, t, ctx.cfg.eps, ctx.cfg.p_probe);
  ctx.write("probe.json", [&](std::ostream& os) { os << malliavin::to_json(pr) << '\n'; });
  ctx.quantity(at_t("gamma", t), stats::mc_mean(gamma));
  std::string detail = "eps0=" + num(pr.eps0);
  for (std::size_t k = 0; k < pr.eps.size(); ++k) {
    detail += "; P(gamma<" + num(pr.eps[k]) + ")=" + num(pr.prob[k]) + " bound " + num(pr.bound[k]);
  }
  const double worst = *std::max_element(pr.prob.begin(), pr.prob.end());
  if (spec.sigma_floor_M0 > 0.0) {
    ctx.check("small-ball-probe", pr.pass, worst, detail);
  } else {
    ctx.note("small-ball-probe", worst, detail + (pr.pass ? "; PASS" : "; FAIL") + " (no sigma floor)");
  }
}

void run_kernel_table(Context& ctx) {
  const auto& p = ctx.params;
  const TimeGrid g = ctx.grid();
  const std::size_t n = g.size();
  RowMatrix r(static_cast<Eigen::Index>(n + 1), static_cast<Eigen::Index>(n + 1));
  for (std::size_t i = 0; i <= n; ++i) {
    for (std::size_t j = 0; j <= n; ++j) {
      r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = kernel::covariance(g.time(i), g.time(j), p);
    }
  }
  ctx.write("kernel_table.csv", [&](std::ostream& os) {
    os << "t,s,R\n" << std::setprecision(17);
    for (std::size_t i = 0; i <= n; ++i) {
      for (std::size_t j = 0; j <= n; ++j) {
        os << g.time(i) << ',' << g.time(j) << ',' << r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) << '\n';
      }
    }
  });
  const double asym = (r - r.transpose()).cwiseAbs().maxCoeff();
  ctx.check("symmetry", asym <= 1e-12 * std::max(1.0, r.cwiseAbs().maxCoeff()), asym);

  if (p.a() == 0.0) {
    const double h = p.b() + 1.0;
    double worst = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
      for (std::size_t j = 0; j <= n; ++j) {
        const double t = g.time(i), s = g.time(j);
        const double fbm = (std::pow(t, h) + std::pow(s, h) - std::pow(std::abs(t - s), h)) / h;
        worst = std::max(worst, std::abs(fbm - r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))));
      }
    }
    ctx.check("fbm-reduction", worst <= 1e-10, worst, "max |R - fBm covariance|");
  }

  const RowMatrix m = r.bottomRightCorner(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Eigen::MatrixXd(m), Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff(), hi = eig.eigenvalues().maxCoeff();
  ctx.check("positive-semidefinite", lo >= -1e-8 * hi, lo / hi, "smallest / largest eigenvalue");

  double rmin = INFINITY, rmax = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const double t = g.time(i), s = g.time(j);
      const double ratio = kernel::increment_variance(t, s, p) / (std::pow(t, p.a()) * std::pow(t - s, 1.0 + p.b()));
      rmin = std::min(rmin, ratio);
      rmax = std::max(rmax, ratio);
    }
  }
  ctx.note("increment-sandwich-envelope", rmax,
           "ratio range [" + num(rmin) + ", " + num(rmax) + "], K_ab = " + num(p.sandwich_upper()));
}

void run_sample(Context& ctx) {
  const auto& p = ctx.params;
  const TimeGrid g = ctx.grid();
  const auto factor = sampler::factorize(g, p);
  const auto e = sampler::sample(factor, ctx.cfg.n_paths, ctx.cfg.seed, ctx.cfg.threads);
  ctx.write("paths.csv", [&](std::ostream& os) { sampler::write_paths_csv(os, e, ctx.cfg.dump_paths); });
  ctx.note("jitter", factor.jitter_used);

  const std::size_t n = g.size();
  std::vector<double> prod(e.n_paths());
  auto estimate = [&](std::size_t i, std::size_t j) {
    for (std::size_t k = 0; k < prod.size(); ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      prod[k] = e.paths(kk, static_cast<Eigen::Index>(i)) * e.paths(kk, static_cast<Eigen::Index>(j));
    }
    return stats::mc_mean(prod);
  };
  const EstimateCI var_t = estimate(n, n);
  ctx.quantity(at_t("var_B", g.horizon()), var_t);
  const double z = var_t.z_score(kernel::variance(g.horizon(), p));
  ctx.check("variance-at-T", std::abs(z) <= 4.0, z, "z-score against R(T,T)");

  const std::size_t stride = std::max<std::size_t>(1, n / 8);
  double worst = 0.0;
  for (std::size_t i = stride; i <= n; i += stride) {
    for (std::size_t j = stride; j <= i; j += stride) {
      const EstimateCI c = estimate(i, j);
      worst = std::max(worst, std::abs(c.z_score(kernel::covariance(g.time(i), g.time(j), p))));
    }
  }
  ctx.check("covariance-entries", worst <= 5.0, worst, "max |z| over sub-grid entries");
}

EstimateCI column_mean(const RowMatrix& x, Eigen::Index i) {
  std::vector<double> v(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index k = 0; k < x.rows(); ++k) v[static_cast<std::size_t>(k)] = x(k, i);
  return stats::mc_mean(v);
}

void run_solve(Context& ctx) {
  const auto& p = ctx.params;
  const SddeSpec spec = ctx.spec();
  const TimeGrid g = ctx.grid();
  const auto e = sampler::sample(g, p, ctx.cfg.n_paths, ctx.cfg.seed, ctx.cfg.threads);
  const WeightTable w(g, p);
  const auto res = sdde::solve(ctx.cfg.scheme, e, spec, p, ctx.solver(), &w);
  ctx.write("solution.csv", [&](std::ostream& os) { sdde::write_solution_csv(os, res.solution, ctx.cfg.dump_paths); });

  const std::size_t n = g.size();
  std::vector<EstimateCI> means(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    means[i] = column_mean(res.solution.x, static_cast<Eigen::Index>(i));
    ctx.quantity(at_t("mean_x", g.time(i)), means[i]);
  }
  const std::vector<double> powers = ctx.cfg.p.empty() ? std::vector<double>{2.0} : ctx.cfg.p;
  for (double q : powers) {
    const auto sm = stats::sup_moment(res.solution, q);
    ctx.quantity("sup_moment_p" + num(q), sm);
    ctx.note("sup-moment-p" + num(q), sm.value);
  }

  if (spec.f.is_constant()) {
    const auto oracle = stats::mean_oracle(spec.A, spec.f(0.0), spec.xi0(0.0), g);
    double worst = 0.0;
    bool ok = true;
    for (std::size_t i = 0; i <= n; ++i) {
      const double gap = std::abs(means[i].value - oracle[i]);
      ok = ok && gap <= 4.0 * means[i].std_error + g.dt();
      worst = std::max(worst, std::abs(means[i].z_score(oracle[i])));
    }
    ctx.check("mean-identity", ok, worst, "max |z| against m' = A m + c; tolerance 4 se + dt");
  }

  if (spec.pure_linear()) {
    SolverOptions o = ctx.solver();
    std::string detail;
    double paper_gap = 0.0;
    const double target = spec.xi0(0.0) * std::exp(spec.A * g.horizon());
    for (auto rep : {Representation::wick, Representation::paper}) {
      o.representation = rep;
      const auto r = sdde::solve_stepwise(e, spec, p, o, &w);
      const auto m = column_mean(r.solution.x, static_cast<Eigen::Index>(n));
      detail += to_string(rep) + ": E x(T)=" + num(m.value) + " z=" + num(m.z_score(target)) + "; ";
      if (rep == Representation::paper) paper_gap = m.value - target;
    }
    ctx.note("prefactor-audit", paper_gap, detail + "target " + num(target));
  }
}

struct Regime {
  bool exact = false;
  std::string name;
};

void run_derivative(Context& ctx) {
  const auto& p = ctx.params;
  const SddeSpec spec = ctx.spec();
  const TimeGrid g = ctx.grid();
  const bool grids = g.size() <= 512;
  const std::size_t keep = grids ? std::min<std::size_t>(ctx.cfg.n_paths, 50) : 0;
  const auto e = sampler::sample(g, p, ctx.cfg.n_paths, ctx.cfg.seed, ctx.cfg.threads);
  const WeightTable w(g, p);
  const auto res = sdde::solve(ctx.cfg.scheme, e, spec, p, ctx.solver(keep), &w);
  const std::size_t n = g.size();

  if (grids) {
    ctx.write("derivative.csv", [&](std::ostream& os) { malliavin::write_derivative_csv(os, res.grids, 0); });

    const bool constant_sigma = spec.A == 0.0 && spec.B == 0.0 && spec.f.is_constant() &&
                                spec.sigma.is_constant();
    std::function<double(std::size_t, std::size_t)> oracle;
    std::string regime;
    if (spec.pure_linear()) {
      regime = "pure-linear";
      oracle = [&](std::size_t path, std::size_t i) {
        return spec.B * res.solution.x(static_cast<Eigen::Index>(path), static_cast<Eigen::Index>(i));
      };
    } else if (constant_sigma) {
      regime = "constant-sigma";
      oracle = [&](std::size_t, std::size_t) { return spec.sigma(0.0); };
    }
    if (oracle) {
      double err = 0.0, scale = 1.0;
      for (std::size_t path = 0; path < keep; ++path) {
        for (std::size_t i = 0; i <= n; ++i) {
          const double o = oracle(path, i);
          scale = std::max(scale, std::abs(o));
          for (std::size_t j = 0; j <= i; ++j) err = std::max(err, std::abs(res.grids.at(path, j, i) - o));
        }
      }
      const bool exact = ctx.cfg.derivative_mode == DerivativeMode::corrected &&
                         (constant_sigma || ctx.cfg.scheme == Scheme::euler);
      const std::string detail = "max |D_r x(t) - oracle| over " + std::to_string(keep) + " paths, " + regime;
      if (exact) ctx.check("derivative-oracle", err <= 1e-9 * scale, err, detail);
      else ctx.note("derivative-oracle", err, detail);
    }

    // The other derivative mode on the same solution, for comparison.
    const DerivativeMode other = ctx.cfg.derivative_mode == DerivativeMode::corrected ? DerivativeMode::strict
                                                                                      : DerivativeMode::corrected;
    const PathEnsemble head{g, e.paths.topRows(static_cast<Eigen::Index>(keep)), e.seed};
    const SolutionEnsemble sol_head{g, res.solution.x.topRows(static_cast<Eigen::Index>(keep)),
                                    res.solution.psi.topRows(static_cast<Eigen::Index>(keep)), res.solution.scheme};
    const auto alt = malliavin::propagate_first(head, spec, sol_head, p, other, ctx.cfg.threads);
    double diff = 0.0;
    for (std::size_t path = 0; path < keep; ++path) {
      for (std::size_t k = 0; k < alt.d[path].size(); ++k) {
        diff = std::max(diff, std::abs(alt.d[path][k] - res.grids.d[path][k]));
      }
    }
    ctx.note("strict-vs-corrected", diff, "max difference between derivative modes (" + to_string(other) + ")");
  } else {
    ctx.note("derivative-grid", static_cast<double>(n), "N > 512: grid dump skipped");
  }

  std::vector<double> sup(res.derivative.sup_abs);
  for (double q : {2.0, 4.0}) {
    const auto sm = stats::sup_moment(std::span<const double>(sup), q);
    ctx.quantity("sup_D_p" + num(q), sm);
  }
  probe(ctx, spec, res);
}

void run_moments(Context& ctx) {
  const auto& p = ctx.params;
  const SddeSpec spec = ctx.spec();
  const std::vector<int> ms = ctx.cfg.refinements.empty() ? std::vector<int>{8, 16, 32} : ctx.cfg.refinements;
  const std::vector<double> px = ctx.cfg.p.empty() ? std::vector<double>{2.0, 4.0, 8.0} : ctx.cfg.p;
  const std::vector<double> pd = {2.0, 4.0};
  std::vector<double> xs;
  std::map<double, std::vector<EstimateCI>> sx, sd;
  for (int m : ms) {
    const TimeGrid g(ctx.cfg.tau, m, ctx.cfg.T);
    const auto e = sampler::sample(g, p, ctx.cfg.n_paths, ctx.cfg.seed + static_cast<std::uint64_t>(m), ctx.cfg.threads);
    const auto res = sdde::solve(ctx.cfg.scheme, e, spec, p, ctx.solver());
    xs.push_back(std::log2(static_cast<double>(m)));
    for (double q : px) {
      const auto est = stats::sup_moment(res.solution, q);
      sx[q].push_back(est);
      ctx.quantity("sup_x_p" + num(q) + "_m" + std::to_string(m), est);
    }
    for (double q : pd) {
      const auto est = stats::sup_moment(std::span<const double>(res.derivative.sup_abs), q);
      sd[q].push_back(est);
      ctx.quantity("sup_D_p" + num(q) + "_m" + std::to_string(m), est);
    }
  }
  if (ms.size() < 2) {
    ctx.note("trend", 0.0, "need at least two refinements");
    return;
  }
  for (double q : px) {
    const auto tr = stats::trend_test(xs, sx[q]);
    ctx.check("sup-x-p" + num(q), tr.bounded, tr.z, "slope " + num(tr.slope) + " per doubling of m");
  }
  for (double q : pd) {
    const auto tr = stats::trend_test(xs, sd[q]);
    ctx.check("sup-D-p" + num(q), tr.bounded, tr.z, "slope " + num(tr.slope) + " per doubling of m");
  }
}

void run_maximal(Context& ctx) {
  const auto& p = ctx.params;
  const double pe = ctx.cfg.p.empty() ? 3.0 : ctx.cfg.p.front();
  const std::vector<int> ms = ctx.cfg.refinements.empty() ? std::vector<int>{8, 16, 32} : ctx.cfg.refinements;
  const std::vector<double> hs = ctx.cfg.horizons.empty() ? std::vector<double>{ctx.cfg.T} : ctx.cfg.horizons;
  json by = json::array();
  json head;
  std::vector<double> tx;
  std::vector<EstimateCI> finest;
  for (std::size_t k = 0; k < hs.size(); ++k) {
    PiecewiseConstantFn u{{0.0, hs[k]}, {1.0}};
    const auto r = skorokhod::maximal_experiment(u, p, pe, ctx.cfg.n_paths, ms, ctx.cfg.seed, ctx.cfg.threads);
    json j = json::parse(skorokhod::to_json(r));
    if (k == 0) head = j;
    by.push_back(j);
    ctx.check("maximal-T" + num(hs[k]), r.bounded, r.spread,
              "ratio spread across refinements, sup ratio " + num(r.sup_ratio));
    tx.push_back(hs[k]);
    const auto& l = r.lhs.back();
    finest.push_back({r.ratios.back(), l.std_error / r.rhs_core, l.n});
    for (std::size_t i = 0; i < ms.size(); ++i) {
      ctx.quantity("ratio_T" + num(hs[k]) + "_m" + std::to_string(ms[i]),
                   {r.ratios[i], r.lhs[i].std_error / r.rhs_core, r.lhs[i].n});
    }
  }
  if (hs.size() > 1) {
    const auto tr = stats::trend_test(tx, finest);
    bool finite = true;
    double lo = INFINITY, hi = 0.0;
    for (const auto& f : finest) {
      finite = finite && std::isfinite(f.value);
      lo = std::min(lo, f.value);
      hi = std::max(hi, f.value);
    }
    ctx.check("maximal-across-T", finite && tr.bounded, tr.z, "no upward trend of the ratio in T");
    ctx.note("maximal-across-T-spread", (hi - lo) / (0.5 * (hi + lo)), "relative spread of the ratio across T");
  }
  head["by_horizon"] = by;
  ctx.write("maximal.json", [&](std::ostream& os) { os << head.dump() << '\n'; });
}

void run_density(Context& ctx) {
  const auto& p = ctx.params;
  const SddeSpec spec = ctx.spec();
  const TimeGrid g = ctx.grid();
  const auto e = sampler::sample(g, p, ctx.cfg.n_paths, ctx.cfg.seed, ctx.cfg.threads);
  const auto res = sdde::solve(ctx.cfg.scheme, e, spec, p, ctx.solver());
  const auto ti = g.index_of(ctx.probe_time());
  if (ti < 0) throw ConfigError("options.t", "not a grid time");
  std::vector<double> xt(e.n_paths());
  for (std::size_t k = 0; k < xt.size(); ++k) xt[k] = res.solution.x(static_cast<Eigen::Index>(k), ti);

  const double h = stats::silverman_bandwidth(xt);
  const double lo = stats::quantile(xt, 0.001) - 3.0 * h, hi = stats::quantile(xt, 0.999) + 3.0 * h;
  std::vector<double> pts(201);
  for (std::size_t k = 0; k < pts.size(); ++k) pts[k] = lo + (hi - lo) * static_cast<double>(k) / 200.0;
  const auto d = stats::kde(xt, pts, h);
  ctx.write("density.csv", [&](std::ostream& os) {
    os << "x,f_hat\n" << std::setprecision(17);
    for (std::size_t k = 0; k < pts.size(); ++k) os << pts[k] << ',' << d.density[k] << '\n';
  });
  const double q1 = stats::quantile(xt, 0.1), q9 = stats::quantile(xt, 0.9);
  double fmin = INFINITY;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    if (pts[k] >= q1 && pts[k] <= q9) fmin = std::min(fmin, d.density[k]);
  }
  ctx.check("density-positive-interdecile", fmin > 0.0, fmin, "min f_hat on [q10, q90]");
  const auto coarse = stats::stability_points(xt, h);
  const double agree = stats::kde_sign_agreement(xt, coarse, h);
  ctx.check("kde-bandwidth-stability", agree >= 0.9, agree,
            "sign agreement of second differences, h vs 2h, on " + std::to_string(coarse.size()) + " points spaced 2h");
  ctx.note("kde-mass", d.mass(), "trapezoid mass on the window");
  std::string sweep;
  for (double f : {0.5, 1.0, 2.0}) {
    const auto ds = stats::kde(xt, pts, f * h);
    double sup = 0.0;
    for (std::size_t k = 0; k < pts.size(); ++k) sup = std::max(sup, std::abs(ds.density[k] - d.density[k]));
    sweep += "h*" + num(f) + "=" + num(f * h) + " sup diff " + num(sup) + "; ";
  }
  ctx.note("kde-bandwidth-sweep", h, sweep);
  probe(ctx, spec, res);
}

void run_duality(Context& ctx) {
  const auto& p = ctx.params;
  const TimeGrid g = ctx.grid();
  const double s = ctx.cfg.s.value_or(0.5 * g.horizon());
  const double t = ctx.probe_time();
  if (g.index_of(s) < 0) throw ConfigError("options.s", "not a grid time");
  if (g.index_of(t) < 0) throw ConfigError("options.t", "not a grid time");
  const auto e = sampler::sample(g, p, ctx.cfg.n_paths, ctx.cfg.seed, ctx.cfg.threads);
  const auto u = PiecewiseConstantFn::indicator(0.0, s);

  const auto dual = skorokhod::duality_check(t, u, e, p);
  ctx.quantity("E[B(t)delta(u)]", dual.estimate);
  ctx.check("duality", std::abs(dual.z) <= 4.0, dual.z, "target <1_[0,t], 1_[0,s]>_H = " + num(dual.target));

  const auto delta = skorokhod::deterministic_integral(u, e);
  std::vector<double> sq(delta.size());
  for (std::size_t k = 0; k < sq.size(); ++k) sq[k] = delta[k] * delta[k];
  const auto v = stats::mc_mean(sq);
  const auto law = skorokhod::det_law(u, p);
  ctx.quantity("E[delta(u)^2]", v);
  const double zi = v.z_score(law.variance);
  ctx.check("isometry", std::abs(zi) <= 5.0, zi, "target ||u||_H^2 = " + num(law.variance));

  const std::vector<int> ms = ctx.cfg.refinements.empty() ? std::vector<int>{4, 8, 16, 32} : ctx.cfg.refinements;
  std::vector<double> errs;
  std::string detail;
  for (int m : ms) {
    const TimeGrid gm = TimeGrid::over_horizon(g.horizon(), m);
    const auto em = sampler::sample(gm, p, ctx.cfg.n_paths, ctx.cfg.seed + static_cast<std::uint64_t>(m), ctx.cfg.threads);
    const WeightTable w(gm, p);
    double corr = 0.0;
    for (std::size_t i = 0; i < gm.size(); ++i) corr += w.past(i);
    const double vt = kernel::variance(gm.horizon(), p);
    std::vector<double> ito(em.n_paths()), sq_err(em.n_paths());
    for (std::size_t k = 0; k < ito.size(); ++k) {
      const auto row = em.paths.row(static_cast<Eigen::Index>(k));
      double acc = 0.0;
      for (Eigen::Index i = 0; i + 1 < row.size(); ++i) acc += row(i) * (row(i + 1) - row(i));
      ito[k] = acc - corr;
      const double bt = row(row.size() - 1);
      const double d = ito[k] - 0.5 * (bt * bt - vt);
      sq_err[k] = d * d;
    }
    const double l2 = std::sqrt(stats::mc_mean(sq_err).value);
    errs.push_back(l2);
    detail += "m=" + std::to_string(m) + ": " + num(l2) + "; ";
    if (m == ms.back()) {
      const auto mean = stats::mc_mean(ito);
      ctx.quantity("E[int B dB]", mean);
      ctx.check("zero-mean-BdB", std::abs(mean.z_score(0.0)) <= 4.0, mean.z_score(0.0));
    }
  }
  bool decreasing = true;
  for (std::size_t k = 1; k < errs.size(); ++k) decreasing = decreasing && errs[k] < errs[k - 1];
  ctx.check("ito-oracle", decreasing, errs.back(), "L2 error against (B(T)^2 - R(T,T)) / 2: " + detail);
}

json config_echo(const ExperimentConfig& c) {
  json j;
  j["experiment"] = c.experiment;
  j["params"] = {{"a", c.a}, {"b", c.b}};
  j["grid"] = {{"tau", c.tau}, {"steps_per_delay", c.steps_per_delay}, {"T", c.T}};
  j["spec"] = {{"A", c.A}, {"B", c.B}, {"f", c.f}, {"sigma", c.sigma}, {"xi0", c.xi0}};
  j["mc"] = {{"n_paths", c.n_paths}, {"seed", c.seed}};
  json o;
  o["scheme"] = to_string(c.scheme);
  o["representation"] = to_string(c.representation);
  o["derivative_mode"] = to_string(c.derivative_mode);
  o["p"] = c.p;
  o["refinements"] = c.refinements;
  o["eps"] = c.eps;
  o["t"] = c.t ? json(*c.t) : json(nullptr);
  o["p_probe"] = c.p_probe;
  o["s"] = c.s ? json(*c.s) : json(nullptr);
  o["horizons"] = c.horizons;
  o["dump_paths"] = c.dump_paths;
  j["options"] = o;
  return j;
}

}  // namespace

ExperimentReport run(const ExperimentConfig& config) {
  config.validate();
  Context ctx(config);
  const std::string& x = config.experiment;
  if (x == "kernel-table") run_kernel_table(ctx);
  else if (x == "sample") run_sample(ctx);
  else if (x == "solve") run_solve(ctx);
  else if (x == "derivative") run_derivative(ctx);
  else if (x == "moments") run_moments(ctx);
  else if (x == "maximal") run_maximal(ctx);
  else if (x == "density") run_density(ctx);
  else if (x == "duality") run_duality(ctx);
  ctx.flush_quantities();

  const json echo = config_echo(config);
  ctx.report.config_json = echo.dump();
  json s;
  s["experiment"] = x;
  s["config"] = echo;
  json checks = json::array();
  for (const auto& c : ctx.report.checks) {
    checks.push_back({{"name", c.name}, {"verdict", to_string(c.verdict)}, {"value", c.value}, {"detail", c.detail}});
  }
  s["checks"] = checks;
  auto files = ctx.report.files;
  files.push_back("summary.json");
  s["files"] = files;
  s["status"] = ctx.report.ok() ? "PASS" : "FAIL";
  ctx.write("summary.json", [&](std::ostream& os) { os << s.dump(2) << '\n'; });
  return ctx.report;
}

}  // namespace experiment
}  // namespace wfbm
