#include "wfbm/malliavin.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include <json.hpp>

#include "wfbm/errors.hpp"
#include "wfbm/parallel.hpp"

namespace wfbm {

namespace {

double trapezoid_sq(std::span<const double> row, double dt) noexcept {
  if (row.size() < 2) return 0.0;
  double s = 0.0;
  for (double v : row) s += v * v;
  s -= 0.5 * (row.front() * row.front() + row.back() * row.back());
  return s * dt;
}

}  // namespace

DerivativePropagator::DerivativePropagator(const WeightTable& w, const SddeSpec& spec,
                                           DerivativeMode mode)
    : w_(w),
      spec_(spec),
      mode_(mode),
      m_(w.grid().steps_per_delay()),
      dt_(w.grid().dt()),
      history_(static_cast<std::size_t>(m_)),
      d_(DerivativeGrid::packed_size(w.grid().size() + 1)) {
  for (long k = 0; k < m_; ++k) {
    history_[static_cast<std::size_t>(k)] = spec.xi0(static_cast<double>(k - m_) * dt_);
  }
}

double DerivativePropagator::diagonal(std::span<const double> x, std::size_t i) const noexcept {
  double v = spec_.B * x[i];
  if (mode_ == DerivativeMode::corrected) {
    v += spec_.sigma(state(x, static_cast<long>(i) - m_));
  }
  return v;
}

void DerivativePropagator::start(std::span<const double> x) {
  std::fill(d_.begin(), d_.end(), 0.0);
  d_[0] = diagonal(x, 0);
}

double DerivativePropagator::contraction(std::size_t n) const noexcept {
  const auto r = row(n);
  const auto wr = w_.row(n);
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) s += r[j] * wr[j];
  return s;
}

std::pair<double, double> DerivativePropagator::delayed_contraction(std::size_t n) const noexcept {
  const long nd = static_cast<long>(n) - m_;
  if (nd <= 0) return {0.0, 0.0};
  const auto r = row(static_cast<std::size_t>(nd));
  const auto wr = w_.row(n);
  double e = 0.0, c = 0.0;
  for (std::size_t j = 0; j < static_cast<std::size_t>(nd); ++j) {
    e += r[j] * wr[j];
    c += wr[j];
  }
  return {e, c};
}

void DerivativePropagator::advance(std::size_t n, std::span<const double> x, double dB) {
  const long nd = static_cast<long>(n) - m_;
  const double xd = state(x, nd);
  const double fp = spec_.f.d1(xd);
  const double sp = spec_.sigma.d1(xd);
  const double spp = spec_.sigma.d2(xd);
  const double A = spec_.A, B = spec_.B;
  const double c = w_.past(n);
  const auto [e, cp] = delayed_contraction(n);

  const double* cur = d_.data() + DerivativeGrid::index(n, 0);
  double* next = d_.data() + DerivativeGrid::index(n + 1, 0);
  const double* delayed = nd >= 0 ? d_.data() + DerivativeGrid::index(static_cast<std::size_t>(nd), 0)
                                  : nullptr;
  const double lin = 1.0 + A * dt_ + B * dB - B * B * c;
  const double dcoef = fp * dt_ + sp * dB - spp * e - sp * B * cp;
  for (std::size_t j = 0; j <= n; ++j) {
    const double vd = (delayed && static_cast<long>(j) <= nd) ? delayed[j] : 0.0;
    next[j] = cur[j] * lin + vd * dcoef;
  }
  next[n + 1] = diagonal(x, n + 1);
  if (mode_ == DerivativeMode::strict) {
    const long j = static_cast<long>(n + 1) - m_;
    if (j >= 0) next[j] += spec_.sigma(state(x, j - m_));
  }
}

double DerivativePropagator::gamma(std::size_t i) const noexcept { return trapezoid_sq(row(i), dt_); }

double DerivativePropagator::sup_abs() const noexcept {
  double m = 0.0;
  for (double v : d_) m = std::max(m, std::abs(v));
  return m;
}

namespace malliavin {

namespace {

void check_solution(const PathEnsemble& ensemble, const SddeSpec& spec,
                    const SolutionEnsemble& sol) {
  if (sol.x.rows() == 0) throw DomainError("derivative propagation needs a solved ensemble");
  if (!(sol.grid == ensemble.grid) || sol.x.rows() != ensemble.paths.rows()) {
    throw DomainError("solution was not produced on this ensemble");
  }
  if (std::abs(spec.tau - ensemble.grid.tau()) > 1e-12 * spec.tau) {
    throw DomainError("spec delay does not match the grid delay");
  }
}

template <typename Sink>
void run_paths(const PathEnsemble& ensemble, const SddeSpec& spec, const SolutionEnsemble& sol,
               const WeightTable& w, DerivativeMode mode, unsigned workers, Sink&& sink) {
  const std::size_t n = ensemble.grid.size();
  parallel_blocks(ensemble.n_paths(), workers, [&](unsigned, std::size_t begin, std::size_t end) {
    DerivativePropagator prop(w, spec, mode);
    for (std::size_t path = begin; path < end; ++path) {
      const auto pi = static_cast<Eigen::Index>(path);
      std::span<const double> x(sol.x.data() + pi * sol.x.cols(), n + 1);
      std::span<const double> b(ensemble.paths.data() + pi * ensemble.paths.cols(), n + 1);
      prop.start(x);
      for (std::size_t k = 0; k < n; ++k) prop.advance(k, x, b[k + 1] - b[k]);
      sink(path, prop);
    }
  });
}

}  // namespace

DerivativeGrid propagate_first(const PathEnsemble& ensemble, const SddeSpec& spec,
                               const SolutionEnsemble& sol, const WfbmParams& p,
                               DerivativeMode mode, unsigned workers) {
  check_solution(ensemble, spec, sol);
  if (ensemble.grid.size() > 512) throw DomainError("derivative grids need N <= 512");
  const WeightTable w(ensemble.grid, p);
  DerivativeGrid g{ensemble.grid, std::vector<std::vector<double>>(ensemble.n_paths())};
  run_paths(ensemble, spec, sol, w, mode, workers,
            [&](std::size_t path, const DerivativePropagator& prop) { g.d[path] = prop.packed(); });
  return g;
}

DerivativeSummary summarize_first(const PathEnsemble& ensemble, const SddeSpec& spec,
                                  const SolutionEnsemble& sol, const WeightTable& w,
                                  DerivativeMode mode, unsigned workers) {
  check_solution(ensemble, spec, sol);
  const std::size_t n = ensemble.grid.size();
  DerivativeSummary s{RowMatrix::Zero(sol.x.rows(), static_cast<Eigen::Index>(n) + 1),
                      std::vector<double>(ensemble.n_paths())};
  run_paths(ensemble, spec, sol, w, mode, workers,
            [&](std::size_t path, const DerivativePropagator& prop) {
              for (std::size_t i = 0; i <= n; ++i) {
                s.gamma(static_cast<Eigen::Index>(path), static_cast<Eigen::Index>(i)) = prop.gamma(i);
              }
              s.sup_abs[path] = prop.sup_abs();
            });
  return s;
}

std::vector<double> malliavin_covariance(const DerivativeGrid& dgrid, double t) {
  const long i = dgrid.grid.index_of(t);
  if (i < 0) throw DomainError("malliavin_covariance: t is not a grid time");
  const auto ii = static_cast<std::size_t>(i);
  std::vector<double> g(dgrid.n_paths());
  for (std::size_t path = 0; path < g.size(); ++path) {
    g[path] = trapezoid_sq({dgrid.d[path].data() + DerivativeGrid::index(ii, 0), ii + 1},
                           dgrid.grid.dt());
  }
  return g;
}

std::vector<double> malliavin_covariance(const DerivativeSummary& s, const TimeGrid& grid,
                                         double t) {
  const long i = grid.index_of(t);
  if (i < 0) throw DomainError("malliavin_covariance: t is not a grid time");
  std::vector<double> g(static_cast<std::size_t>(s.gamma.rows()));
  for (std::size_t path = 0; path < g.size(); ++path) {
    g[path] = s.gamma(static_cast<Eigen::Index>(path), i);
  }
  return g;
}

ProbeReport small_ball_probe(std::span<const double> gamma, double t,
                             const std::vector<double>& epsilons, double p_exp) {
  if (gamma.empty()) throw DomainError("small_ball_probe: no samples");
  if (epsilons.empty()) throw DomainError("small_ball_probe: no epsilons");
  for (std::size_t k = 0; k < epsilons.size(); ++k) {
    if (!(epsilons[k] > 0.0) || (k > 0 && !(epsilons[k] < epsilons[k - 1]))) {
      throw DomainError("small_ball_probe: epsilons must be positive and decreasing");
    }
  }
  ProbeReport r;
  r.t = t;
  r.n = gamma.size();
  r.eps = epsilons;
  r.eps0 = epsilons.front();
  r.pass = true;
  const double n = static_cast<double>(r.n);
  for (double e : epsilons) {
    const auto hits = static_cast<std::size_t>(
        std::count_if(gamma.begin(), gamma.end(), [&](double g) { return g < e; }));
    const double prob = static_cast<double>(hits) / n;
    const double bound = std::pow(e, p_exp);
    r.hits.push_back(hits);
    r.prob.push_back(prob);
    r.bound.push_back(bound);
    r.upper.push_back(hits == 0 ? 3.0 / n : prob);
    if (hits > 0 && prob > bound) r.pass = false;
  }
  return r;
}

ProbeReport small_ball_probe(const DerivativeGrid& dgrid, double t,
                             const std::vector<double>& epsilons, double p_exp) {
  const auto g = malliavin_covariance(dgrid, t);
  return small_ball_probe(g, t, epsilons, p_exp);
}

std::string to_json(const ProbeReport& r) {
  nlohmann::ordered_json j;
  j["t"] = r.t;
  j["eps"] = r.eps;
  j["prob"] = r.prob;
  j["bound"] = r.bound;
  j["upper"] = r.upper;
  j["n"] = r.n;
  j["eps0"] = r.eps0;
  j["verdict"] = r.pass ? "PASS" : "FAIL";
  return j.dump();
}

void write_derivative_csv(std::ostream& os, const DerivativeGrid& dgrid, std::size_t path) {
  if (path >= dgrid.n_paths()) throw DomainError("write_derivative_csv: no such path");
  os << "r,t,D\n" << std::setprecision(17);
  for (std::size_t i = 0; i <= dgrid.grid.size(); ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      os << dgrid.grid.time(j) << ',' << dgrid.grid.time(i) << ',' << dgrid.at(path, j, i) << '\n';
    }
  }
}

}  // namespace malliavin
}  // namespace wfbm
