#include "wfbm/skorokhod.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "wfbm/errors.hpp"
#include "wfbm/parallel.hpp"

namespace wfbm {

WeightTable::WeightTable(const TimeGrid& grid, const WfbmParams& p, const QuadratureConfig& cfg)
    : grid_(grid), n_(grid.size()), w_(n_ * n_), past_(n_), column_(n_), variance_(n_ + 1) {
  for (std::size_t i = 0; i < n_; ++i) {
    const double t0 = grid.time(i), t1 = grid.time(i + 1);
    for (std::size_t j = 0; j <= i; ++j) {
      const double w = kernel::cell_weight(grid.time(j), grid.time(j + 1), t0, t1, p, cfg);
      w_[j * n_ + i] = w;
      w_[i * n_ + j] = w;
    }
  }
  for (std::size_t i = 0; i <= n_; ++i) variance_[i] = kernel::variance(grid.time(i), p);
  for (std::size_t i = 0; i < n_; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < i; ++j) s += w_[j * n_ + i];
    past_[i] = s;
    column_[i] = 0.5 * (variance_[i + 1] - variance_[i]);
  }
}

namespace skorokhod {

double wick_increment(double u_i, double dB_i, std::span<const double> du, const WeightTable& w,
                      std::size_t i) noexcept {
  const auto row = w.row(i);
  double corr = 0.0;
  for (std::size_t j = 0; j < i; ++j) corr += du[j] * row[j];
  return u_i * dB_i - corr;
}

IntegralPath wick_sum(const WickIntegrand& u, const PathEnsemble& ensemble, const WeightTable& w) {
  if (!(w.grid() == ensemble.grid)) throw DomainError("wick_sum: weight table grid mismatch");
  const auto n_paths = static_cast<Eigen::Index>(ensemble.n_paths());
  const auto n = static_cast<Eigen::Index>(ensemble.grid.size());
  if (u.values.rows() != n_paths || u.values.cols() != n + 1) {
    throw DomainError("wick_sum: integrand does not match the ensemble grid");
  }
  const bool has_derivative = !u.dvalues.empty();
  if (has_derivative) {
    if (u.dvalues.size() != static_cast<std::size_t>(n_paths)) {
      throw DomainError("wick_sum: one derivative matrix per path is required");
    }
    for (const auto& d : u.dvalues) {
      if (d.rows() != n + 1 || d.cols() != n + 1) {
        throw DomainError("wick_sum: derivative matrix does not match the grid");
      }
    }
  }

  IntegralPath out{RowMatrix::Zero(n_paths, n + 1)};
  std::vector<double> column(static_cast<std::size_t>(n));
  for (Eigen::Index path = 0; path < n_paths; ++path) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double dB = ensemble.paths(path, i + 1) - ensemble.paths(path, i);
      if (has_derivative) {
        const auto& d = u.dvalues[static_cast<std::size_t>(path)];
        for (Eigen::Index j = 0; j < i; ++j) column[static_cast<std::size_t>(j)] = d(j, i);
        acc += wick_increment(u.values(path, i), dB, column, w, static_cast<std::size_t>(i));
      } else {
        acc += u.values(path, i) * dB;
      }
      out.partials(path, i + 1) = acc;
    }
  }
  return out;
}

IntegralPath wick_sum(const WickIntegrand& u, const PathEnsemble& ensemble, const WfbmParams& p) {
  return wick_sum(u, ensemble, WeightTable(ensemble.grid, p));
}

std::vector<double> on_grid(const PiecewiseConstantFn& u, const TimeGrid& grid) {
  u.validate();
  for (double g : u.grid) {
    if (grid.index_of(g) < 0 && g < grid.horizon()) {
      throw DomainError("integrand breakpoint is not a grid point");
    }
  }
  std::vector<double> v(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) v[i] = u(grid.time(i));
  return v;
}

std::vector<double> deterministic_integral(const PiecewiseConstantFn& u,
                                           const PathEnsemble& ensemble) {
  const auto vals = on_grid(u, ensemble.grid);
  std::vector<double> out(ensemble.n_paths());
  for (std::size_t path = 0; path < out.size(); ++path) {
    const auto row = ensemble.paths.row(static_cast<Eigen::Index>(path));
    double s = 0.0;
    for (std::size_t i = 0; i < vals.size(); ++i) {
      s += vals[i] * (row(static_cast<Eigen::Index>(i) + 1) - row(static_cast<Eigen::Index>(i)));
    }
    out[path] = s;
  }
  return out;
}

GaussianLaw det_law(const PiecewiseConstantFn& u, const WfbmParams& p,
                    const QuadratureConfig& cfg) {
  return {0.0, kernel::hilbert_inner(u, u, p, cfg)};
}

DualityReport duality_check(double t, const PiecewiseConstantFn& u,
                            const PathEnsemble& ensemble, const WfbmParams& p) {
  const long ti = ensemble.grid.index_of(t);
  if (ti < 0) throw DomainError("duality_check: t is not a grid time");
  const auto delta = deterministic_integral(u, ensemble);
  std::vector<double> prod(delta.size());
  for (std::size_t k = 0; k < delta.size(); ++k) {
    prod[k] = ensemble.paths(static_cast<Eigen::Index>(k), ti) * delta[k];
  }
  DualityReport r;
  r.estimate = stats::mc_mean(prod);
  r.target = t == 0.0 ? 0.0 : kernel::hilbert_inner(PiecewiseConstantFn::indicator(0.0, t), u, p);
  r.z = r.estimate.z_score(r.target);
  return r;
}

MaximalReport maximal_experiment(const PiecewiseConstantFn& u, const WfbmParams& p,
                                 double p_exp, std::size_t n_paths,
                                 const std::vector<int>& refinements, std::uint64_t seed,
                                 unsigned workers) {
  u.validate();
  const double threshold = 4.0 / (p.a() + p.b() + 1.0);
  if (!(p_exp > threshold)) {
    throw DomainError("maximal_experiment needs p > 4 / (a + b + 1) = " + std::to_string(threshold));
  }
  if (refinements.empty()) throw DomainError("maximal_experiment needs at least one refinement");

  MaximalReport r;
  r.a = p.a();
  r.b = p.b();
  r.p = p_exp;
  r.horizon = u.grid.back();
  r.refinements = refinements;
  const double T = r.horizon;
  double integral = 0.0;
  for (std::size_t k = 0; k < u.values.size(); ++k) {
    integral += std::pow(std::abs(u.values[k]), p_exp) * (u.grid[k + 1] - u.grid[k]);
  }
  r.rhs_core = T * T * integral;

  for (int m : refinements) {
    const TimeGrid grid = TimeGrid::over_horizon(T, m);
    const PathEnsemble e = sampler::sample(grid, p, n_paths, seed + static_cast<std::uint64_t>(m),
                                           workers);
    std::vector<double> uv(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) uv[i] = u(grid.time(i));
    std::vector<double> running_max(n_paths);
    for (std::size_t path = 0; path < n_paths; ++path) {
      const auto row = e.paths.row(static_cast<Eigen::Index>(path));
      double acc = 0.0, mx = 0.0;
      for (std::size_t i = 0; i < grid.size(); ++i) {
        acc += uv[i] * (row(static_cast<Eigen::Index>(i) + 1) - row(static_cast<Eigen::Index>(i)));
        mx = std::max(mx, std::abs(acc));
      }
      running_max[path] = mx;
    }
    const EstimateCI lhs = stats::sup_moment(std::span<const double>(running_max), p_exp);
    r.lhs.push_back(lhs);
    r.ratios.push_back(r.rhs_core > 0.0 ? lhs.value / r.rhs_core : 0.0);
  }
  const auto [mn, mx] = std::minmax_element(r.ratios.begin(), r.ratios.end());
  double mean = 0.0;
  for (double x : r.ratios) mean += x;
  mean /= static_cast<double>(r.ratios.size());
  r.sup_ratio = *mx;
  r.spread = mean > 0.0 ? (*mx - *mn) / mean : 0.0;
  bool finite = true;
  for (double x : r.ratios) finite = finite && std::isfinite(x);
  r.bounded = finite && r.spread < 0.2;
  return r;
}

std::string to_json(const MaximalReport& r) {
  nlohmann::ordered_json j;
  j["experiment"] = "maximal";
  j["a"] = r.a;
  j["b"] = r.b;
  j["p"] = r.p;
  j["T"] = r.horizon;
  j["refinements"] = r.refinements;
  j["ratios"] = r.ratios;
  j["rhs_core"] = r.rhs_core;
  j["sup_ratio"] = r.sup_ratio;
  j["spread"] = r.spread;
  j["verdict"] = r.bounded ? "bounded" : "unbounded";
  return j.dump();
}

}  // namespace skorokhod
}  // namespace wfbm
