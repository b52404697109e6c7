#include "wfbm/sdde.hpp"

#include <cmath>
#include <iomanip>
#include <memory>
#include <ostream>

#include "wfbm/errors.hpp"
#include "wfbm/parallel.hpp"

namespace wfbm::sdde {

namespace {

void check_grid(const PathEnsemble& ensemble, const SddeSpec& spec) {
  const TimeGrid& g = ensemble.grid;
  if (std::abs(spec.tau - g.tau()) > 1e-12 * spec.tau ||
      std::abs(spec.T - g.horizon()) > 1e-12 * spec.T) {
    throw DomainError("grid is not commensurate with the delay and horizon of the equation");
  }
  if (ensemble.n_paths() < 1) throw DomainError("empty ensemble");
}

double log_psi(const SddeSpec& spec, double t, double b, double var) noexcept {
  return spec.A * t + spec.B * b - 0.5 * spec.B * spec.B * var;
}

// Owns the weight table when the caller did not supply one.
struct Tables {
  std::unique_ptr<WeightTable> owned;
  const WeightTable* w;
  Tables(const PathEnsemble& e, const WfbmParams& p, const WeightTable* given) {
    if (given) {
      if (!(given->grid() == e.grid)) throw DomainError("weight table grid mismatch");
      w = given;
    } else {
      owned = std::make_unique<WeightTable>(e.grid, p);
      w = owned.get();
    }
  }
};

SolveResult make_result(const PathEnsemble& e, Scheme scheme, const SolverOptions& options) {
  const auto rows = static_cast<Eigen::Index>(e.n_paths());
  const auto cols = static_cast<Eigen::Index>(e.grid.size()) + 1;
  SolveResult r{SolutionEnsemble{e.grid, RowMatrix::Zero(rows, cols), RowMatrix::Zero(rows, cols), scheme},
                DerivativeSummary{RowMatrix::Zero(rows, cols), std::vector<double>(e.n_paths())},
                DerivativeGrid{e.grid, {}}};
  r.derivative.sup_abs.assign(e.n_paths(), 0.0);
  r.grids.d.resize(std::min(options.keep_grids, e.n_paths()));
  if (!r.grids.d.empty() && e.grid.size() > 512) {
    throw DomainError("derivative grids need N <= 512");
  }
  return r;
}

void record(SolveResult& r, std::size_t path, const DerivativePropagator& prop, std::size_t n) {
  const auto pi = static_cast<Eigen::Index>(path);
  for (std::size_t i = 0; i <= n; ++i) r.derivative.gamma(pi, static_cast<Eigen::Index>(i)) = prop.gamma(i);
  r.derivative.sup_abs[path] = prop.sup_abs();
  if (path < r.grids.d.size()) r.grids.d[path] = prop.packed();
}

}  // namespace

PsiPaths psi_path(const PathEnsemble& ensemble, const SddeSpec& spec, const WfbmParams& p) {
  const TimeGrid& g = ensemble.grid;
  const auto rows = ensemble.paths.rows();
  const auto cols = ensemble.paths.cols();
  PsiPaths out{RowMatrix(rows, cols), RowMatrix(rows, cols)};
  std::vector<double> var(static_cast<std::size_t>(cols));
  for (Eigen::Index i = 0; i < cols; ++i) {
    var[static_cast<std::size_t>(i)] = kernel::variance(g.time(static_cast<std::size_t>(i)), p);
  }
  for (Eigen::Index path = 0; path < rows; ++path) {
    for (Eigen::Index i = 0; i < cols; ++i) {
      const double l = log_psi(spec, g.time(static_cast<std::size_t>(i)), ensemble.paths(path, i),
                               var[static_cast<std::size_t>(i)]);
      out.psi(path, i) = std::exp(l);
      out.psi_inv(path, i) = std::exp(-l);
    }
  }
  return out;
}

SolveResult solve_stepwise(const PathEnsemble& ensemble, const SddeSpec& spec,
                           const WfbmParams& p, const SolverOptions& options,
                           const WeightTable* weights) {
  check_grid(ensemble, spec);
  const Tables tables(ensemble, p, weights);
  const WeightTable& w = *tables.w;
  const TimeGrid& g = ensemble.grid;
  const std::size_t n = g.size();
  const auto m = static_cast<std::size_t>(g.steps_per_delay());
  const double dt = g.dt();
  const double B = spec.B;

  std::vector<double> pref(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    pref[i] = options.representation == Representation::paper ? std::exp(-0.5 * B * w.variance(i))
                                                               : 1.0;
  }

  SolveResult r = make_result(ensemble, Scheme::stepwise, options);
  parallel_blocks(ensemble.n_paths(), options.workers,
                  [&](unsigned, std::size_t begin, std::size_t end) {
    DerivativePropagator prop(w, spec, options.derivative_mode);
    std::vector<double> ip(n + 1);
    for (std::size_t path = begin; path < end; ++path) {
      const auto pi = static_cast<Eigen::Index>(path);
      const double* b = ensemble.paths.data() + pi * ensemble.paths.cols();
      double* x = r.solution.x.data() + pi * r.solution.x.cols();
      double* psi = r.solution.psi.data() + pi * r.solution.psi.cols();
      std::span<const double> xs(x, n + 1);
      for (std::size_t i = 0; i <= n; ++i) {
        const double l = log_psi(spec, g.time(i), b[i], w.variance(i));
        psi[i] = std::exp(l);
        ip[i] = std::exp(-l);
      }

      double z = spec.xi0(0.0);
      x[0] = pref[0] * psi[0] * z;
      prop.start(xs);
      // Segment k covers cells [k m, (k+1) m); Z carries over by value.
      for (std::size_t k = 0; k * m < n; ++k) {
        const std::size_t last = std::min(n, (k + 1) * m);
        for (std::size_t c = k * m; c < last; ++c) {
          const double xd0 = prop.state(xs, static_cast<long>(c) - static_cast<long>(m));
          const double xd1 = prop.state(xs, static_cast<long>(c + 1) - static_cast<long>(m));
          const double s0 = spec.sigma(xd0), s1 = spec.sigma(xd1);
          const double dB = b[c + 1] - b[c];
          const double drift = 0.5 * dt * (ip[c] * spec.f(xd0) + ip[c + 1] * spec.f(xd1));
          const double kern = -B * w.kernel_column(c) * 0.5 * (ip[c] * s0 + ip[c + 1] * s1);
          const double e = prop.delayed_contraction(c).first;
          const double sko = ip[c] * (s0 * dB + B * s0 * w.past(c) - spec.sigma.d1(xd0) * e);
          z += drift + kern + sko;
          x[c + 1] = pref[c + 1] * psi[c + 1] * z;
          prop.advance(c, xs, dB);
        }
      }
      record(r, path, prop, n);
    }
  });
  return r;
}

SolveResult solve_euler(const PathEnsemble& ensemble, const SddeSpec& spec, const WfbmParams& p,
                        const SolverOptions& options, const WeightTable* weights) {
  check_grid(ensemble, spec);
  const Tables tables(ensemble, p, weights);
  const WeightTable& w = *tables.w;
  const TimeGrid& g = ensemble.grid;
  const std::size_t n = g.size();
  const long m = g.steps_per_delay();
  const double dt = g.dt();

  SolveResult r = make_result(ensemble, Scheme::euler, options);
  parallel_blocks(ensemble.n_paths(), options.workers,
                  [&](unsigned, std::size_t begin, std::size_t end) {
    DerivativePropagator prop(w, spec, options.derivative_mode);
    for (std::size_t path = begin; path < end; ++path) {
      const auto pi = static_cast<Eigen::Index>(path);
      const double* b = ensemble.paths.data() + pi * ensemble.paths.cols();
      double* x = r.solution.x.data() + pi * r.solution.x.cols();
      double* psi = r.solution.psi.data() + pi * r.solution.psi.cols();
      std::span<const double> xs(x, n + 1);
      for (std::size_t i = 0; i <= n; ++i) psi[i] = std::exp(log_psi(spec, g.time(i), b[i], w.variance(i)));

      x[0] = spec.xi0(0.0);
      prop.start(xs);
      for (std::size_t c = 0; c < n; ++c) {
        const double xd = prop.state(xs, static_cast<long>(c) - m);
        const double dB = b[c + 1] - b[c];
        const double corr = spec.B * prop.contraction(c) +
                            spec.sigma.d1(xd) * prop.delayed_contraction(c).first;
        x[c + 1] = x[c] + (spec.A * x[c] + spec.f(xd)) * dt + (spec.B * x[c] + spec.sigma(xd)) * dB -
                   corr;
        prop.advance(c, xs, dB);
      }
      record(r, path, prop, n);
    }
  });
  return r;
}

SolveResult solve(Scheme scheme, const PathEnsemble& ensemble, const SddeSpec& spec,
                  const WfbmParams& p, const SolverOptions& options, const WeightTable* weights) {
  return scheme == Scheme::euler ? solve_euler(ensemble, spec, p, options, weights)
                                 : solve_stepwise(ensemble, spec, p, options, weights);
}

void write_solution_csv(std::ostream& os, const SolutionEnsemble& sol, std::size_t max_paths) {
  os << "path_id,t,x,psi\n" << std::setprecision(17);
  const auto rows = std::min<Eigen::Index>(static_cast<Eigen::Index>(max_paths), sol.x.rows());
  for (Eigen::Index p = 0; p < rows; ++p) {
    for (Eigen::Index i = 0; i < sol.x.cols(); ++i) {
      os << p << ',' << sol.grid.time(static_cast<std::size_t>(i)) << ',' << sol.x(p, i) << ','
         << sol.psi(p, i) << '\n';
    }
  }
}

}  // namespace wfbm::sdde
