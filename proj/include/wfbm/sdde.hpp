#pragma once

#include <iosfwd>

#include "wfbm/malliavin.hpp"
#include "wfbm/model.hpp"
#include "wfbm/sampler.hpp"
#include "wfbm/skorokhod.hpp"

namespace wfbm {

struct PsiPaths {
  RowMatrix psi;      // exp{A t + B B(t) - B^2 R(t,t) / 2}
  RowMatrix psi_inv;
};

struct SolveResult {
  SolutionEnsemble solution;
  DerivativeSummary derivative;
  DerivativeGrid grids;  // full grids of the first options.keep_grids paths
};

namespace sdde {

PsiPaths psi_path(const PathEnsemble& ensemble, const SddeSpec& spec, const WfbmParams& p);

// Segment-wise construction x = pref * psi * Z, Z driven by psi^{-1} dM on each
// delay segment [k tau, (k+1) tau].  pref = 1 for the Wick representation and
// exp{-B R(t,t) / 2} for the paper representation.
SolveResult solve_stepwise(const PathEnsemble& ensemble, const SddeSpec& spec,
                           const WfbmParams& p, const SolverOptions& options = {},
                           const WeightTable* weights = nullptr);

// x_{n+1} = x_n + (A x_n + f(x_{n-m})) dt + (B x_n + sigma(x_{n-m})) dB_n - corr_n
SolveResult solve_euler(const PathEnsemble& ensemble, const SddeSpec& spec, const WfbmParams& p,
                        const SolverOptions& options = {}, const WeightTable* weights = nullptr);

SolveResult solve(Scheme scheme, const PathEnsemble& ensemble, const SddeSpec& spec,
                  const WfbmParams& p, const SolverOptions& options = {},
                  const WeightTable* weights = nullptr);

// CSV `path_id,t,x,psi`
void write_solution_csv(std::ostream& os, const SolutionEnsemble& sol, std::size_t max_paths);

}  // namespace sdde
}  // namespace wfbm
