#pragma once

#include <optional>
#include <span>
#include <vector>

#include "wfbm/grid.hpp"

namespace wfbm {

struct SolutionEnsemble;

struct EstimateCI {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;

  // (value - target) / std_error; 0 when both the error and the gap vanish.
  double z_score(double target) const noexcept;
};

struct DensityEstimate {
  std::vector<double> eval_points;
  std::vector<double> density;
  double bandwidth = 0.0;

  // Trapezoid integral over eval_points.
  double mass() const;
};

// Least-squares slope of estimates against x, weighted by 1/se^2.
struct TrendResult {
  double slope = 0.0;
  double slope_se = 0.0;
  double z = 0.0;
  // No positive trend beyond noise: z <= threshold.
  bool bounded = true;
};

namespace stats {

EstimateCI mc_mean(std::span<const double> samples);

// E[(max_i |x(t_i)|)^p]
EstimateCI sup_moment(const SolutionEnsemble& sol, double p_exp);
// Same statistic for an arbitrary per-path maximum.
EstimateCI sup_moment(std::span<const double> per_path_max, double p_exp);

// m' = A m + c, m(0) = x0 at every grid time.
std::vector<double> mean_oracle(double A, double c, double x0, const TimeGrid& grid);
double mean_oracle_at(double A, double c, double x0, double t);

double silverman_bandwidth(std::span<const double> samples);

DensityEstimate kde(std::span<const double> samples, std::span<const double> eval_points,
                    std::optional<double> bandwidth = std::nullopt);

// Fraction of interior evaluation points where the second differences of the
// estimates at bandwidths h and 2h share a sign.
double kde_sign_agreement(std::span<const double> samples, std::span<const double> eval_points,
                          std::optional<double> bandwidth = std::nullopt);

double quantile(std::vector<double> samples, double q);

// Points spaced 2h across [q_0.001, q_0.999]: the resolution at which the
// bandwidth-stability probe compares curvature.
std::vector<double> stability_points(std::span<const double> samples, double h);

// Default threshold 3: one-sided, roughly 0.1% false-alarm rate under no trend.
TrendResult trend_test(std::span<const double> x, std::span<const EstimateCI> estimates,
                       double threshold = 3.0);

}  // namespace stats
}  // namespace wfbm
