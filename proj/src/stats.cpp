#include "wfbm/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "wfbm/errors.hpp"
#include "wfbm/sdde.hpp"

namespace wfbm {

double EstimateCI::z_score(double target) const noexcept {
  const double gap = value - target;
  if (std::abs(gap) == 0.0) return 0.0;
  if (std_error == 0.0) return gap > 0 ? INFINITY : -INFINITY;
  return gap / std_error;
}

double DensityEstimate::mass() const {
  double m = 0.0;
  for (std::size_t i = 1; i < eval_points.size(); ++i) {
    m += 0.5 * (density[i] + density[i - 1]) * (eval_points[i] - eval_points[i - 1]);
  }
  return m;
}

namespace stats {

EstimateCI mc_mean(std::span<const double> samples) {
  const std::size_t n = samples.size();
  if (n < 2) throw DomainError("mc_mean needs at least 2 samples");
  // two-pass for the variance
  double mean = 0.0;
  for (double x : samples) mean += x;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double x : samples) ss += (x - mean) * (x - mean);
  const double var = ss / static_cast<double>(n - 1);
  return {mean, std::sqrt(var / static_cast<double>(n)), n};
}

EstimateCI sup_moment(std::span<const double> per_path_max, double p_exp) {
  if (per_path_max.empty()) throw DomainError("sup_moment: empty ensemble");
  if (!(p_exp >= 1.0)) throw DomainError("sup_moment needs p >= 1");
  std::vector<double> v(per_path_max.size());
  std::transform(per_path_max.begin(), per_path_max.end(), v.begin(),
                 [&](double m) { return std::pow(std::abs(m), p_exp); });
  if (v.size() == 1) return {v[0], 0.0, 1};
  return mc_mean(v);
}

EstimateCI sup_moment(const SolutionEnsemble& sol, double p_exp) {
  if (!(p_exp >= 2.0)) throw DomainError("sup_moment needs p >= 2");
  if (sol.x.rows() == 0) throw DomainError("sup_moment: empty ensemble");
  std::vector<double> m(static_cast<std::size_t>(sol.x.rows()));
  for (Eigen::Index p = 0; p < sol.x.rows(); ++p) {
    m[static_cast<std::size_t>(p)] = sol.x.row(p).cwiseAbs().maxCoeff();
  }
  return sup_moment(m, p_exp);
}

double mean_oracle_at(double A, double c, double x0, double t) {
  if (A == 0.0) return x0 + c * t;
  const double e = std::exp(A * t);
  return c / (-A) * (1.0 - e) + x0 * e;
}

std::vector<double> mean_oracle(double A, double c, double x0, const TimeGrid& grid) {
  std::vector<double> m(grid.size() + 1);
  for (std::size_t i = 0; i <= grid.size(); ++i) m[i] = mean_oracle_at(A, c, x0, grid.time(i));
  return m;
}

double quantile(std::vector<double> samples, double q) {
  if (samples.empty()) throw DomainError("quantile of empty sample");
  std::sort(samples.begin(), samples.end());
  const double pos = q * static_cast<double>(samples.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(samples.size() - 1, lo + 1);
  return samples[lo] + (pos - static_cast<double>(lo)) * (samples[hi] - samples[lo]);
}

std::vector<double> stability_points(std::span<const double> samples, double h) {
  if (!(h > 0.0)) throw DomainError("stability_points needs h > 0");
  std::vector<double> v(samples.begin(), samples.end());
  const double lo = quantile(v, 0.001), hi = quantile(v, 0.999);
  std::vector<double> pts;
  for (std::size_t k = 0; lo + 2.0 * h * static_cast<double>(k) <= hi; ++k) {
    pts.push_back(lo + 2.0 * h * static_cast<double>(k));
  }
  return pts;
}

double silverman_bandwidth(std::span<const double> samples) {
  const EstimateCI m = mc_mean(samples);
  const double sd = m.std_error * std::sqrt(static_cast<double>(m.n));
  std::vector<double> v(samples.begin(), samples.end());
  const double iqr = quantile(v, 0.75) - quantile(v, 0.25);
  double spread = sd;
  if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) throw DegenerateSampleError("kde: samples have zero spread");
  return 0.9 * spread * std::pow(static_cast<double>(samples.size()), -0.2);
}

DensityEstimate kde(std::span<const double> samples, std::span<const double> eval_points,
                    std::optional<double> bandwidth) {
  if (samples.size() < 100) throw DomainError("kde needs at least 100 samples");
  const double h = bandwidth ? *bandwidth : silverman_bandwidth(samples);
  if (!(h > 0.0)) throw DomainError("kde bandwidth must be > 0");
  DensityEstimate d{{eval_points.begin(), eval_points.end()},
                    std::vector<double>(eval_points.size(), 0.0), h};
  const double norm = 1.0 / (static_cast<double>(samples.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  for (std::size_t k = 0; k < eval_points.size(); ++k) {
    double s = 0.0;
    for (double x : samples) {
      const double u = (eval_points[k] - x) / h;
      s += std::exp(-0.5 * u * u);
    }
    d.density[k] = s * norm;
  }
  return d;
}

double kde_sign_agreement(std::span<const double> samples, std::span<const double> eval_points,
                          std::optional<double> bandwidth) {
  const double h = bandwidth ? *bandwidth : silverman_bandwidth(samples);
  const DensityEstimate fine = kde(samples, eval_points, h);
  const DensityEstimate coarse = kde(samples, eval_points, 2.0 * h);
  std::size_t agree = 0, total = 0;
  for (std::size_t k = 1; k + 1 < eval_points.size(); ++k) {
    const double d1 = fine.density[k + 1] - 2.0 * fine.density[k] + fine.density[k - 1];
    const double d2 = coarse.density[k + 1] - 2.0 * coarse.density[k] + coarse.density[k - 1];
    ++total;
    if ((d1 >= 0.0) == (d2 >= 0.0)) ++agree;
  }
  return total == 0 ? 1.0 : static_cast<double>(agree) / static_cast<double>(total);
}

TrendResult trend_test(std::span<const double> x, std::span<const EstimateCI> estimates,
                       double threshold) {
  if (x.size() != estimates.size() || x.size() < 2) {
    throw DomainError("trend_test needs matching x / estimate lists of length >= 2");
  }
  double sw = 0.0, swx = 0.0, swy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double se = std::max(estimates[k].std_error, 1e-300);
    const double w = 1.0 / (se * se);
    sw += w;
    swx += w * x[k];
    swy += w * estimates[k].value;
  }
  const double xbar = swx / sw;
  const double ybar = swy / sw;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double se = std::max(estimates[k].std_error, 1e-300);
    const double w = 1.0 / (se * se);
    sxx += w * (x[k] - xbar) * (x[k] - xbar);
    sxy += w * (x[k] - xbar) * (estimates[k].value - ybar);
  }
  TrendResult r;
  r.slope = sxy / sxx;
  r.slope_se = std::sqrt(1.0 / sxx);
  r.z = r.slope / r.slope_se;
  r.bounded = std::isfinite(r.slope) && r.z <= threshold;
  return r;
}

}  // namespace stats
}  // namespace wfbm
