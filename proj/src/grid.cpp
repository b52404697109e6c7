#include "wfbm/grid.hpp"

#include <cmath>
#include <cstring>

#include "wfbm/errors.hpp"

namespace wfbm {

TimeGrid::TimeGrid(double tau, int steps_per_delay, double horizon)
    : tau_(tau), m_(steps_per_delay), horizon_(horizon) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("grid: tau must be > 0");
  if (steps_per_delay < 1) throw DomainError("grid: steps_per_delay must be >= 1");
  if (!(horizon > tau) || !std::isfinite(horizon)) {
    throw DomainError("grid: horizon T must exceed tau (need K0 >= 1 with K0 tau < T)");
  }
  dt_ = tau / steps_per_delay;
  const double cells = horizon / dt_;
  const double rounded = std::round(cells);
  if (std::abs(cells - rounded) > 1e-9 * std::max(1.0, cells)) {
    throw DomainError("grid: T is not a multiple of tau / steps_per_delay");
  }
  n_ = static_cast<std::size_t>(rounded);
  // largest K0 with K0 tau < T: count whole delays strictly inside the horizon
  k0_ = static_cast<int>((n_ - 1) / static_cast<std::size_t>(m_));
}

TimeGrid TimeGrid::over_horizon(double horizon, int steps) {
  if (steps < 2 || steps % 2 != 0) throw DomainError("grid: step count must be even and >= 2");
  return TimeGrid(0.5 * horizon, steps / 2, horizon);
}

std::vector<double> TimeGrid::times() const {
  std::vector<double> t(n_ + 1);
  for (std::size_t i = 0; i <= n_; ++i) t[i] = time(i);
  return t;
}

long TimeGrid::index_of(double t) const noexcept {
  if (!(t >= 0.0)) return -1;
  const double x = t / dt_;
  const double r = std::round(x);
  if (std::abs(x - r) > 1e-9 * std::max(1.0, x) || r > static_cast<double>(n_)) return -1;
  return static_cast<long>(r);
}

std::uint64_t TimeGrid::hash() const noexcept {
  // FNV-1a over (tau, m, N)
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](const void* data, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ull;
    }
  };
  mix(&tau_, sizeof tau_);
  const std::int64_t m = m_;
  const std::uint64_t n = n_;
  mix(&m, sizeof m);
  mix(&n, sizeof n);
  return h;
}

}  // namespace wfbm
