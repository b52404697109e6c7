#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "wfbm/grid.hpp"

namespace wfbm {

// Built-in coefficient functions with derivatives and regularity metadata.
class ScalarFunction {
 public:
  enum class Kind { constant, linear, sin_shifted };

  static ScalarFunction constant(double c);
  static ScalarFunction linear(double k);
  static ScalarFunction sin_shifted(double c0, double c1);
  // "const(0.2)", "linear(1)", "sin-shifted(0.5,0.1)"
  static ScalarFunction parse(const std::string& text);

  double operator()(double x) const noexcept;
  double d1(double x) const noexcept;
  double d2(double x) const noexcept;

  Kind kind() const noexcept { return kind_; }
  const std::vector<double>& coefficients() const noexcept { return c_; }
  std::string name() const;
  std::string text() const;

  // |g(x) - g(y)|^2 <= lipschitz_sq |x - y|^2
  double lipschitz_sq() const noexcept;
  // |g(x)|^2 <= growth (1 + |x|^2)
  double growth() const noexcept;
  // inf |g|, 0 when g may vanish
  double floor() const noexcept;
  bool is_constant() const noexcept;
  bool is_zero() const noexcept;

 private:
  ScalarFunction(Kind k, std::vector<double> c) : kind_(k), c_(std::move(c)) {}
  Kind kind_;
  std::vector<double> c_;
};

struct CatalogEntry {
  std::string name;
  std::string signature;
  std::string lipschitz_sq;
  std::string growth;
  std::string sigma_floor;
};

std::vector<CatalogEntry> list_functions();

// dx = (A x + f(x(t - tau))) dt + (B x + sigma(x(t - tau))) dB, x = xi0 on [-tau, 0].
struct SddeSpec {
  double A = 0.0;
  double B = 0.0;
  ScalarFunction f = ScalarFunction::constant(0.0);
  ScalarFunction sigma = ScalarFunction::constant(0.0);
  double tau = 1.0;
  std::function<double(double)> xi0 = [](double) { return 1.0; };
  double T = 1.0;
  double lipschitz_K1 = 0.0;
  double linear_growth_L = 0.0;
  double sigma_floor_M0 = 0.0;

  // Metadata taken from the catalog entries of f and sigma.
  static SddeSpec make(double A, double B, ScalarFunction f, ScalarFunction sigma, double tau,
                       double xi0, double T);

  // Spot-checks the metadata on pseudo-random pairs; throws DomainError.
  void validate(std::uint64_t seed = 1) const;

  bool pure_linear() const noexcept { return f.is_zero() && sigma.is_zero(); }
};

enum class Scheme { stepwise, euler };
enum class Representation { wick, paper };
enum class DerivativeMode { corrected, strict };

std::string to_string(Scheme s);
std::string to_string(Representation r);
std::string to_string(DerivativeMode d);

struct SolverOptions {
  Representation representation = Representation::wick;
  DerivativeMode derivative_mode = DerivativeMode::corrected;
  // Full derivative grids are kept for the first keep_grids paths.
  std::size_t keep_grids = 0;
  unsigned workers = 0;
};

struct SolutionEnsemble {
  TimeGrid grid;
  RowMatrix x;    // n_paths x (N+1)
  RowMatrix psi;  // n_paths x (N+1)
  Scheme scheme = Scheme::euler;
};

// D_{r_j} x(t_i) for j <= i, packed by rows of t: entry (i, j) at i(i+1)/2 + j.
// The diagonal holds the limit r -> t.
struct DerivativeGrid {
  TimeGrid grid;
  std::vector<std::vector<double>> d;  // one packed triangle per path

  static std::size_t index(std::size_t i, std::size_t j) noexcept { return i * (i + 1) / 2 + j; }
  static std::size_t packed_size(std::size_t n_points) noexcept {
    return n_points * (n_points + 1) / 2;
  }
  std::size_t n_paths() const noexcept { return d.size(); }
  // 0 for r_j > t_i
  double at(std::size_t path, std::size_t j, std::size_t i) const noexcept {
    return j > i ? 0.0 : d[path][index(i, j)];
  }
};

// Per-path reductions of the derivative that fit in memory for any ensemble size.
struct DerivativeSummary {
  RowMatrix gamma;                // n_paths x (N+1): trapezoid of |D_r x(t_i)|^2 over r
  std::vector<double> sup_abs;    // max over (r, t) of |D_r x(t)|
};

}  // namespace wfbm
