#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "wfbm/model.hpp"

namespace wfbm {

struct ExperimentConfig {
  std::string experiment;

  // [params]
  double a = 0.0;
  double b = 0.5;
  // [grid]
  double tau = 0.5;
  int steps_per_delay = 16;
  double T = 1.0;
  // [spec]
  double A = 0.0;
  double B = 0.0;
  std::string f = "const(0)";
  std::string sigma = "const(0)";
  double xi0 = 1.0;
  // [mc]
  std::size_t n_paths = 1000;
  std::uint64_t seed = 1;
  // [options]
  Scheme scheme = Scheme::euler;
  Representation representation = Representation::wick;
  DerivativeMode derivative_mode = DerivativeMode::corrected;
  std::vector<double> p = {};
  std::vector<int> refinements = {};
  std::vector<double> eps = {0.1, 0.05, 0.01};
  std::optional<double> t;      // probe / duality time, default T
  double p_probe = 2.0;
  std::optional<double> s;      // duality: u = 1_[0,s], default T / 2
  std::vector<double> horizons = {};
  std::size_t dump_paths = 10;

  std::filesystem::path output_dir;
  unsigned threads = 0;

  static std::vector<std::string> experiments();

  // INI-like text: `key = value` lines under [params], [grid], [spec], [mc],
  // [options]; `experiment` and `output_dir` may appear before any section.
  // Unknown sections or keys throw ConfigError.
  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig load(const std::filesystem::path& file);

  // Re-checks (a, b), the grid and the coefficient names.
  void validate() const;
};

enum class Verdict { pass, fail, report_only };
std::string to_string(Verdict v);

struct Check {
  std::string name;
  Verdict verdict = Verdict::report_only;
  double value = 0.0;
  std::string detail;
};

struct ExperimentReport {
  std::string experiment;
  std::string config_json;        // echo of the effective configuration
  std::vector<Check> checks;
  std::vector<std::string> files; // relative to the output directory

  bool ok() const noexcept;
};

namespace experiment {

// Runs the configured experiment, writing summary.json and its CSV / JSON
// artifacts into config.output_dir.  Deterministic in (config, seed).
ExperimentReport run(const ExperimentConfig& config);

}  // namespace experiment
}  // namespace wfbm
