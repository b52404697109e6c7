#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "wfbm/errors.hpp"
#include "wfbm/experiment.hpp"
#include "wfbm/model.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Weighted fractional Brownian motion experiments"};
  app.require_subcommand(1);

  auto* list = app.add_subcommand("list-functions", "Print the coefficient function catalog");

  std::string config_file;
  std::uint64_t seed = 0;
  std::string out;
  unsigned threads = 0;
  std::vector<CLI::App*> runs;
  for (const auto& name : wfbm::ExperimentConfig::experiments()) {
    auto* sub = app.add_subcommand(name, "Run the " + name + " experiment");
    sub->add_option("--config", config_file, "Configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Override mc.seed");
    sub->add_option("--out", out, "Output directory (default $WFBM_OUT or ./wfbm_out)");
    sub->add_option("--threads", threads, "Worker cap; results do not depend on it");
    runs.push_back(sub);
  }

  CLI11_PARSE(app, argc, argv);

  if (list->parsed()) {
    for (const auto& e : wfbm::list_functions()) {
      std::cout << e.signature << "\n  K1 = " << e.lipschitz_sq << ", L = " << e.growth
                << ", M0 = " << e.sigma_floor << '\n';
    }
    return 0;
  }

  CLI::App* sub = nullptr;
  for (auto* s : runs) {
    if (s->parsed()) sub = s;
  }

  try {
    auto cfg = wfbm::ExperimentConfig::load(config_file);
    if (!cfg.experiment.empty() && cfg.experiment != sub->get_name()) {
      throw wfbm::ConfigError("experiment", "config names '" + cfg.experiment + "' but '" +
                                                sub->get_name() + "' was requested");
    }
    cfg.experiment = sub->get_name();
    if (sub->count("--seed")) cfg.seed = seed;
    if (!out.empty()) {
      cfg.output_dir = out;
    } else if (cfg.output_dir.empty()) {
      const char* env = std::getenv("WFBM_OUT");
      cfg.output_dir = env && *env ? env : "wfbm_out";
    }
    cfg.threads = threads;

    const auto report = wfbm::experiment::run(cfg);
    for (const auto& c : report.checks) {
      std::cout << wfbm::to_string(c.verdict) << "  " << c.name << "  " << c.value;
      if (!c.detail.empty()) std::cout << "  (" << c.detail << ')';
      std::cout << '\n';
    }
    std::cout << "output: " << cfg.output_dir.string() << '\n';
    return report.ok() ? 0 : 1;
  } catch (const wfbm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const wfbm::DomainError& e) {
    std::cerr << "domain error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
}
