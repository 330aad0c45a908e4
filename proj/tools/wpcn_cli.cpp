#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "wpcn/sweep.hpp"

namespace {

int finish(const std::vector<wpcn::ResultRecord>& records,
           const std::string& out_dir, bool timing) {
  wpcn::emit_report(records, out_dir, timing);
  std::cout << wpcn::summary_string(records);
  std::cout << "wrote " << records.size() << " records to " << out_dir
            << "/results.csv\n";
  for (const auto& r : records)
    if (r.errored) {
      std::cerr << "solver error: " << r.solver << " seed " << r.seed << ": "
                << r.status << "\n";
      return 1;
    }
  return 0;
}

void apply_overrides(wpcn::ScenarioConfig& cfg,
                     const std::vector<std::string>& overrides) {
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("override must be key=value: " + kv);
    wpcn::apply_scenario_key(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Resource-allocation experiments for wireless powered NOMA networks"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "results", preset_name;
  int jobs = 0, n_seeds = 0;
  bool no_timing = false;
  std::vector<std::string> overrides;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--jobs", jobs, "worker threads (0 = auto)");
    sub->add_flag("--no-timing", no_timing,
                  "write wall_ms as 0 for byte-reproducible CSV");
    sub->add_option("--set", overrides,
                    "override a config key, e.g. --set d_list=40,80");
  };

  CLI::App* run = app.add_subcommand("run", "run a sweep from a config file");
  run->add_option("config", config_path, "scenario config file")->required();
  add_common(run);

  CLI::App* preset = app.add_subcommand("preset", "run a named preset sweep");
  preset->add_option("name", preset_name, "preset name")->required();
  preset->add_option("--seeds", n_seeds, "use seeds 1..n");
  add_common(preset);

  CLI::App* oracle =
      app.add_subcommand("oracle", "run only the exhaustive-search oracle");
  oracle->add_option("config", config_path, "scenario config file")->required();
  add_common(oracle);

  CLI::App* presets = app.add_subcommand("presets", "list preset names");

  CLI11_PARSE(app, argc, argv);

  try {
    if (presets->parsed()) {
      for (const auto& n : wpcn::preset_names()) std::cout << n << "\n";
      return 0;
    }
    wpcn::ScenarioConfig cfg;
    if (run->parsed()) {
      cfg = wpcn::parse_scenario_file(config_path);
    } else if (preset->parsed()) {
      cfg = wpcn::make_preset(preset_name);
      if (n_seeds > 0) {
        cfg.seeds.clear();
        for (int i = 1; i <= n_seeds; ++i) cfg.seeds.push_back(i);
      }
    } else if (oracle->parsed()) {
      cfg = wpcn::parse_scenario_file(config_path);
      cfg.solvers = {"oracle"};
    }
    apply_overrides(cfg, overrides);
    const auto records = wpcn::run_sweep(cfg, jobs);
    return finish(records, out_dir, !no_timing);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
