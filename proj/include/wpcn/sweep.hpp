#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "wpcn/model.hpp"
#include "wpcn/solver_core.hpp"

namespace wpcn {

/// One experiment sweep: the Cartesian product of the lists below times the
/// seeds, each cell solved by every selected solver. s_th_db values at or
/// below -200 switch the decoding thresholds off (S = 0).
struct ScenarioConfig {
  PhysicalConfig physical;
  std::vector<int> k_list = {2, 5, 10};
  std::vector<int> t_list = {2};
  std::vector<double> d_list = {0, 20, 40, 60, 80, 100, 120};
  std::vector<double> s_th_list = {-10};
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::vector<std::string> solvers = {"maxsum-sicd"};
  SolverOptions opts;
  std::string preset_name = "custom";
};

/// Solver names accepted in configs.
bool is_known_solver(const std::string& name);

struct ResultRecord {
  std::string preset;
  std::uint64_t seed = 0;
  int k = 0, t = 0;
  double d_er_ap = 0.0, s_th_db = 0.0;
  std::string solver;
  std::optional<double> objective; // absent when infeasible/errored
  std::optional<double> min_rate;  // min per-user per-slot rate
  std::optional<double> sum_rate;
  std::optional<double> jain; // over per-user total throughputs
  std::string status;
  int iters = 0;
  double wall_ms = 0.0;
  bool errored = false;
};

/// `key = value` lines; lists as comma-separated values. Unknown keys,
/// malformed lines, unknown solver names and empty lists raise
/// std::runtime_error with the offending line number.
ScenarioConfig parse_scenario(std::istream& in);
ScenarioConfig parse_scenario_file(const std::string& path);

/// Applies one override `key = value` (same key names as the file).
void apply_scenario_key(ScenarioConfig& cfg, const std::string& key,
                        const std::string& value);

/// Named sweeps mirroring the comparative experiments (fig2..fig10,
/// tradeoff). Throws on unknown names.
ScenarioConfig make_preset(const std::string& name);
std::vector<std::string> preset_names();

/// Runs the full sweep on a small worker pool (jobs = 0 picks a default);
/// records come back sorted by (preset, k, t, d, s_th, seed, solver) so the
/// output is independent of scheduling.
std::vector<ResultRecord> run_sweep(const ScenarioConfig& cfg, int jobs = 0);

/// CSV with header preset,seed,K,T,d_er_ap,s_th_db,solver,objective,
/// min_rate,sum_rate,jain,status,iters,wall_ms; 6 significant digits;
/// wall_ms written as 0 when include_timing is false (reproducible output).
std::string csv_string(const std::vector<ResultRecord>& records,
                       bool include_timing);

/// Aligned per-preset summary table, seed-averaged with sample std dev.
std::string summary_string(const std::vector<ResultRecord>& records);

/// Writes results.csv and summary.txt under out_dir.
void emit_report(const std::vector<ResultRecord>& records,
                 const std::string& out_dir, bool include_timing);

} // namespace wpcn
