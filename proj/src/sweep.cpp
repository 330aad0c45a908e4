#include "wpcn/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "wpcn/maxmin.hpp"
#include "wpcn/maxsum.hpp"
#include "wpcn/oracle.hpp"
#include "wpcn/throughput.hpp"

namespace wpcn {

namespace {

const std::vector<std::string> kSolverNames = {
    "maxsum-lcd",      "maxsum-sicd", "maxsum-sicd-dual",
    "maxmin-lcd",      "maxmin-sicd", "oracle",
    "maxsum-lcd-fixedtau", "maxsum-lcd-sca"};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  for (auto& tok : out) {
    while (!tok.empty() && std::isspace(static_cast<unsigned char>(tok.front())))
      tok.erase(tok.begin());
    while (!tok.empty() && std::isspace(static_cast<unsigned char>(tok.back())))
      tok.pop_back();
  }
  out.erase(std::remove_if(out.begin(), out.end(),
                           [](const std::string& t) { return t.empty(); }),
            out.end());
  return out;
}

template <typename T>
std::vector<T> parse_numbers(const std::string& s) {
  std::vector<T> out;
  for (const auto& tok : split_list(s)) out.push_back(static_cast<T>(std::stod(tok)));
  return out;
}

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string opt_fmt(const std::optional<double>& v) {
  return v ? fmt6(*v) : std::string();
}

void fill_metrics(ResultRecord& rec, const Solution& sol,
                  double objective_value) {
  rec.status = to_string(sol.status);
  rec.iters = sol.iterations;
  if (sol.status == SolveStatus::Infeasible) return;
  rec.objective = objective_value;
  rec.min_rate = sol.rates.minCoeff();
  rec.sum_rate = sol.rates.sum();
  Eigen::VectorXd totals = sol.rates.rowwise().sum();
  if (totals.maxCoeff() > 0.0) rec.jain = jain_index(totals.cwiseMax(0.0));
}

struct Cell {
  int k = 0, t = 0;
  double d = 0.0, s_th_db = 0.0;
  std::uint64_t seed = 0;
  std::string solver;
};

std::vector<ResultRecord> run_cell(const ScenarioConfig& cfg, const Cell& cell) {
  PhysicalConfig phys = cfg.physical;
  phys.s_th_db = cell.s_th_db;
  const NetworkInstance inst =
      build_network(phys, cell.k, cell.t, cell.d, cell.seed);

  auto base_record = [&](const std::string& solver) {
    ResultRecord r;
    r.preset = cfg.preset_name;
    r.seed = cell.seed;
    r.k = cell.k;
    r.t = cell.t;
    r.d_er_ap = cell.d;
    r.s_th_db = cell.s_th_db;
    r.solver = solver;
    return r;
  };

  std::vector<ResultRecord> out;
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed_ms = [&t0] {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - t0)
        .count();
  };

  try {
    if (cell.solver == "maxsum-lcd") {
      ResultRecord r = base_record(cell.solver);
      const Solution s = solve_maxsum_lcd(inst, cfg.opts);
      fill_metrics(r, s, s.objective.value_or(0.0));
      r.wall_ms = elapsed_ms();
      out.push_back(r);
    } else if (cell.solver == "maxsum-lcd-fixedtau") {
      ResultRecord r = base_record(cell.solver);
      const Solution s = solve_maxsum_lcd_fixed_tau(inst, cfg.opts);
      fill_metrics(r, s, s.objective.value_or(0.0));
      r.wall_ms = elapsed_ms();
      out.push_back(r);
    } else if (cell.solver == "maxsum-lcd-sca") {
      ResultRecord r = base_record(cell.solver);
      const Solution s = solve_maxsum_lcd_sca(inst, cfg.opts);
      fill_metrics(r, s, s.objective.value_or(0.0));
      r.wall_ms = elapsed_ms();
      out.push_back(r);
    } else if (cell.solver == "maxsum-sicd") {
      ResultRecord r = base_record(cell.solver);
      const Solution s = solve_maxsum_sicd(inst, cfg.opts);
      fill_metrics(r, s, s.objective.value_or(0.0));
      r.wall_ms = elapsed_ms();
      out.push_back(r);
    } else if (cell.solver == "maxsum-sicd-dual") {
      ResultRecord r = base_record(cell.solver);
      const DualSolveResult d = solve_maxsum_sicd_dual(inst, cfg.opts);
      fill_metrics(r, d.solution, d.solution.objective.value_or(0.0));
      r.iters = d.iterations;
      r.wall_ms = elapsed_ms();
      out.push_back(r);
    } else if (cell.solver == "maxmin-lcd") {
      ResultRecord r = base_record(cell.solver);
      const Solution s = solve_maxmin(inst, Decoder::Lcd, cfg.opts);
      fill_metrics(r, s, s.objective.value_or(0.0));
      r.wall_ms = elapsed_ms();
      out.push_back(r);
    } else if (cell.solver == "maxmin-sicd") {
      ResultRecord r = base_record(cell.solver);
      const Solution s = solve_maxmin(inst, Decoder::Sicd, cfg.opts);
      fill_metrics(r, s, s.objective.value_or(0.0));
      r.wall_ms = elapsed_ms();
      out.push_back(r);
    } else if (cell.solver == "oracle") {
      // Exhaustive-search companions for the small-scenario comparison.
      const struct {
        const char* name;
        Objective obj;
        Decoder scheme;
      } runs[] = {{"oracle-maxmin-lcd", Objective::MaxMin, Decoder::Lcd},
                  {"oracle-maxmin-sicd", Objective::MaxMin, Decoder::Sicd},
                  {"oracle-maxsum-sicd", Objective::MaxSum, Decoder::Sicd}};
      for (const auto& ru : runs) {
        ResultRecord r = base_record(ru.name);
        GridSpec spec;
        spec.objective = ru.obj;
        spec.scheme = ru.scheme;
        const auto tstart = std::chrono::steady_clock::now();
        const Solution s = grid_search(inst, spec);
        fill_metrics(r, s, s.objective.value_or(0.0));
        r.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - tstart)
                        .count();
        out.push_back(r);
      }
    } else {
      throw std::runtime_error("unknown solver: " + cell.solver);
    }
  } catch (const std::exception& e) {
    ResultRecord r = base_record(cell.solver);
    r.status = std::string("Error: ") + e.what();
    r.errored = true;
    r.wall_ms = elapsed_ms();
    out.push_back(r);
  }
  return out;
}

bool record_less(const ResultRecord& a, const ResultRecord& b) {
  return std::tie(a.preset, a.k, a.t, a.d_er_ap, a.s_th_db, a.seed, a.solver) <
         std::tie(b.preset, b.k, b.t, b.d_er_ap, b.s_th_db, b.seed, b.solver);
}

} // namespace

bool is_known_solver(const std::string& name) {
  return std::find(kSolverNames.begin(), kSolverNames.end(), name) !=
         kSolverNames.end();
}

void apply_scenario_key(ScenarioConfig& cfg, const std::string& key,
                        const std::string& value) {
  if (apply_physical_key(cfg.physical, key, value)) return;
  if (key == "k_list") cfg.k_list = parse_numbers<int>(value);
  else if (key == "t_list") cfg.t_list = parse_numbers<int>(value);
  else if (key == "d_list") cfg.d_list = parse_numbers<double>(value);
  else if (key == "s_th_list") cfg.s_th_list = parse_numbers<double>(value);
  else if (key == "seeds") cfg.seeds = parse_numbers<std::uint64_t>(value);
  else if (key == "solvers") {
    cfg.solvers = split_list(value);
    for (const auto& s : cfg.solvers)
      if (!is_known_solver(s)) throw std::runtime_error("unknown solver: " + s);
  } else if (key == "tol_obj") cfg.opts.tol_obj = std::stod(value);
  else if (key == "tol_con") cfg.opts.tol_con = std::stod(value);
  else if (key == "max_iter") cfg.opts.max_iter = std::stoi(value);
  else if (key == "interior_margin") cfg.opts.interior_margin = std::stod(value);
  else if (key == "preset") cfg.preset_name = value;
  else throw std::runtime_error("unknown key: " + key);
}

ScenarioConfig parse_scenario(std::istream& in) {
  ScenarioConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    while (!line.empty() && is_space(line.back())) line.pop_back();
    std::size_t start = 0;
    while (start < line.size() && is_space(line[start])) ++start;
    line.erase(0, start);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               ": expected `key = value`");
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    while (!key.empty() && is_space(key.back())) key.pop_back();
    std::size_t vs = 0;
    while (vs < value.size() && is_space(value[vs])) ++vs;
    value.erase(0, vs);
    try {
      apply_scenario_key(cfg, key, value);
    } catch (const std::exception& e) {
      throw std::runtime_error("config line " + std::to_string(lineno) + ": " +
                               e.what());
    }
  }
  if (cfg.solvers.empty()) throw std::runtime_error("config: empty solver list");
  if (cfg.k_list.empty() || cfg.t_list.empty() || cfg.d_list.empty() ||
      cfg.s_th_list.empty() || cfg.seeds.empty())
    throw std::runtime_error("config: empty sweep list");
  return cfg;
}

ScenarioConfig parse_scenario_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config file: " + path);
  return parse_scenario(f);
}

std::vector<std::string> preset_names() {
  return {"fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9",
          "fig10", "tradeoff"};
}

ScenarioConfig make_preset(const std::string& name) {
  ScenarioConfig c;
  c.preset_name = name;
  if (name == "fig2") {
    c.k_list = {5};
    c.t_list = {2};
    c.d_list = {0, 20, 40, 60, 80, 100, 120};
    c.s_th_list = {-10};
    c.solvers = {"maxsum-lcd", "maxsum-lcd-fixedtau", "maxsum-lcd-sca"};
  } else if (name == "fig3") {
    c.k_list = {2, 5, 10};
    c.t_list = {2};
    c.d_list = {0, 20, 40, 60, 80, 100, 120};
    c.s_th_list = {-10};
    c.solvers = {"maxsum-lcd", "maxsum-sicd"};
  } else if (name == "fig4") {
    c.k_list = {5};
    c.t_list = {1, 2, 5, 10};
    c.d_list = {20, 60, 100};
    c.s_th_list = {-10};
    c.solvers = {"maxsum-lcd", "maxsum-sicd"};
  } else if (name == "fig5") {
    c.k_list = {5, 10};
    c.t_list = {2};
    c.d_list = {100};
    c.s_th_list = {-10, -9, -8, -7, -6, -5, -4, -3, -2, -1, 0};
    c.solvers = {"maxsum-lcd", "maxsum-sicd"};
  } else if (name == "fig6") {
    c.k_list = {2, 5, 10};
    c.t_list = {2};
    c.d_list = {0, 20, 40, 60, 80, 100, 120};
    c.s_th_list = {-10};
    c.solvers = {"maxmin-lcd", "maxmin-sicd"};
  } else if (name == "fig7") {
    c.k_list = {2};
    c.t_list = {1};
    c.d_list = {40, 80};
    c.s_th_list = {-10};
    c.seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    c.solvers = {"maxmin-lcd", "maxmin-sicd", "maxsum-sicd", "oracle"};
  } else if (name == "fig8" || name == "fig9" || name == "fig10" ||
             name == "tradeoff") {
    c.preset_name = name;
    c.k_list = {2, 5, 10, 15, 20};
    c.t_list = {2};
    c.d_list = {20};
    c.s_th_list = {-300}; // thresholds off
    c.seeds = {1, 2, 3, 4, 5};
    c.solvers = {"maxsum-sicd", "maxmin-sicd"};
  } else {
    throw std::runtime_error("unknown preset: " + name);
  }
  return c;
}

std::vector<ResultRecord> run_sweep(const ScenarioConfig& cfg, int jobs) {
  if (cfg.solvers.empty()) throw std::runtime_error("run_sweep: empty solver list");
  for (const auto& s : cfg.solvers)
    if (!is_known_solver(s)) throw std::runtime_error("unknown solver: " + s);

  std::vector<Cell> cells;
  for (int k : cfg.k_list)
    for (int t : cfg.t_list)
      for (double d : cfg.d_list)
        for (double s : cfg.s_th_list)
          for (std::uint64_t seed : cfg.seeds)
            for (const auto& solver : cfg.solvers)
              cells.push_back({k, t, d, s, seed, solver});

  if (jobs <= 0) {
    const unsigned hw = std::thread::hardware_concurrency();
    jobs = static_cast<int>(std::min(8u, hw == 0 ? 1u : hw));
  }
  jobs = std::min<int>(jobs, static_cast<int>(cells.size()));

  std::vector<std::vector<ResultRecord>> slots(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    while (true) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= cells.size()) break;
      slots[idx] = run_cell(cfg, cells[idx]);
    }
  };
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  std::vector<ResultRecord> records;
  for (auto& s : slots)
    for (auto& r : s) records.push_back(std::move(r));
  std::sort(records.begin(), records.end(), record_less);
  return records;
}

std::string csv_string(const std::vector<ResultRecord>& records,
                       bool include_timing) {
  std::ostringstream os;
  os << "preset,seed,K,T,d_er_ap,s_th_db,solver,objective,min_rate,sum_rate,"
        "jain,status,iters,wall_ms\n";
  for (const auto& r : records) {
    os << r.preset << ',' << r.seed << ',' << r.k << ',' << r.t << ','
       << fmt6(r.d_er_ap) << ',' << fmt6(r.s_th_db) << ',' << r.solver << ','
       << opt_fmt(r.objective) << ',' << opt_fmt(r.min_rate) << ','
       << opt_fmt(r.sum_rate) << ',' << opt_fmt(r.jain) << ',' << r.status
       << ',' << r.iters << ',' << fmt6(include_timing ? r.wall_ms : 0.0)
       << '\n';
  }
  return os.str();
}

std::string summary_string(const std::vector<ResultRecord>& records) {
  // Group by (preset, solver, K, T, d, s_th); mean and sample sd over seeds.
  struct Key {
    std::string preset, solver;
    int k, t;
    double d, s;
    bool operator<(const Key& o) const {
      return std::tie(preset, solver, k, t, d, s) <
             std::tie(o.preset, o.solver, o.k, o.t, o.d, o.s);
    }
  };
  struct Agg {
    std::vector<double> obj;
    int infeasible = 0, total = 0;
  };
  std::map<Key, Agg> groups;
  for (const auto& r : records) {
    Agg& a = groups[{r.preset, r.solver, r.k, r.t, r.d_er_ap, r.s_th_db}];
    ++a.total;
    if (r.objective) a.obj.push_back(*r.objective);
    else ++a.infeasible;
  }
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-10s %-22s %4s %3s %8s %8s %12s %12s %6s\n",
                "preset", "solver", "K", "T", "d_er_ap", "s_th_db",
                "obj_mean", "obj_sd", "n_inf");
  os << buf;
  for (const auto& [key, agg] : groups) {
    double mean = 0.0, sd = 0.0;
    if (!agg.obj.empty()) {
      for (double v : agg.obj) mean += v;
      mean /= agg.obj.size();
      if (agg.obj.size() > 1) {
        for (double v : agg.obj) sd += (v - mean) * (v - mean);
        sd = std::sqrt(sd / (agg.obj.size() - 1));
      }
    }
    std::snprintf(buf, sizeof(buf),
                  "%-10s %-22s %4d %3d %8.6g %8.6g %12.6g %12.6g %6d\n",
                  key.preset.c_str(), key.solver.c_str(), key.k, key.t, key.d,
                  key.s, mean, sd, agg.infeasible);
    os << buf;
  }
  return os.str();
}

void emit_report(const std::vector<ResultRecord>& records,
                 const std::string& out_dir, bool include_timing) {
  if (records.empty()) throw std::runtime_error("emit_report: no records");
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream f(out_dir + "/results.csv");
    if (!f) throw std::runtime_error("emit_report: cannot write " + out_dir);
    f << csv_string(records, include_timing);
  }
  {
    std::ofstream f(out_dir + "/summary.txt");
    if (!f) throw std::runtime_error("emit_report: cannot write " + out_dir);
    f << summary_string(records);
  }
}

} // namespace wpcn
