#include "wpcn/model.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace wpcn {

namespace {

constexpr double kSpeedOfLight = 299792458.0;
constexpr double kMinNodeSeparation = 1.0; // m, near-field exclusion

// Deterministic uniform in [0,1) from raw 64-bit output; avoids the
// implementation-defined behavior of std::uniform_real_distribution.
double next_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

} // namespace

double uplink_gain(double d) {
  if (d <= 0.0) throw std::invalid_argument("uplink_gain: d must be > 0");
  return 1e-3 / (d * d);
}

double downlink_gain(double d, double f_c, double g_r_db) {
  if (d <= 0.0) throw std::invalid_argument("downlink_gain: d must be > 0");
  if (f_c <= 0.0) throw std::invalid_argument("downlink_gain: f_c must be > 0");
  const double friis = kSpeedOfLight / (4.0 * M_PI * f_c * d);
  return db_to_linear(g_r_db) * friis * friis;
}

double harvest_rate(double eta, double h, double p_b) {
  if (eta <= 0.0 || eta > 1.0)
    throw std::invalid_argument("harvest_rate: eta must be in (0,1]");
  if (h <= 0.0) throw std::invalid_argument("harvest_rate: h must be > 0");
  if (p_b <= 0.0) throw std::invalid_argument("harvest_rate: p_b must be > 0");
  return eta * h * p_b;
}

double dbm_per_hz_to_watts(double dbm_per_hz, double bandwidth_hz) {
  const double dbm = dbm_per_hz + 10.0 * std::log10(bandwidth_hz);
  return std::pow(10.0, (dbm - 30.0) / 10.0);
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

NetworkInstance build_network_faded(const PhysicalConfig& cfg, int k, int t,
                                    double d_er_ap, std::uint64_t seed,
                                    double fading_spread) {
  if (k < 1) throw std::invalid_argument("build_network: k must be >= 1");
  if (t < 1) throw std::invalid_argument("build_network: t must be >= 1");
  if (d_er_ap < 0.0)
    throw std::invalid_argument("build_network: d_er_ap must be >= 0");
  if (cfg.cell_radius <= 0.0)
    throw std::invalid_argument("build_network: cell_radius must be > 0");
  if (fading_spread < 0.0 || fading_spread >= 1.0)
    throw std::invalid_argument("build_network: fading_spread must be in [0,1)");

  NetworkInstance inst;
  inst.num_users = k;
  inst.num_slots = t;
  inst.d_er_ap = d_er_ap;
  inst.eta = cfg.eta;
  inst.p_b = cfg.p_b;
  inst.noise_power = dbm_per_hz_to_watts(cfg.noise_density, cfg.bandwidth);
  // s_th_db at or below -200 dB switches the decoding threshold off.
  inst.s_th = Eigen::VectorXd::Constant(
      k, cfg.s_th_db <= -200.0 ? 0.0 : db_to_linear(cfg.s_th_db));
  inst.g.resize(k, t);
  inst.gamma.resize(k, t);
  inst.h.resize(k, t);
  inst.positions.resize(k);

  std::mt19937_64 rng(seed);
  const Position ap{d_er_ap, 0.0}; // ER at the origin
  for (int i = 0; i < k; ++i) {
    double d_er = 0.0, d_ap = 0.0;
    Position p;
    do {
      const double r = cfg.cell_radius * std::sqrt(next_unit(rng));
      const double phi = 2.0 * M_PI * next_unit(rng);
      p = {r * std::cos(phi), r * std::sin(phi)};
      d_er = std::hypot(p.x, p.y);
      d_ap = std::hypot(p.x - ap.x, p.y - ap.y);
    } while (d_er < kMinNodeSeparation || d_ap < kMinNodeSeparation);
    inst.positions[i] = p;
    const double h_i = downlink_gain(d_er, cfg.f_c, cfg.g_r);
    const double g_i = uplink_gain(d_ap);
    for (int n = 0; n < t; ++n) {
      double fade_dl = 1.0, fade_ul = 1.0;
      if (fading_spread > 0.0) {
        fade_dl = 1.0 + fading_spread * (2.0 * next_unit(rng) - 1.0);
        fade_ul = 1.0 + fading_spread * (2.0 * next_unit(rng) - 1.0);
      }
      inst.h(i, n) = h_i * fade_dl;
      inst.g(i, n) = g_i * fade_ul;
      inst.gamma(i, n) = harvest_rate(cfg.eta, inst.h(i, n), cfg.p_b);
    }
  }
  return inst;
}

NetworkInstance build_network(const PhysicalConfig& cfg, int k, int t,
                              double d_er_ap, std::uint64_t seed) {
  return build_network_faded(cfg, k, t, d_er_ap, seed, 0.0);
}

bool apply_physical_key(PhysicalConfig& cfg, const std::string& key,
                        const std::string& value) {
  double v = 0.0;
  try {
    std::size_t pos = 0;
    v = std::stod(value, &pos);
    while (pos < value.size() && std::isspace(static_cast<unsigned char>(value[pos]))) ++pos;
    if (pos != value.size()) return false;
  } catch (const std::exception&) {
    return false;
  }
  if (key == "p_b") cfg.p_b = v;
  else if (key == "eta") cfg.eta = v;
  else if (key == "noise_density") cfg.noise_density = v;
  else if (key == "bandwidth") cfg.bandwidth = v;
  else if (key == "f_c") cfg.f_c = v;
  else if (key == "g_r") cfg.g_r = v;
  else if (key == "cell_radius") cfg.cell_radius = v;
  else if (key == "s_th_db") cfg.s_th_db = v;
  else return false;
  return true;
}

PhysicalConfig load_physical_config(std::istream& in) {
  PhysicalConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    // trim
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
    if (!apply_physical_key(cfg, key, value))
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               ": unknown key or bad value `" + key + "`");
  }
  return cfg;
}

PhysicalConfig load_physical_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config file: " + path);
  return load_physical_config(f);
}

} // namespace wpcn
