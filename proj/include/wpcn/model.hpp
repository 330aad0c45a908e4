#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace wpcn {

/// Physical-layer parameters of the network. Defaults follow the standard
/// desk-scale setup: 3 W energy source, 49% harvesting efficiency,
/// -155 dBm/Hz noise over 1 MHz, 915 MHz carrier, 6 dB receive gain,
/// 10 m cell radius, -10 dB decoding threshold.
struct PhysicalConfig {
  double p_b = 3.0;              // ER transmit power, W
  double eta = 0.49;             // harvesting efficiency, (0,1]
  double noise_density = -155.0; // noise density, dBm/Hz
  double bandwidth = 1e6;        // Hz
  double f_c = 915e6;            // carrier frequency, Hz
  double g_r = 6.0;              // receive antenna gain, dB
  double cell_radius = 10.0;     // user placement radius around ER, m
  double s_th_db = -10.0;        // decoding threshold, dB
};

struct Position {
  double x = 0.0;
  double y = 0.0;
};

/// The fixed data of one optimization problem: K users, T slots, uplink
/// power gains g, harvesting rates gamma (W), noise power (W), per-user
/// linear SINR thresholds. Immutable after construction.
struct NetworkInstance {
  int num_users = 0; // K
  int num_slots = 0; // T
  Eigen::MatrixXd g;     // uplink power gain, K x T
  Eigen::MatrixXd gamma; // harvest rate eta*h*P_B, W, K x T
  double noise_power = 0.0; // sigma^2, W
  Eigen::VectorXd s_th;     // linear SINR threshold per user, K
  double d_er_ap = 0.0;     // ER-AP distance, m
  std::vector<Position> positions; // user coordinates (ER at origin)

  // Stored so gamma = eta * h * p_b stays checkable.
  Eigen::MatrixXd h; // downlink power gain, K x T
  double eta = 0.0;
  double p_b = 0.0;
};

/// Uplink path loss: 1e-3 * d^-2. Rejects d <= 0.
double uplink_gain(double d);

/// Downlink free-space gain: G_r,lin * (c / (4 pi f_c d))^2. Rejects d <= 0.
double downlink_gain(double d, double f_c, double g_r_db);

/// Harvest rate gamma = eta * h * p_b (W); harvested energy over a
/// harvesting duration tau is gamma * tau. Rejects eta outside (0,1].
double harvest_rate(double eta, double h, double p_b);

/// Places k users uniformly at random in a disc of radius cfg.cell_radius
/// around the ER, with the AP at distance d_er_ap from the ER; fills gains
/// and harvest rates, converts the noise density to watts over the
/// configured bandwidth. Deterministic given the seed. Draws closer than
/// 1 m to either the ER or the AP are rejected and redrawn (near-field
/// exclusion).
NetworkInstance build_network(const PhysicalConfig& cfg, int k, int t,
                              double d_er_ap, std::uint64_t seed);

/// Same, with i.i.d. per-slot multiplicative fading on both links
/// (uniform in [1-spread, 1+spread]); spread = 0 reproduces the static
/// default.
NetworkInstance build_network_faded(const PhysicalConfig& cfg, int k, int t,
                                    double d_er_ap, std::uint64_t seed,
                                    double fading_spread);

double dbm_per_hz_to_watts(double dbm_per_hz, double bandwidth_hz);
double db_to_linear(double db);

/// One `key = value` per line; '#' starts a comment; keys not present keep
/// their defaults. Throws std::runtime_error with the line number on a
/// malformed line or unknown key.
PhysicalConfig load_physical_config(std::istream& in);
PhysicalConfig load_physical_config_file(const std::string& path);

/// Applies one key/value pair to cfg; returns false if the key is unknown.
bool apply_physical_key(PhysicalConfig& cfg, const std::string& key,
                        const std::string& value);

} // namespace wpcn
