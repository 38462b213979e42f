#ifndef GFRA_SCENE_HPP
#define GFRA_SCENE_HPP

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <vector>

#include "gfra/dictionary.hpp"
#include "gfra/rng.hpp"

namespace gfra {

struct SceneConfig {
  double area_side_km = 1.0;
  int num_aps = 10;           // L
  int antennas_per_ap = 2;    // N_r
  double ap_height_m = 10.0;
  int num_ues = 60;           // N
  int num_active = 8;         // K
  double shadowing_stddev_db = 4.0;
  double pathloss_intercept_db = -140.6;
  double pathloss_exponent_db_per_decade = 36.7;
  double bandwidth_hz = 1e6;
  double noise_psd_dbm_per_hz = -169.0;
  double p_max_tx_mw = 100.0;
  bool grid_aps = false;      // regular grid instead of uniform placement
  std::uint64_t seed = 0;

  // Thermal noise power in watts over the configured bandwidth.
  double noise_power_w() const;
  void validate() const;  // throws std::invalid_argument
};

// Geometry plus large-scale fading. lsfc_linear is noise-normalized:
// beta_tilde = 10^(lsfc_db/10) / N0, so unit-variance additive noise in the
// estimator model is exact.
struct NetworkScene {
  Eigen::MatrixX2d ap_positions;  // L x 2, km
  Eigen::MatrixX2d ue_positions;  // N x 2, km
  Eigen::MatrixXd lsfc_db;        // L x N
  Eigen::MatrixXd lsfc_linear;    // L x N, noise-normalized
};

// Hidden state of one trial. UE and AP indices are 0-based internally;
// start offsets are 1-based (S in {1 .. W-T+1}) to match the placement rule
// row = block_start + S - 1.
struct GroundTruth {
  std::vector<int> active_set;     // K distinct UE indices
  std::vector<int> start_offsets;  // per active UE
  std::vector<double> tx_powers_mw;
  std::vector<Eigen::MatrixXcd> channels;  // per AP: N_r x N, b_{lk} columns
};

struct ReceivedSignals {
  std::vector<Eigen::MatrixXcd> z;  // per AP: W x N_r
};

// Minimum over the 9 torus translates of the UE position of the 3-D distance
// (AP height included) to the AP. Inputs in km.
double wrap_distance(double ue_x, double ue_y, double ap_x, double ap_y,
                     double height_km, double area_side_km);

NetworkScene generate_scene(const SceneConfig& config, Rng& rng);

GroundTruth sample_activity(const SceneConfig& config, const NetworkScene& scene,
                            const std::vector<int>& pilot_lengths, int window_w,
                            Rng& rng);

// UE-centric power allocation: the active UE with the weakest master-AP LSFC
// transmits at p_max, everyone else is scaled down to the same received level.
// Fills truth.tx_powers_mw.
void allocate_power(const NetworkScene& scene, const std::vector<int>& masters,
                    GroundTruth& truth, double p_max_mw);

ReceivedSignals synthesize_received(const NetworkScene& scene, int antennas_per_ap,
                                    const PilotSet& pilots, const GroundTruth& truth,
                                    double noise_stddev, Rng& rng);

}  // namespace gfra

#endif
