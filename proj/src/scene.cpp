#include "gfra/scene.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace gfra {

double SceneConfig::noise_power_w() const {
  return std::pow(10.0, (noise_psd_dbm_per_hz - 30.0) / 10.0) * bandwidth_hz;
}

void SceneConfig::validate() const {
  if (area_side_km <= 0) throw std::invalid_argument("scene: area_side_km must be > 0");
  if (num_aps <= 0) throw std::invalid_argument("scene: num_aps must be > 0");
  if (antennas_per_ap <= 0) throw std::invalid_argument("scene: antennas_per_ap must be > 0");
  if (ap_height_m < 0) throw std::invalid_argument("scene: ap_height_m must be >= 0");
  if (num_ues <= 0) throw std::invalid_argument("scene: num_ues must be > 0");
  if (num_active < 0 || num_active > num_ues)
    throw std::invalid_argument("scene: need 0 <= num_active <= num_ues");
  if (shadowing_stddev_db < 0)
    throw std::invalid_argument("scene: shadowing_stddev_db must be >= 0");
  if (bandwidth_hz <= 0) throw std::invalid_argument("scene: bandwidth_hz must be > 0");
  if (p_max_tx_mw <= 0) throw std::invalid_argument("scene: p_max_tx_mw must be > 0");
}

double wrap_distance(double ue_x, double ue_y, double ap_x, double ap_y,
                     double height_km, double area_side_km) {
  double best = std::numeric_limits<double>::infinity();
  for (int ix = -1; ix <= 1; ++ix) {
    for (int iy = -1; iy <= 1; ++iy) {
      const double dx = ue_x + ix * area_side_km - ap_x;
      const double dy = ue_y + iy * area_side_km - ap_y;
      best = std::min(best, dx * dx + dy * dy);
    }
  }
  return std::sqrt(best + height_km * height_km);
}

namespace {

std::complex<double> draw_cn(double variance, Rng& rng) {
  std::normal_distribution<double> n(0.0, std::sqrt(variance * 0.5));
  const double re = n(rng);
  const double im = n(rng);
  return {re, im};
}

Eigen::MatrixX2d grid_positions(int count, double side) {
  const int cells = static_cast<int>(std::ceil(std::sqrt(double(count))));
  const double step = side / cells;
  Eigen::MatrixX2d pos(count, 2);
  for (int i = 0; i < count; ++i) {
    pos(i, 0) = (i % cells + 0.5) * step;
    pos(i, 1) = (i / cells + 0.5) * step;
  }
  return pos;
}

}  // namespace

NetworkScene generate_scene(const SceneConfig& config, Rng& rng) {
  config.validate();
  const int num_aps = config.num_aps;
  const int num_ues = config.num_ues;
  std::uniform_real_distribution<double> unif(0.0, config.area_side_km);

  NetworkScene scene;
  if (config.grid_aps) {
    scene.ap_positions = grid_positions(num_aps, config.area_side_km);
  } else {
    scene.ap_positions.resize(num_aps, 2);
    for (int l = 0; l < num_aps; ++l) {
      scene.ap_positions(l, 0) = unif(rng);
      scene.ap_positions(l, 1) = unif(rng);
    }
  }
  scene.ue_positions.resize(num_ues, 2);
  for (int k = 0; k < num_ues; ++k) {
    scene.ue_positions(k, 0) = unif(rng);
    scene.ue_positions(k, 1) = unif(rng);
  }

  std::normal_distribution<double> shadow(0.0, config.shadowing_stddev_db);
  const double height_km = config.ap_height_m / 1000.0;
  const double n0_w = config.noise_power_w();
  scene.lsfc_db.resize(num_aps, num_ues);
  scene.lsfc_linear.resize(num_aps, num_ues);
  for (int l = 0; l < num_aps; ++l) {
    for (int k = 0; k < num_ues; ++k) {
      const double d = std::max(
          wrap_distance(scene.ue_positions(k, 0), scene.ue_positions(k, 1),
                        scene.ap_positions(l, 0), scene.ap_positions(l, 1),
                        height_km, config.area_side_km),
          1e-9);
      const double psi = config.shadowing_stddev_db > 0 ? shadow(rng) : 0.0;
      scene.lsfc_db(l, k) = config.pathloss_intercept_db -
                            config.pathloss_exponent_db_per_decade * std::log10(d) +
                            psi;
      scene.lsfc_linear(l, k) = std::pow(10.0, scene.lsfc_db(l, k) / 10.0) / n0_w;
    }
  }
  return scene;
}

GroundTruth sample_activity(const SceneConfig& config, const NetworkScene& scene,
                            const std::vector<int>& pilot_lengths, int window_w,
                            Rng& rng) {
  const int num_ues = config.num_ues;
  const int num_active = config.num_active;
  if (num_active > num_ues)
    throw std::invalid_argument("sample_activity: num_active > num_ues");
  if (static_cast<int>(pilot_lengths.size()) != num_ues)
    throw std::invalid_argument("sample_activity: pilot_lengths size mismatch");
  for (int t : pilot_lengths)
    if (t < 1 || t > window_w)
      throw std::invalid_argument("sample_activity: pilot length outside [1, W]");

  GroundTruth truth;
  std::vector<int> all(num_ues);
  std::iota(all.begin(), all.end(), 0);
  std::sample(all.begin(), all.end(), std::back_inserter(truth.active_set),
              num_active, rng);

  truth.start_offsets.reserve(num_active);
  for (int i : truth.active_set) {
    std::uniform_int_distribution<int> off(1, window_w - pilot_lengths[i] + 1);
    truth.start_offsets.push_back(off(rng));
  }

  // All N columns are drawn so genie baselines have a channel for every UE.
  truth.channels.reserve(config.num_aps);
  for (int l = 0; l < config.num_aps; ++l) {
    Eigen::MatrixXcd b(config.antennas_per_ap, num_ues);
    for (int k = 0; k < num_ues; ++k)
      for (int n = 0; n < config.antennas_per_ap; ++n)
        b(n, k) = draw_cn(scene.lsfc_linear(l, k), rng);
    truth.channels.push_back(std::move(b));
  }
  return truth;
}

void allocate_power(const NetworkScene& scene, const std::vector<int>& masters,
                    GroundTruth& truth, double p_max_mw) {
  if (truth.active_set.empty())
    throw std::invalid_argument("allocate_power: empty active set");
  double min_beta = std::numeric_limits<double>::infinity();
  for (int i : truth.active_set)
    min_beta = std::min(min_beta, scene.lsfc_linear(masters[i], i));
  truth.tx_powers_mw.clear();
  truth.tx_powers_mw.reserve(truth.active_set.size());
  for (int i : truth.active_set)
    truth.tx_powers_mw.push_back(p_max_mw * min_beta /
                                 scene.lsfc_linear(masters[i], i));
}

ReceivedSignals synthesize_received(const NetworkScene& /*scene*/, int antennas_per_ap,
                                    const PilotSet& pilots, const GroundTruth& truth,
                                    double noise_stddev, Rng& rng) {
  const int num_aps = static_cast<int>(truth.channels.size());
  const int window_w = pilots.window_w;
  ReceivedSignals out;
  out.z.reserve(num_aps);
  for (int l = 0; l < num_aps; ++l)
    out.z.emplace_back(Eigen::MatrixXcd::Zero(window_w, antennas_per_ap));

  for (std::size_t a = 0; a < truth.active_set.size(); ++a) {
    const int i = truth.active_set[a];
    const int s = truth.start_offsets[a];
    const int t_len = pilots.lengths[i];
    if (s < 1 || s - 1 + t_len > window_w)
      throw std::runtime_error("synthesize_received: pilot placement overflows window");
    const double amp = std::sqrt(truth.tx_powers_mw[a] / 1000.0);  // mW -> W
    for (int l = 0; l < num_aps; ++l) {
      const auto& b = truth.channels[l];
      for (int n = 0; n < antennas_per_ap; ++n)
        out.z[l].col(n).segment(s - 1, t_len) +=
            amp * b(n, i) * pilots.pilots[i];
    }
  }

  if (noise_stddev > 0) {
    for (int l = 0; l < num_aps; ++l)
      for (int w = 0; w < window_w; ++w)
        for (int n = 0; n < antennas_per_ap; ++n)
          out.z[l](w, n) += noise_stddev * draw_cn(1.0, rng);
  }
  return out;
}

}  // namespace gfra
