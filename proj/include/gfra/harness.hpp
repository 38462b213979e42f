#ifndef GFRA_HARNESS_HPP
#define GFRA_HARNESS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gfra/metrics.hpp"
#include "gfra/sbl.hpp"
#include "gfra/scene.hpp"

namespace gfra {

struct ExperimentConfig {
  SceneConfig scene;
  int pilot_length_min = 20;
  int pilot_length_max = 24;
  int window_w = 24;
  Hyperparams hyper;
  std::vector<double> p_max_sweep_mw = {100, 175, 250, 325, 400};
  int trials_per_point = 200;
  std::vector<std::string> algorithms = {"vb-fusion", "vb-nofusion", "genie"};
  std::uint64_t master_seed = 1;
  std::string output_path = "results.csv";
  double detection_threshold = 1.0;
  double noise_scale = 1.0;        // scales the synthesized noise stddev
  double genie_prior_scale = 1.0;  // inflates the genie prior variance
  double beta_jitter_db = 0.0;     // multiplicative LSFC error at the CPU
  int threads = 0;                 // 0: GFRA_THREADS env, else hardware
  bool timing = true;              // false: wall_time_s emitted as 0

  void validate() const;  // throws std::invalid_argument
};

// Flat dotted-key config text, `key = value`, '#' comments. Unknown keys are
// errors. The full schema is listed in the README and configs/desk.cfg.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

struct ResultRecord {
  std::string algorithm;
  double p_max_mw = 0.0;
  int trials = 0;
  std::optional<double> p_md;
  std::optional<double> p_md_ci_low;
  std::optional<double> p_md_ci_high;
  double fa_rate = 0.0;
  std::optional<double> offset_accuracy;
  double nmse = 0.0;
  double nmse_db = 0.0;
  double nmse_ci_low = 0.0;
  double nmse_ci_high = 0.0;
  double wall_time_s = 0.0;
  std::uint64_t seed = 0;
};

// One record per (algorithm, power point); trials parallelized over a worker
// pool, reduced in trial order so the output is thread-count independent.
std::vector<ResultRecord> run_experiment(const ExperimentConfig& config);

extern const char* const kCsvHeader;

void emit_csv(const std::vector<ResultRecord>& records, const std::string& path);
std::vector<ResultRecord> parse_csv(const std::string& path);

// Two-column (p_max_mw, metric) series per algorithm for MD and NMSE, sorted
// ascending in p_max_mw: <prefix>_md_<alg>.tsv, <prefix>_nmse_<alg>.tsv.
void emit_plotdata(const std::vector<ResultRecord>& records,
                   const std::string& prefix);

}  // namespace gfra

#endif
