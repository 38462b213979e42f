#ifndef GFRA_METRICS_HPP
#define GFRA_METRICS_HPP

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "gfra/dictionary.hpp"
#include "gfra/fusion.hpp"
#include "gfra/scene.hpp"

namespace gfra {

struct TrialScore {
  int md_count = 0;          // active UEs not detected
  int fa_count = 0;          // inactive UEs detected
  int offset_correct = 0;    // detected active UEs with the true offset
  int detected_active = 0;   // detected UEs that are truly active
  int num_active = 0;        // K
  int num_ues = 0;           // N
  double nmse_num = 0.0;     // sum ||ghat - g_eff||^2 over true active rows
  double nmse_den = 0.0;     // sum ||g_eff||^2
};

struct Summary {
  int trials = 0;
  long total_active = 0;
  long total_inactive = 0;
  long total_md = 0;
  long total_fa = 0;
  long total_detected_active = 0;
  long total_offset_correct = 0;
  std::optional<double> p_md;  // empty when no active UE was ever drawn
  double p_md_ci_low = 0.0, p_md_ci_high = 0.0;
  double fa_rate = 0.0;
  std::optional<double> offset_accuracy;
  double nmse = 0.0;        // pooled: sum num / sum den (primary)
  double nmse_mean = 0.0;   // mean of per-trial ratios
  double nmse_ci_low = 0.0, nmse_ci_high = 0.0;  // normal approx on ratios
};

// Global dictionary row of each active UE: block_start + S - 1.
std::vector<int> true_support_rows(const GroundTruth& truth,
                                   const std::vector<BlockRange>& blocks);

// Effective row-sparse channel matrix at one AP: row support_row(k) holds
// sqrt(P_k) * b_{l,i_k}^T, zeros elsewhere. This is what the estimator sees
// through the power-agnostic dictionary.
Eigen::MatrixXcd assemble_true_channel(const GroundTruth& truth,
                                       const std::vector<BlockRange>& blocks,
                                       const Eigen::MatrixXcd& ap_channels,
                                       int total_columns);

TrialScore score_trial(const DetectionResult& result, const GroundTruth& truth,
                       const std::vector<BlockRange>& blocks, int total_columns,
                       int num_ues);

// Wilson 95% score interval for a binomial proportion.
void wilson_interval(long successes, long n, double& low, double& high);

Summary aggregate(const std::vector<TrialScore>& scores);

}  // namespace gfra

#endif
