#include "gfra/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gfra {

std::vector<int> true_support_rows(const GroundTruth& truth,
                                   const std::vector<BlockRange>& blocks) {
  std::vector<int> rows;
  rows.reserve(truth.active_set.size());
  for (std::size_t a = 0; a < truth.active_set.size(); ++a)
    rows.push_back(blocks[truth.active_set[a]].begin + truth.start_offsets[a] - 1);
  return rows;
}

Eigen::MatrixXcd assemble_true_channel(const GroundTruth& truth,
                                       const std::vector<BlockRange>& blocks,
                                       const Eigen::MatrixXcd& ap_channels,
                                       int total_columns) {
  Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(total_columns, ap_channels.rows());
  for (std::size_t a = 0; a < truth.active_set.size(); ++a) {
    const int i = truth.active_set[a];
    const int row = blocks[i].begin + truth.start_offsets[a] - 1;
    const double amp = std::sqrt(truth.tx_powers_mw[a] / 1000.0);
    g.row(row) = amp * ap_channels.col(i).transpose();
  }
  return g;
}

TrialScore score_trial(const DetectionResult& result, const GroundTruth& truth,
                       const std::vector<BlockRange>& blocks, int total_columns,
                       int num_ues) {
  TrialScore score;
  score.num_active = static_cast<int>(truth.active_set.size());
  score.num_ues = num_ues;

  std::vector<char> is_active(num_ues, 0);
  std::vector<int> true_offset(num_ues, 0);
  for (std::size_t a = 0; a < truth.active_set.size(); ++a) {
    is_active[truth.active_set[a]] = 1;
    true_offset[truth.active_set[a]] = truth.start_offsets[a];
  }
  std::vector<char> is_detected(num_ues, 0);
  for (std::size_t j = 0; j < result.detected_set.size(); ++j) {
    const int k = result.detected_set[j];
    is_detected[k] = 1;
    if (is_active[k]) {
      ++score.detected_active;
      if (result.detected_offsets[j] == true_offset[k]) ++score.offset_correct;
    } else {
      ++score.fa_count;
    }
  }
  for (int i : truth.active_set)
    if (!is_detected[i]) ++score.md_count;

  for (std::size_t l = 0; l < truth.channels.size(); ++l) {
    const Eigen::MatrixXcd g_true =
        assemble_true_channel(truth, blocks, truth.channels[l], total_columns);
    const Eigen::MatrixXcd& g_hat = result.channel_estimates[l];
    for (std::size_t a = 0; a < truth.active_set.size(); ++a) {
      const int row = blocks[truth.active_set[a]].begin + truth.start_offsets[a] - 1;
      score.nmse_num += (g_hat.row(row) - g_true.row(row)).squaredNorm();
      score.nmse_den += g_true.row(row).squaredNorm();
    }
  }
  return score;
}

void wilson_interval(long successes, long n, double& low, double& high) {
  if (n <= 0) {
    low = high = 0.0;
    return;
  }
  const double z = 1.959963984540054;  // 95%
  const double p = double(successes) / double(n);
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half =
      z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * double(n) * n)) / denom;
  // the analytic endpoint is exact at the boundary counts; avoid roundoff
  low = successes == 0 ? 0.0 : std::max(0.0, center - half);
  high = successes == n ? 1.0 : std::min(1.0, center + half);
}

Summary aggregate(const std::vector<TrialScore>& scores) {
  if (scores.empty()) throw std::invalid_argument("aggregate: empty score list");
  Summary s;
  s.trials = static_cast<int>(scores.size());
  double num = 0.0, den = 0.0;
  std::vector<double> ratios;
  ratios.reserve(scores.size());
  for (const auto& t : scores) {
    s.total_active += t.num_active;
    s.total_inactive += t.num_ues - t.num_active;
    s.total_md += t.md_count;
    s.total_fa += t.fa_count;
    s.total_detected_active += t.detected_active;
    s.total_offset_correct += t.offset_correct;
    num += t.nmse_num;
    den += t.nmse_den;
    if (t.nmse_den > 0) ratios.push_back(t.nmse_num / t.nmse_den);
  }
  if (s.total_active > 0) {
    s.p_md = double(s.total_md) / double(s.total_active);
    wilson_interval(s.total_md, s.total_active, s.p_md_ci_low, s.p_md_ci_high);
  }
  s.fa_rate = s.total_inactive > 0 ? double(s.total_fa) / double(s.total_inactive) : 0.0;
  if (s.total_detected_active > 0)
    s.offset_accuracy =
        double(s.total_offset_correct) / double(s.total_detected_active);
  s.nmse = den > 0 ? num / den : 0.0;
  if (!ratios.empty()) {
    double mean = 0.0;
    for (double r : ratios) mean += r;
    mean /= double(ratios.size());
    double var = 0.0;
    for (double r : ratios) var += (r - mean) * (r - mean);
    var = ratios.size() > 1 ? var / double(ratios.size() - 1) : 0.0;
    const double half = 1.959963984540054 * std::sqrt(var / double(ratios.size()));
    s.nmse_mean = mean;
    s.nmse_ci_low = mean - half;
    s.nmse_ci_high = mean + half;
  }
  return s;
}

}  // namespace gfra
