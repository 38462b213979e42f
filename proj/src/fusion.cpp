#include "gfra/fusion.hpp"

#include <algorithm>
#include <stdexcept>

namespace gfra {

std::vector<int> select_masters(const Eigen::MatrixXd& lsfc_linear) {
  const auto num_ues = lsfc_linear.cols();
  std::vector<int> masters(num_ues);
  for (Eigen::Index k = 0; k < num_ues; ++k) {
    int best = 0;
    for (Eigen::Index l = 1; l < lsfc_linear.rows(); ++l)
      if (lsfc_linear(l, k) > lsfc_linear(best, k)) best = static_cast<int>(l);
    masters[k] = best;  // ties keep the smallest AP index
  }
  return masters;
}

std::vector<Eigen::VectorXd> fuse_alphas(const std::vector<Eigen::VectorXd>& alphas,
                                         const Eigen::MatrixXd& lsfc_linear,
                                         const std::vector<int>& masters,
                                         const std::vector<BlockRange>& blocks) {
  const int num_aps = static_cast<int>(alphas.size());
  if (num_aps != lsfc_linear.rows())
    throw std::invalid_argument("fuse_alphas: AP count mismatch");
  std::vector<Eigen::VectorXd> fused(num_aps);
  for (int l = 0; l < num_aps; ++l) {
    if (alphas[l].size() != alphas[0].size())
      throw std::invalid_argument("fuse_alphas: alpha length mismatch");
    fused[l].resizeLike(alphas[l]);
  }
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const int lm = masters[k];
    const double beta_m = lsfc_linear(lm, static_cast<int>(k));
    for (int m = blocks[k].begin; m <= blocks[k].end; ++m) {
      for (int l = 0; l < num_aps; ++l) {
        if (l == lm) {
          fused[l](m) = alphas[lm](m);
        } else {
          const double beta_l = lsfc_linear(l, static_cast<int>(k));
          fused[l](m) = (beta_l * alphas[l](m) + beta_m * alphas[lm](m)) /
                        (beta_l + beta_m);
        }
      }
    }
  }
  return fused;
}

DetectionResult detect_users(const std::vector<Eigen::VectorXd>& alphas,
                             const std::vector<int>& masters,
                             const std::vector<BlockRange>& blocks,
                             double threshold) {
  const int num_ues = static_cast<int>(blocks.size());
  DetectionResult result;
  result.alpha_min.resize(num_ues);
  for (int k = 0; k < num_ues; ++k) {
    const Eigen::VectorXd& a = alphas[masters[k]];
    int arg = blocks[k].begin;
    for (int m = blocks[k].begin + 1; m <= blocks[k].end; ++m)
      if (a(m) < a(arg)) arg = m;  // ties keep the smallest column index
    result.alpha_min(k) = a(arg);
    if (a(arg) < threshold) {
      const int s = arg - blocks[k].begin + 1;
      result.detected_set.push_back(k);
      result.detected_offsets.push_back(s);
      // W - T_k + 1 equals the block width, which is all the codec needs.
      const auto bits = decode_offset(s, 1, blocks[k].width());
      result.decoded_bits.push_back(bits.value_or(""));
    }
  }
  return result;
}

int num_offset_bits(int pilot_length, int window_w) {
  const int positions = window_w - pilot_length + 1;
  if (positions < 1)
    throw std::invalid_argument("num_offset_bits: pilot longer than window");
  int bits = 0;
  while ((1 << (bits + 1)) <= positions) ++bits;
  return bits;
}

int encode_offset(const std::string& bits, int pilot_length, int window_w) {
  const int n_bits = num_offset_bits(pilot_length, window_w);
  if (static_cast<int>(bits.size()) > n_bits)
    throw std::invalid_argument("encode_offset: bit string too long");
  if (static_cast<int>(bits.size()) != n_bits)
    throw std::invalid_argument("encode_offset: bit string length mismatch");
  int value = 0;
  for (char c : bits) {
    if (c != '0' && c != '1')
      throw std::invalid_argument("encode_offset: bits must be '0'/'1'");
    value = (value << 1) | (c - '0');
  }
  return value + 1;
}

std::optional<std::string> decode_offset(int start_offset, int pilot_length,
                                         int window_w) {
  const int n_bits = num_offset_bits(pilot_length, window_w);
  const int positions = window_w - pilot_length + 1;
  if (start_offset < 1 || start_offset > positions)
    throw std::invalid_argument("decode_offset: offset outside the legal range");
  if (start_offset > (1 << n_bits)) return std::nullopt;  // non-payload offset
  std::string bits(n_bits, '0');
  int value = start_offset - 1;
  for (int i = n_bits - 1; i >= 0; --i, value >>= 1)
    bits[i] = static_cast<char>('0' + (value & 1));
  return bits;
}

Eigen::MatrixXcd refine_channels(const Eigen::MatrixXcd& g_mean,
                                 const std::vector<int>& detected_rows) {
  Eigen::MatrixXcd refined = Eigen::MatrixXcd::Zero(g_mean.rows(), g_mean.cols());
  for (int r : detected_rows) refined.row(r) = g_mean.row(r);
  return refined;
}

}  // namespace gfra
