#ifndef GFRA_FUSION_HPP
#define GFRA_FUSION_HPP

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "gfra/dictionary.hpp"

namespace gfra {

struct DetectionResult {
  Eigen::VectorXd alpha_min;                      // length N
  std::vector<int> detected_set;                  // UE indices, ascending
  std::vector<int> detected_offsets;              // per detected UE, 1-based
  std::vector<std::string> decoded_bits;          // per detected UE; may be empty
  std::vector<Eigen::MatrixXcd> channel_estimates;  // per AP, M x N_r
};

// Master AP per UE: argmax of the LSFC column, smallest AP index on ties.
std::vector<int> select_masters(const Eigen::MatrixXd& lsfc_linear);

// LSFC-weighted average of each AP's precisions with its UE's master AP; the
// master AP keeps its own values unchanged.
std::vector<Eigen::VectorXd> fuse_alphas(const std::vector<Eigen::VectorXd>& alphas,
                                         const Eigen::MatrixXd& lsfc_linear,
                                         const std::vector<int>& masters,
                                         const std::vector<BlockRange>& blocks);

// Per-UE block argmin of the master AP's precisions (smallest index on ties);
// UE detected iff that minimum is below the threshold. Offsets and decoded
// bits filled for detected UEs; channel_estimates left empty.
DetectionResult detect_users(const std::vector<Eigen::VectorXd>& alphas,
                             const std::vector<int>& masters,
                             const std::vector<BlockRange>& blocks,
                             double threshold);

int num_offset_bits(int pilot_length, int window_w);

// Bijection between bit strings of length floor(log2(W-T+1)) and offsets
// {1 .. 2^bits}; offsets past the power-of-two range carry no payload and
// decode to nullopt.
int encode_offset(const std::string& bits, int pilot_length, int window_w);
std::optional<std::string> decode_offset(int start_offset, int pilot_length,
                                         int window_w);

// Zeroes rows outside the detected support; detected rows pass through.
Eigen::MatrixXcd refine_channels(const Eigen::MatrixXcd& g_mean,
                                 const std::vector<int>& detected_rows);

}  // namespace gfra

#endif
