#ifndef GFRA_DICTIONARY_HPP
#define GFRA_DICTIONARY_HPP

#include <Eigen/Dense>
#include <iosfwd>
#include <vector>

#include "gfra/rng.hpp"

namespace gfra {

// Per-UE variable-length pilots inside a window of W symbols. Each pilot has
// unit energy over the whole sequence.
struct PilotSet {
  int window_w = 0;
  std::vector<Eigen::VectorXcd> pilots;  // x_k, length T_k
  std::vector<int> lengths;              // T_k
};

// Closed 0-based column interval [begin, end] of UE k inside the dictionary.
struct BlockRange {
  int begin = 0;
  int end = -1;
  int width() const { return end - begin + 1; }
};

// Over-complete shift dictionary: column j of block k is pilot k placed at
// rows (j - begin) .. (j - begin + T_k - 1), zeros elsewhere.
struct Dictionary {
  Eigen::MatrixXcd d;  // W x M
  std::vector<BlockRange> blocks;
  int total_columns = 0;  // M = (W+1)N - sum T_k
};

PilotSet build_pilots(int num_ues, int window_w, int length_min, int length_max,
                      Rng& rng);

BlockRange block_range(int ue, const std::vector<int>& lengths, int window_w);

Dictionary build_dictionary(const PilotSet& pilots);

// Debug dump (text, row-major re/im pairs plus block table); not a stable
// format.
void dump_dictionary(const Dictionary& dict, std::ostream& os);

}  // namespace gfra

#endif
