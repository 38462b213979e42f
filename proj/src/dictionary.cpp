#include "gfra/dictionary.hpp"

#include <ostream>
#include <stdexcept>

namespace gfra {

PilotSet build_pilots(int num_ues, int window_w, int length_min, int length_max,
                      Rng& rng) {
  if (length_min < 1 || length_min > length_max || length_max > window_w)
    throw std::invalid_argument("build_pilots: need 1 <= length_min <= length_max <= W");
  PilotSet set;
  set.window_w = window_w;
  set.lengths.reserve(num_ues);
  std::uniform_int_distribution<int> len(length_min, length_max);
  for (int k = 0; k < num_ues; ++k) set.lengths.push_back(len(rng));

  std::normal_distribution<double> n(0.0, 1.0);
  set.pilots.reserve(num_ues);
  for (int k = 0; k < num_ues; ++k) {
    Eigen::VectorXcd x(set.lengths[k]);
    for (int t = 0; t < set.lengths[k]; ++t) {
      const double re = n(rng);
      const double im = n(rng);
      x(t) = std::complex<double>(re, im);
    }
    x /= x.norm();
    set.pilots.push_back(std::move(x));
  }
  return set;
}

BlockRange block_range(int ue, const std::vector<int>& lengths, int window_w) {
  // 1-based: start = (W+1)(k-1) - sum_{k'<k} T_k' + 1, end = start + W - T_k.
  long prefix = 0;
  for (int j = 0; j < ue; ++j) prefix += lengths[j];
  BlockRange r;
  r.begin = static_cast<int>((long(window_w) + 1) * ue - prefix);
  r.end = r.begin + window_w - lengths[ue];
  return r;
}

Dictionary build_dictionary(const PilotSet& pilots) {
  const int num_ues = static_cast<int>(pilots.pilots.size());
  const int w = pilots.window_w;
  Dictionary dict;
  dict.blocks.reserve(num_ues);
  long m = 0;
  for (int k = 0; k < num_ues; ++k) {
    dict.blocks.push_back(block_range(k, pilots.lengths, w));
    m += dict.blocks.back().width();
  }
  dict.total_columns = static_cast<int>(m);
  dict.d = Eigen::MatrixXcd::Zero(w, dict.total_columns);
  for (int k = 0; k < num_ues; ++k) {
    const auto& blk = dict.blocks[k];
    for (int j = 0; j < blk.width(); ++j)
      dict.d.col(blk.begin + j).segment(j, pilots.lengths[k]) = pilots.pilots[k];
  }
  return dict;
}

void dump_dictionary(const Dictionary& dict, std::ostream& os) {
  os << "W " << dict.d.rows() << " M " << dict.total_columns << "\n";
  os << "blocks";
  for (const auto& b : dict.blocks) os << " [" << b.begin << "," << b.end << "]";
  os << "\n";
  for (Eigen::Index r = 0; r < dict.d.rows(); ++r) {
    for (Eigen::Index c = 0; c < dict.d.cols(); ++c)
      os << dict.d(r, c).real() << " " << dict.d(r, c).imag()
         << (c + 1 < dict.d.cols() ? " " : "");
    os << "\n";
  }
}

}  // namespace gfra
