#include "comono/isotonic.hpp"

#include <vector>

namespace comono {

Eigen::VectorXd isotonic_rearrange(const Eigen::VectorXd& values) {
  const int n = static_cast<int>(values.size());
  if (n <= 1) return values;

  struct Block {
    double mean;
    int count;
  };
  std::vector<Block> blocks;
  blocks.reserve(n);
  for (int i = 0; i < n; ++i) {
    blocks.push_back({values[i], 1});
    while (blocks.size() >= 2 && blocks[blocks.size() - 2].mean > blocks.back().mean) {
      Block top = blocks.back();
      blocks.pop_back();
      Block& prev = blocks.back();
      prev.mean = (prev.mean * prev.count + top.mean * top.count) / (prev.count + top.count);
      prev.count += top.count;
    }
  }
  Eigen::VectorXd out(n);
  int pos = 0;
  for (const Block& b : blocks)
    for (int i = 0; i < b.count; ++i) out[pos++] = b.mean;
  return out;
}

}  // namespace comono
