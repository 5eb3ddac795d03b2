#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "webcorpus/phash.hpp"

namespace webcorpus {

// BK-tree over 64-bit hashes under the Hamming metric. Single-writer build,
// then concurrent read-only radius queries.
class HammingIndex {
public:
  struct Match {
    PHash64 hash;
    uint32_t payload;
    int distance;
  };

  void insert(PHash64 hash, uint32_t payload) {
    if (nodes_.empty()) {
      nodes_.push_back({hash, payload, {}});
      return;
    }
    uint32_t cur = 0;
    for (;;) {
      int d = hamming(hash, nodes_[cur].hash);
      auto& children = nodes_[cur].children;
      auto it = std::find_if(children.begin(), children.end(),
                             [d](const auto& e) { return e.first == d; });
      if (it == children.end()) {
        children.emplace_back(uint8_t(d), uint32_t(nodes_.size()));
        nodes_.push_back({hash, payload, {}});
        return;
      }
      cur = it->second;
    }
  }

  // All stored entries within Hamming distance <= radius of the probe,
  // ordered by (distance, payload).
  std::vector<Match> radius_query(PHash64 probe, int radius) const {
    std::vector<Match> out;
    if (nodes_.empty()) return out;
    std::vector<uint32_t> stack{0};
    while (!stack.empty()) {
      uint32_t cur = stack.back();
      stack.pop_back();
      const Node& node = nodes_[cur];
      int d = hamming(probe, node.hash);
      if (d <= radius) out.push_back({node.hash, node.payload, d});
      // Triangle inequality: only children keyed in [d-radius, d+radius]
      // can contain matches.
      for (const auto& [key, child] : node.children)
        if (int(key) >= d - radius && int(key) <= d + radius) stack.push_back(child);
    }
    std::sort(out.begin(), out.end(), [](const Match& a, const Match& b) {
      return a.distance != b.distance ? a.distance < b.distance : a.payload < b.payload;
    });
    return out;
  }

  size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }

private:
  struct Node {
    PHash64 hash;
    uint32_t payload;
    std::vector<std::pair<uint8_t, uint32_t>> children;
  };
  std::vector<Node> nodes_;
};

}  // namespace webcorpus
