#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "riskmdp/generators.hpp"

namespace riskmdp::testing {

struct CorpusEntry {
  std::string name;
  std::uint64_t seed;
  MdpModel model;
};

// Fixed cross-check corpus: 10 seeded models, s in {2,3,4}, |U| in {2,3}.
inline std::vector<CorpusEntry> corpus() {
  std::vector<CorpusEntry> out;
  for (std::size_t k = 0; k < 10; ++k) {
    RandomModelSpec spec;
    spec.states = 2 + k % 3;
    spec.actions = 2 + k % 2;
    const std::uint64_t seed = 1000 + k;
    out.push_back({"model" + std::to_string(k) + "_s" + std::to_string(spec.states) + "a" + std::to_string(spec.actions),
                   seed, random_model(spec, seed)});
  }
  return out;
}

inline std::string data_path(const std::string& rel) { return std::string(RISKMDP_DATA_DIR) + "/" + rel; }

}  // namespace riskmdp::testing
