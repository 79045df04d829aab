#pragma once

#include <vector>

#include "stabmd/system.hpp"

namespace stabmd {

struct AtomPair {
  int i = 0;
  int j = 0;         // i < j
  double dist = 0.0;
  Vec3 dr;           // minimum-image displacement r_j - r_i
};

// All pairs with distance < cutoff. Cell list for periodic systems with at
// least 3 cells per dimension, brute force otherwise. Rebuilt every call.
// Throws CapacityError when more than max_pairs pairs are found.
std::vector<AtomPair> build_pair_list(const MatX3& positions,
                                      const SystemSpec& spec, double cutoff,
                                      std::size_t max_pairs = 1u << 22);

}  // namespace stabmd
