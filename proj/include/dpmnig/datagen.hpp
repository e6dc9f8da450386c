// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "dpmnig/distributions.hpp"

namespace dpmnig {

struct MixtureSpec {
  struct Entry {
    ComponentParams params;
    int size;
  };
  std::vector<Entry> components;

  int total() const {
    int n = 0;
    for (const auto& c : components) n += c.size;
    return n;
  }
  int dim() const { return components.empty() ? 0 : components[0].params.dim(); }
};

// Concatenated MNIG draws per component, with true labels; deterministic
// for a given seed.
std::pair<Mat, std::vector<int>> generate(const MixtureSpec& spec, std::uint64_t seed);

// The two published simulation designs.
MixtureSpec sim1_spec();  // four skewed components in d = 2, N = 650
MixtureSpec sim2_spec();  // three components in d = 4, N = 500

}  // namespace dpmnig
