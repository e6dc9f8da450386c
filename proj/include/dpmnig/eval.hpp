// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <string>
#include <vector>

namespace dpmnig {

struct ContingencyTable {
  std::vector<std::vector<long>> counts;  // rows: labels of a, cols: labels of b
  std::vector<int> row_labels;
  std::vector<int> col_labels;
};

// Adjusted Rand index between two labelings of the same observations.
// Both partitions being a single cluster gives 1.0 by convention.
double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

// Co-occurrence counts with sorted distinct labels on each axis.
ContingencyTable cross_tab(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace dpmnig
