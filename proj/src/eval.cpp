// Apache License, Version 2.0, refer to LICENSE.txt

#include "dpmnig/eval.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace dpmnig {

namespace {
long double choose2(long double n) { return 0.5L * n * (n - 1.0L); }
}  // namespace

ContingencyTable cross_tab(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("cross_tab: label vectors differ in length");
  }
  std::vector<int> ra = a, cb = b;
  std::sort(ra.begin(), ra.end());
  ra.erase(std::unique(ra.begin(), ra.end()), ra.end());
  std::sort(cb.begin(), cb.end());
  cb.erase(std::unique(cb.begin(), cb.end()), cb.end());

  std::map<int, int> ridx, cidx;
  for (std::size_t i = 0; i < ra.size(); ++i) ridx[ra[i]] = static_cast<int>(i);
  for (std::size_t j = 0; j < cb.size(); ++j) cidx[cb[j]] = static_cast<int>(j);

  ContingencyTable t;
  t.row_labels = ra;
  t.col_labels = cb;
  t.counts.assign(ra.size(), std::vector<long>(cb.size(), 0));
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++t.counts[ridx[a[i]]][cidx[b[i]]];
  }
  return t;
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("adjusted_rand_index: label vectors differ in length");
  }
  if (a.size() < 2) {
    throw std::invalid_argument("adjusted_rand_index: needs at least two observations");
  }
  const ContingencyTable t = cross_tab(a, b);

  long double sum_cells = 0.0L, sum_rows = 0.0L, sum_cols = 0.0L;
  for (std::size_t i = 0; i < t.counts.size(); ++i) {
    long row = 0;
    for (std::size_t j = 0; j < t.counts[i].size(); ++j) {
      sum_cells += choose2(static_cast<long double>(t.counts[i][j]));
      row += t.counts[i][j];
    }
    sum_rows += choose2(static_cast<long double>(row));
  }
  for (std::size_t j = 0; j < t.counts[0].size(); ++j) {
    long col = 0;
    for (std::size_t i = 0; i < t.counts.size(); ++i) col += t.counts[i][j];
    sum_cols += choose2(static_cast<long double>(col));
  }

  const long double total = choose2(static_cast<long double>(a.size()));
  const long double expected = sum_rows * sum_cols / total;
  const long double max_index = 0.5L * (sum_rows + sum_cols);
  if (max_index == expected) return 1.0;  // both partitions trivial
  return static_cast<double>((sum_cells - expected) / (max_index - expected));
}

}  // namespace dpmnig
