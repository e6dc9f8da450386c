// Apache License, Version 2.0, refer to LICENSE.txt

#include "dpmnig/datagen.hpp"

#include <algorithm>
#include <stdexcept>

namespace dpmnig {

std::pair<Mat, std::vector<int>> generate(const MixtureSpec& spec, std::uint64_t seed) {
  if (spec.components.empty()) throw std::invalid_argument("generate: empty spec");
  const int n = spec.total();
  const int d = spec.dim();
  Mat data(n, d);
  std::vector<int> truth(n);
  Rng rng(seed);
  int row = 0;
  for (std::size_t g = 0; g < spec.components.size(); ++g) {
    const auto& entry = spec.components[g];
    if (entry.size < 1) throw std::invalid_argument("generate: component size must be >= 1");
    for (int i = 0; i < entry.size; ++i, ++row) {
      data.row(row) = sample_mnig(entry.params, rng).first.transpose();
      truth[row] = static_cast<int>(g);
    }
  }
  return {std::move(data), std::move(truth)};
}

MixtureSpec sim1_spec() {
  MixtureSpec spec;
  const auto add = [&](double gamma, std::initializer_list<double> mu,
                       std::initializer_list<double> beta,
                       std::initializer_list<double> sigma, int n) {
    Vec m(2), b(2);
    Mat s(2, 2);
    std::copy(mu.begin(), mu.end(), m.data());
    std::copy(beta.begin(), beta.end(), b.data());
    std::copy(sigma.begin(), sigma.end(), s.data());
    spec.components.push_back({make_component_params(m, b, gamma, s), n});
  };
  add(1.2, {-2.0, -10.0}, {0.1, 0.2}, {1.2, 0.0, 0.0, 1.2}, 200);
  add(0.8, {-10.0, -10.0}, {-0.2, -0.2}, {1.0, 0.4, 0.4, 1.0}, 180);
  add(0.6, {-12.0, 2.0}, {0.2, -0.25}, {2.0, 1.0, 1.0, 1.0}, 150);
  add(1.0, {2.0, 2.0}, {-0.2, 0.2}, {1.2, -0.2, -0.2, 1.0}, 120);
  return spec;
}

MixtureSpec sim2_spec() {
  MixtureSpec spec;
  const int d = 4;
  const auto add = [&](double gamma, std::initializer_list<double> mu,
                       std::initializer_list<double> beta, const Mat& sigma, int n) {
    Vec m(d), b(d);
    std::copy(mu.begin(), mu.end(), m.data());
    std::copy(beta.begin(), beta.end(), b.data());
    spec.components.push_back({make_component_params(m, b, gamma, sigma), n});
  };
  add(0.6, {9.0, -6.0, -5.0, 9.0}, {0.0, 0.0, -0.5, -0.5}, Mat::Identity(d, d), 100);
  Mat s2(d, d);
  s2 << 2, 0, 0, 1,
        0, 1, 0, 0,
        0, 0, 1, 0,
        1, 0, 0, 1;
  add(0.9, {7.0, 5.0, 0.0, -7.0}, {0.2, 0.2, 0.2, 0.2}, s2, 200);
  Mat s3(d, d);
  s3 << 6, -2, 3, -1,
        -2, 1, -1, 0,
        3, -1, 4, -1,
        -1, 0, -1, 2;
  add(1.2, {-3.0, -2.0, 7.0, 3.0}, {0.0, 0.0, 0.0, 0.0}, s3, 200);
  return spec;
}

}  // namespace dpmnig
