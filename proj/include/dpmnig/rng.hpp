// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cmath>
#include <cstdint>

namespace dpmnig {

// Deterministic random generator with explicitly coded transforms.
// std::mt19937_64 is seedable everywhere, but the std:: distribution
// adaptors are implementation-defined; to make runs reproducible across
// compilers every variate transform is spelled out here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {
    // warm up so that nearby seeds decorrelate
    for (int i = 0; i < 4; ++i) next();
  }

  // splitmix64 step
  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform on (0,1); never returns 0 or 1
  double u01() {
    double u = static_cast<double>(next() >> 11) * 0x1.0p-53;
    return u > 0.0 ? u : 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * u01(); }

  // standard normal, polar (Marsaglia) method
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * u01() - 1.0;
      v = 2.0 * u01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    have_spare_ = true;
    return u * f;
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // exponential with given rate
  double exponential(double rate) { return -std::log(u01()) / rate; }

  // gamma(shape, scale), Marsaglia-Tsang squeeze; shape < 1 via the
  // boosting identity G(a) = G(a+1) * U^{1/a}
  double gamma(double shape, double scale) {
    if (shape < 1.0) {
      const double u = u01();
      return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = u01();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v * scale;
    }
  }

  double chi_squared(double df) { return gamma(0.5 * df, 2.0); }

  // integer in [0, n)
  std::uint64_t below(std::uint64_t n) {
    // Lemire-style rejection-free enough for our n
    return next() % n;
  }

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Derives decorrelated stream seeds (one per chain, per replicate, ...).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace dpmnig
