// Apache License, Version 2.0, refer to LICENSE.txt

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dpmnig/specfun.hpp"
#include "oracles.hpp"

using dpmnig::specfun::log_bessel_k;

namespace {
// reference values computed with 30-digit arithmetic
struct Golden {
  double nu, x, lnk;
};
const Golden kGoldens[] = {
    {0.5, 1.0, -0.774208647355272567636902385},
    {1.5, 2.0, -1.715317129527080840367505330},
    {1.0, 1.0, -0.507651948210752330947914851},
    {0.0, 1.0, -0.865064398906788096798757908},
    {1.0, 2.0, -1.967071302560513891476864643},
    {0.0, 2.0, -2.172488204975709934738413336},
    {2.0, 3.7, -3.682526574675196677649138935},
    {0.0, 8.5, -9.358172780111210730311041701},
    {1.0, 8.5, -9.302485839518426948660880499},
    {0.0, 12.0, -13.02667808736651275534721460},
    {1.0, 12.0, -12.98662802444998069955076221},
    {3.0, 25.0, -26.21219580037040776599984265},
    {0.5, 700.0, -703.0497488148769749042075702},
    {2.5, 0.001, 18.59379167210154079075279682},
    {7.0, 40.0, -41.01813378168780280819572527},
    {0.0, 1e-8, 2.919747817422440051845183347},
    {200.0, 5.0, 673.9509717256750516625755930},
    {200.0, 0.5, 1134.499080799172947330689209},
    {2.0, 5.0, -5.238362387768045259771881156},
    {3.0, 2.2, -0.801744199011706399829122245},
    {4.0, 15.9, -16.57888886111147690957027339},
    {1.0, 16.1, -17.24101323498979704465150863},
    {0.0, 700.0, -703.0499272589439122322490783},
    {5.0, 300.0, -302.5849193425254103244800062},
};
}  // namespace

TEST_CASE("matches high-precision reference values") {
  for (const auto& g : kGoldens) {
    const double got = log_bessel_k(g.nu, g.x);
    CHECK(std::fabs(got - g.lnk) <= 1e-10 * std::max(1.0, std::fabs(g.lnk)));
  }
}

TEST_CASE("half-integer closed forms") {
  // K_{1/2}(x) = sqrt(pi/(2x)) e^{-x}
  for (double x : {1e-6, 0.03, 0.7, 1.0, 5.5, 80.0, 700.0}) {
    const double expect = 0.5 * std::log(M_PI / (2.0 * x)) - x;
    CHECK(log_bessel_k(0.5, x) == doctest::Approx(expect).epsilon(1e-12));
  }
  // recurrence K_{3/2}(x) = K_{1/2}(x) (1 + 1/x)
  for (double x : {0.2, 2.0, 31.0}) {
    const double expect =
        0.5 * std::log(M_PI / (2.0 * x)) - x + std::log1p(1.0 / x);
    CHECK(log_bessel_k(1.5, x) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("agrees with the quadrature oracle on a grid") {
  const double nus[] = {0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.5, 7.0, 12.0, 35.0, 100.0};
  const double xs[] = {1e-6, 0.01, 0.4, 1.0, 2.0, 2.4, 5.0, 8.1, 11.7, 15.9, 16.2, 40.0, 220.0, 700.0};
  for (double nu : nus) {
    for (double x : xs) {
      const double got = log_bessel_k(nu, x);
      const double want = static_cast<double>(oracle::log_bessel_k(nu, x));
      CHECK(std::fabs(got - want) <= 2e-10 * std::max(1.0, std::fabs(want)));
    }
  }
}

TEST_CASE("strictly decreasing in x for fixed order") {
  for (double nu : {0.0, 0.5, 1.0, 2.5, 6.0}) {
    double prev = log_bessel_k(nu, 0.05);
    for (double x = 0.1; x < 60.0; x *= 1.3) {
      const double cur = log_bessel_k(nu, x);
      CHECK(cur < prev);
      prev = cur;
    }
  }
}

TEST_CASE("forward recurrence residual below 1e-9") {
  // |K_{nu+1} - K_{nu-1} - (2 nu / x) K_nu| / K_{nu+1} via stable ratios
  for (double nu : {1.0, 1.5, 2.0, 3.0, 5.5, 9.0}) {
    for (double x : {0.3, 1.0, 2.7, 6.0, 14.0, 50.0, 340.0}) {
      const double lk_up = log_bessel_k(nu + 1.0, x);
      const double r1 = std::exp(log_bessel_k(nu - 1.0, x) - lk_up);
      const double r2 = std::exp(std::log(2.0 * nu / x) + log_bessel_k(nu, x) - lk_up);
      CHECK(std::fabs(1.0 - r1 - r2) < 1e-9);
    }
  }
}

TEST_CASE("half-integer closed form matches the quadrature path") {
  for (double nu : {0.5, 1.5, 2.5}) {
    for (double x : {0.2, 1.0, 3.3, 12.0, 75.0}) {
      const double closed = log_bessel_k(nu, x);
      const double general = static_cast<double>(oracle::log_bessel_k(nu, x));
      CHECK(std::fabs(closed - general) <= 1e-10 * std::max(1.0, std::fabs(general)));
    }
  }
}

TEST_CASE("domain errors") {
  CHECK_THROWS_AS(log_bessel_k(1.0, 0.0), std::domain_error);
  CHECK_THROWS_AS(log_bessel_k(1.0, -2.0), std::domain_error);
  CHECK_THROWS_AS(log_bessel_k(-0.5, 1.0), std::domain_error);
  CHECK_THROWS_AS(log_bessel_k(1.0, std::nan("")), std::domain_error);
  CHECK_THROWS_AS(log_bessel_k(1.0, std::numeric_limits<double>::infinity()),
                  std::domain_error);
}
