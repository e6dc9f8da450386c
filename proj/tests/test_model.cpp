// Apache License, Version 2.0, refer to LICENSE.txt

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "dpmnig/model.hpp"
#include "oracles.hpp"

using namespace dpmnig;

namespace {

CommonHyper common1d() {
  CommonHyper c;
  c.a0 = 0.8;
  c.a1 = Vec::Constant(1, 0.5);
  c.a2 = Vec::Constant(1, 0.7);
  c.a3 = 2.0;
  c.a4 = 1.5;
  c.a5 = Mat::Constant(1, 1, 1.2);
  return c;
}

// theta-dependent part of ln[prior(theta) * complete-data likelihood],
// d = 1, assembled from the raw密 formulas (independent of
// update_group_hypers)
double log_prior_times_lik(double gamma, double mu, double beta, double T,
                           const CommonHyper& c, const Vec& x, const Vec& u,
                           const Vec& u_inv) {
  const DerivedPrior dp = c.derive();
  // truncated normal prior on gamma (functional form)
  double lp = -0.5 * c.a3 * gamma * gamma + c.a0 * gamma;
  // Wishart(a0, a5^{-1}) prior on T
  lp += 0.5 * (c.a0 - 2.0) * std::log(T) - 0.5 * c.a5(0, 0) * T;
  // joint normal on (mu, beta) with precision [[tau_mu T, tau_mb T],[tau_mb T, tau_b T]]
  const double dm = mu - dp.mu0(0), db = beta - dp.beta0(0);
  lp += std::log(T) - 0.5 * T * (dp.tau_mu * dm * dm + 2.0 * dp.tau_mubeta * dm * db +
                                 dp.tau_beta * db * db);
  // complete-data likelihood
  const auto n = x.size();
  lp += 0.5 * n * std::log(T) + gamma * n - 0.5 * gamma * gamma * u.sum();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = x(i) - mu - u(i) * beta;
    lp += -0.5 * T * r * r / u(i);
  }
  return lp;
}

// the same quantity from the derived posterior of update_group_hypers
double log_derived_posterior(double gamma, double mu, double beta, double T,
                             const GroupHyper& g) {
  double lp = -0.5 * g.a3g * gamma * gamma + g.a0g * gamma;
  lp += 0.5 * (g.a0g - 2.0) * std::log(T) - 0.5 * g.v0g_inv(0, 0) * T;
  const double dm = mu - g.mu0g(0), db = beta - g.beta0g(0);
  lp += std::log(T) - 0.5 * T * (g.tau_mu_g * dm * dm + 2.0 * g.tau_mubeta_g * dm * db +
                                 g.tau_beta_g * db * db);
  return lp;
}

}  // namespace

TEST_CASE("sufficient stats direct values") {
  Mat data(1, 1);
  data << 3.0;
  Vec u(1), u_inv(1);
  u << 2.0;
  u_inv << 0.5;
  std::vector<int> mem{0};
  const auto s = sufficient_stats(data, u_inv, u, mem);
  CHECK(s.t0 == 1.0);
  CHECK(s.t1(0) == 3.0);
  CHECK(s.t2(0) == doctest::Approx(1.5));
  CHECK(s.t3 == 2.0);
  CHECK(s.t4 == 0.5);
  CHECK(s.t5(0, 0) == doctest::Approx(4.5));

  const auto z = sufficient_stats(data, u_inv, u, std::vector<int>{});
  CHECK(z.t0 == 0.0);
  CHECK(z.t1.norm() == 0.0);
  CHECK(z.t5.norm() == 0.0);
}

TEST_CASE("sufficient stats additivity") {
  Rng rng(3);
  Mat data(8, 2);
  Vec u(8), u_inv(8);
  for (int i = 0; i < 8; ++i) {
    data(i, 0) = rng.normal();
    data(i, 1) = rng.normal();
    u(i) = 0.3 + rng.u01();
    u_inv(i) = 1.0 / u(i) * (1.0 + rng.u01());
  }
  std::vector<int> a{0, 2, 5}, b{1, 3, 4, 6, 7}, all(8);
  std::iota(all.begin(), all.end(), 0);
  auto sa = sufficient_stats(data, u_inv, u, a);
  const auto sb = sufficient_stats(data, u_inv, u, b);
  const auto s_all = sufficient_stats(data, u_inv, u, all);
  sa += sb;
  CHECK(sa.t0 == s_all.t0);
  CHECK((sa.t1 - s_all.t1).norm() < 1e-12);
  CHECK((sa.t2 - s_all.t2).norm() < 1e-12);
  CHECK(sa.t3 == doctest::Approx(s_all.t3).epsilon(1e-14));
  CHECK(sa.t4 == doctest::Approx(s_all.t4).epsilon(1e-14));
  CHECK((sa.t5 - s_all.t5).norm() < 1e-12);
}

TEST_CASE("group update arithmetic") {
  CommonHyper c;
  c.a0 = 0.5;
  c.a1 = Vec::Zero(1);
  c.a2 = Vec::Zero(1);
  c.a3 = 1.0;
  c.a4 = 1.0;
  c.a5 = Mat::Identity(1, 1);
  SufficientStats s = SufficientStats::zero(1);
  s.t0 = 1.0;
  s.t1 << 0.3;
  s.t2 << 0.4;
  s.t3 = 1.2;
  s.t4 = 0.9;
  s.t5 << 0.5;
  const auto g = update_group_hypers(c, s);
  CHECK(g.a0g == doctest::Approx(1.5));

  // mu0/beta0 substitution example: a3g=2, a4g=2, a0g=1, a1g=[1], a2g=[3]
  CommonHyper c2;
  c2.a0 = 1.0;
  c2.a1 = Vec::Constant(1, 1.0);
  c2.a2 = Vec::Constant(1, 3.0);
  c2.a3 = 2.0;
  c2.a4 = 2.0;
  c2.a5 = Mat::Constant(1, 1, 9.0);
  const auto g2 = update_group_hypers(c2, SufficientStats::zero(1));
  CHECK(g2.mu0g(0) == doctest::Approx(5.0 / 3.0));
  CHECK(g2.beta0g(0) == doctest::Approx(-1.0 / 3.0));
  CHECK(g2.tau_mu_g == 2.0);
  CHECK(g2.tau_beta_g == 2.0);
  CHECK(g2.tau_mubeta_g == 1.0);
}

TEST_CASE("degenerate denominator raises") {
  CommonHyper c;
  c.a0 = 2.0;
  c.a1 = Vec::Zero(1);
  c.a2 = Vec::Zero(1);
  c.a3 = 1.0;
  c.a4 = 1.0;  // a3 a4 - a0^2 = -3
  c.a5 = Mat::Identity(1, 1);
  CHECK_THROWS_AS(update_group_hypers(c, SufficientStats::zero(1)), DegeneracyError);
}

TEST_CASE("conjugacy associativity over disjoint updates") {
  Rng rng(5);
  Mat data(10, 2);
  Vec u(10), u_inv(10);
  for (int i = 0; i < 10; ++i) {
    data(i, 0) = rng.normal(1.0, 2.0);
    data(i, 1) = rng.normal(-1.0, 1.0);
    u(i) = 0.4 + rng.u01();
    u_inv(i) = 1.0 / u(i) * (1.0 + 0.4 * rng.u01());
  }
  CommonHyper c;
  c.a0 = 0.6;
  c.a1 = Vec::Constant(2, 0.2);
  c.a2 = Vec::Constant(2, 0.3);
  c.a3 = 1.1;
  c.a4 = 1.3;
  c.a5 = Mat::Identity(2, 2);
  std::vector<int> first{0, 1, 2, 3}, second{4, 5, 6, 7, 8, 9}, all(10);
  std::iota(all.begin(), all.end(), 0);
  auto s1 = sufficient_stats(data, u_inv, u, first);
  s1 += sufficient_stats(data, u_inv, u, second);
  const auto g_sum = update_group_hypers(c, s1);
  const auto g_all = update_group_hypers(c, sufficient_stats(data, u_inv, u, all));
  CHECK(g_sum.a0g == doctest::Approx(g_all.a0g));
  CHECK((g_sum.mu0g - g_all.mu0g).norm() < 1e-12);
  CHECK((g_sum.v0g_inv - g_all.v0g_inv).norm() < 1e-10);
}

TEST_CASE("V0 positive definite over random valid inputs") {
  Rng rng(7);
  int failures = 0;
  for (int rep = 0; rep < 10000; ++rep) {
    const int d = 1 + static_cast<int>(rng.below(3));
    const int n = 1 + static_cast<int>(rng.below(12));
    Mat data(n, d);
    Vec u(n), u_inv(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j) data(i, j) = rng.normal(0.0, 3.0);
      u(i) = 0.1 + 2.0 * rng.u01();
      u_inv(i) = (1.0 + rng.u01()) / u(i);
    }
    CommonHyper c;
    c.a3 = 0.2 + rng.u01();
    c.a4 = 0.2 + rng.u01();
    c.a0 = 0.95 * std::sqrt(c.a3 * c.a4) * rng.u01();
    c.a1 = Vec::Zero(d);
    c.a2 = Vec::Zero(d);
    for (int j = 0; j < d; ++j) {
      c.a1(j) = rng.normal();
      c.a2(j) = rng.normal();
    }
    c.a5 = sample_wishart(d + 1.5, Mat::Identity(d, d), rng);
    std::vector<int> all(n);
    std::iota(all.begin(), all.end(), 0);
    ModelGuards guards;
    const auto g = update_group_hypers(c, sufficient_stats(data, u_inv, u, all), &guards);
    Eigen::LLT<Mat> llt(g.v0g_inv);
    if (llt.info() != Eigen::Success) ++failures;
  }
  CHECK(failures == 0);
}

TEST_CASE("mu0/beta0 solve the appendix linear system") {
  Rng rng(11);
  for (int rep = 0; rep < 200; ++rep) {
    const int d = 1 + static_cast<int>(rng.below(3));
    CommonHyper c;
    c.a3 = 0.5 + rng.u01();
    c.a4 = 0.5 + rng.u01();
    c.a0 = 0.9 * std::sqrt(c.a3 * c.a4) * rng.u01();
    c.a1 = Vec::Zero(d);
    c.a2 = Vec::Zero(d);
    for (int j = 0; j < d; ++j) {
      c.a1(j) = rng.normal();
      c.a2(j) = rng.normal();
    }
    c.a5 = Mat::Identity(d, d);
    const int n = 1 + static_cast<int>(rng.below(6));
    Mat data(n, d);
    Vec u(n), u_inv(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j) data(i, j) = rng.normal(0.0, 2.0);
      u(i) = 0.2 + rng.u01();
      u_inv(i) = (1.0 + rng.u01()) / u(i);
    }
    std::vector<int> all(n);
    std::iota(all.begin(), all.end(), 0);
    const auto s = sufficient_stats(data, u_inv, u, all);
    const auto g = update_group_hypers(c, s);
    const DerivedPrior dp = c.derive();
    // a4g mu0g + a0g beta0g = a4 mu0 + a0 beta0 + t2
    const Vec lhs1 = g.a4g * g.mu0g + g.a0g * g.beta0g;
    const Vec rhs1 = c.a4 * dp.mu0 + c.a0 * dp.beta0 + s.t2;
    CHECK((lhs1 - rhs1).norm() < 1e-10 * std::max(1.0, rhs1.norm()));
    // a0g mu0g + a3g beta0g = a3 beta0 + a0 mu0 + t1
    const Vec lhs2 = g.a0g * g.mu0g + g.a3g * g.beta0g;
    const Vec rhs2 = c.a3 * dp.beta0 + c.a0 * dp.mu0 + s.t1;
    CHECK((lhs2 - rhs2).norm() < 1e-10 * std::max(1.0, rhs2.norm()));
  }
}

TEST_CASE("grid oracle: derived posterior equals prior times likelihood") {
  const CommonHyper c = common1d();
  Mat data(3, 1);
  data << 0.4, -0.8, 1.1;
  // actual latent values, so u_inv is exactly 1/u and the raw residual
  // form of the likelihood applies
  Vec u(3), u_inv(3);
  u << 0.9, 1.4, 0.7;
  u_inv = u.cwiseInverse();
  std::vector<int> all{0, 1, 2};
  const auto s = sufficient_stats(data, u_inv, u, all);
  const auto g = update_group_hypers(c, s);

  std::vector<double> la, lb;
  for (double gamma = 0.2; gamma <= 2.5; gamma += 0.45) {
    for (double mu = -1.5; mu <= 1.51; mu += 0.6) {
      for (double beta = -1.5; beta <= 1.51; beta += 0.6) {
        for (double T = 0.3; T <= 3.0; T += 0.52) {
          la.push_back(log_prior_times_lik(gamma, mu, beta, T, c,
                                           data.col(0), u, u_inv));
          lb.push_back(log_derived_posterior(gamma, mu, beta, T, g));
        }
      }
    }
  }
  const auto normalize = [](std::vector<double>& v) {
    const double m = *std::max_element(v.begin(), v.end());
    double sum = 0.0;
    for (double x : v) sum += std::exp(x - m);
    const double lse = m + std::log(sum);
    for (double& x : v) x = std::exp(x - lse);
  };
  normalize(la);
  normalize(lb);
  for (std::size_t i = 0; i < la.size(); ++i) {
    CHECK(std::fabs(la[i] - lb[i]) <= 1e-6 * std::max(la[i], 1e-30));
  }
}

TEST_CASE("component parameter draws") {
  Rng rng(13);

  SUBCASE("degenerate concentration pins gamma") {
    GroupHyper g;
    g.a0g = 0.7e12;
    g.a3g = 1e12;
    g.a4g = 2e12;
    g.mu0g = Vec::Zero(1);
    g.beta0g = Vec::Zero(1);
    g.tau_mu_g = 2e12;
    g.tau_beta_g = 1e12;
    g.tau_mubeta_g = 0.5e12;
    g.v0g_inv = Mat::Constant(1, 1, 1e12);
    for (int i = 0; i < 50; ++i) {
      const auto p = sample_component_params(g, rng);
      CHECK(p.gamma == doctest::Approx(0.7).epsilon(1e-4));
    }
  }

  SUBCASE("prior-only draws reproduce the truncated-normal gamma prior") {
    const CommonHyper c = common1d();
    const auto g = update_group_hypers(c, SufficientStats::zero(1));
    const int n = 10000;
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += sample_component_params(g, rng).gamma;
    // E[gamma] under N(a0/a3, 1/a3) 1(gamma > 0) by quadrature
    const double m = c.a0 / c.a3, sd = std::sqrt(1.0 / c.a3);
    double num = 0.0, den = 0.0;
    for (int k = 0; k <= 40000; ++k) {
      const double x = 1e-8 + 8.0 * sd * k / 40000.0;
      const double f = std::exp(-0.5 * (x - m) * (x - m) / (sd * sd));
      num += x * f;
      den += f;
    }
    CHECK(s / n == doctest::Approx(num / den).epsilon(0.02));
  }

  SUBCASE("posterior mean of mu matches the conjugate center") {
    const CommonHyper c = common1d();
    Mat data(3, 1);
    data << 0.4, -0.8, 1.1;
    Vec u(3), u_inv(3);
    u << 0.9, 1.4, 0.7;
    u_inv << 1.25, 0.8, 1.6;
    const auto g =
        update_group_hypers(c, sufficient_stats(data, u_inv, u, std::vector<int>{0, 1, 2}));
    const int n = 10000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double mu = sample_component_params(g, rng).mu(0);
      s += mu;
      s2 += mu * mu;
    }
    const double mean = s / n;
    const double se = std::sqrt((s2 / n - mean * mean) / n);
    CHECK(std::fabs(mean - g.mu0g(0)) < 3.0 * se);
  }

  SUBCASE("df floor engages below d") {
    GroupHyper g;
    g.a0g = 0.4;
    g.a3g = 1.0;
    g.a4g = 1.0;
    g.mu0g = Vec::Zero(2);
    g.beta0g = Vec::Zero(2);
    g.tau_mu_g = 1.0;
    g.tau_beta_g = 1.0;
    g.tau_mubeta_g = 0.2;
    g.v0g_inv = Mat::Identity(2, 2);
    ModelGuards guards;
    const auto p = sample_component_params(g, rng, &guards);
    CHECK(guards.df_floor_events == 1);
    CHECK(p.sigma.rows() == 2);
  }
}

TEST_CASE("common hyper posteriors") {
  Rng rng(17);
  Vec mu0 = Vec::Zero(1), beta0 = Vec::Zero(1);
  Mat sig = Mat::Identity(1, 1);

  ThirdLayer tl;
  tl.b0 = 1.0;
  tl.b3 = 1.0;
  tl.b4 = 1.0;
  tl.c1 = Vec::Zero(1);
  tl.c2 = Vec::Zero(1);
  tl.bmat1 = Mat::Identity(1, 1);
  tl.bmat2 = Mat::Identity(1, 1);
  tl.nu0 = 2.0;
  tl.lambda0 = Mat::Identity(1, 1);

  SUBCASE("exponential rates from the printed formulas") {
    // G=1, beta=0, gamma=1, b3=1: a3 rate = 1 + (0 + 1)/2 = 1.5
    // G=1, mu=0, b4=1: a4 rate = 1 + (0 + 1)/2 = 1.5
    std::vector<ComponentParams> params{make_component_params(mu0, beta0, 1.0, sig)};
    std::vector<double> w{1.0};
    const int n = 30000;
    double s3 = 0, s4 = 0;
    for (int i = 0; i < n; ++i) {
      const auto h = sample_common_hypers(params, w, tl, rng);
      s3 += h.a3;
      s4 += h.a4;
    }
    CHECK(s3 / n == doctest::Approx(1.0 / 1.5).epsilon(0.02));
    CHECK(s4 / n == doctest::Approx(1.0 / 1.5).epsilon(0.02));
  }

  SUBCASE("a5 Wishart mean identity") {
    Vec m1 = Vec::Constant(1, 0.5);
    std::vector<ComponentParams> params{make_component_params(m1, beta0, 1.0, sig),
                                        make_component_params(-m1, beta0, 0.8, 2.0 * sig)};
    std::vector<double> w{0.5, 0.5};
    const int n = 20000;
    double s5 = 0, s0 = 0;
    Mat inv_sum = tl.lambda0.inverse();
    for (const auto& p : params) inv_sum += p.sigma_inv;
    const double scale = 1.0 / inv_sum(0, 0);
    for (int i = 0; i < n; ++i) {
      const auto h = sample_common_hypers(params, w, tl, rng);
      s5 += h.a5(0, 0);
      s0 += h.a0;
    }
    const double want = (tl.nu0 + 2.0 * (s0 / n)) * scale;
    CHECK(s5 / n == doctest::Approx(want).epsilon(0.05));
  }

  SUBCASE("nonpositive a0 rate floors and truncation keeps tau PD") {
    // gamma large makes sum log r exceed b0
    std::vector<ComponentParams> params{make_component_params(mu0, beta0, 9.0, sig)};
    std::vector<double> w{1.0};
    ModelGuards guards;
    for (int i = 0; i < 200; ++i) {
      const auto h = sample_common_hypers(params, w, tl, rng, {}, &guards);
      CHECK(h.det_tau() > 0.0);
    }
    CHECK(guards.rate_floor_events == 200);
  }

  SUBCASE("a1 posterior mean") {
    Vec b = Vec::Constant(1, 0.6);
    std::vector<ComponentParams> params{make_component_params(mu0, b, 1.0, sig)};
    std::vector<double> w{1.0};
    const int n = 30000;
    double s1 = 0;
    for (int i = 0; i < n; ++i) s1 += sample_common_hypers(params, w, tl, rng).a1(0);
    // c1 + B1 * sigma^{-1} beta = 0 + 0.6
    CHECK(s1 / n == doctest::Approx(0.6).epsilon(0.03));
  }
}

TEST_CASE("third layer calibration") {
  SUBCASE("identical unit latents") {
    Mat data(4, 1);
    data << 0.0, 1.0, 2.0, 3.0;
    Vec u = Vec::Ones(4), u_inv = Vec::Ones(4);
    const auto tl = compute_third_layer(data, u, u_inv);
    CHECK(tl.b3 == doctest::Approx(0.25));
    CHECK(tl.b4 == doctest::Approx(0.25));
    CHECK((tl.c1 - tl.c2).norm() < 1e-12);
  }
  SUBCASE("two-point variance") {
    Mat data(2, 1);
    data << 0.0, 2.0;
    Vec u = Vec::Ones(2), u_inv = Vec::Ones(2);
    const auto tl = compute_third_layer(data, u, u_inv);
    CHECK(tl.bmat1(0, 0) == doctest::Approx(2.0));
    CHECK(tl.nu0 == 2.0);
    CHECK(tl.lambda0(0, 0) == doctest::Approx(1.0));
  }
  SUBCASE("b0 is one over N") {
    Mat data = Mat::Random(650, 2);
    Vec u = Vec::Ones(650), u_inv = Vec::Ones(650);
    const auto tl = compute_third_layer(data, u, u_inv);
    CHECK(tl.b0 == doctest::Approx(1.0 / 650.0));
  }
  SUBCASE("needs two rows") {
    Mat data(1, 1);
    data << 1.0;
    Vec u = Vec::Ones(1), u_inv = Vec::Ones(1);
    CHECK_THROWS_AS(compute_third_layer(data, u, u_inv), std::invalid_argument);
  }
  SUBCASE("weight N reproduces the printed values") {
    Mat data = Mat::Random(50, 2);
    Vec u = Vec::Ones(50), u_inv = Vec::Ones(50);
    const auto tl = compute_third_layer(data, u, u_inv);
    const auto s = scale_third_layer(tl, 50.0, 50.0);
    CHECK(s.b0 == doctest::Approx(tl.b0));
    CHECK(s.b3 == doctest::Approx(tl.b3));
    CHECK((s.c1 - tl.c1).norm() < 1e-12);
    CHECK((s.c2 - tl.c2).norm() < 1e-12);
  }
  SUBCASE("zero-variance coordinate is repaired") {
    Mat data(5, 2);
    data << 1, 0, 2, 0, 3, 0, 4, 0, 5, 0;  // second column constant
    Vec u = Vec::Ones(5), u_inv = Vec::Ones(5);
    ModelGuards guards;
    const auto tl = compute_third_layer(data, u, u_inv, &guards);
    Eigen::LLT<Mat> llt(tl.bmat1);
    CHECK(llt.info() == Eigen::Success);
    CHECK(guards.jitter_events > 0);
  }
}

TEST_CASE("ensure_spd repairs with jitter") {
  Mat bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;
  ModelGuards guards;
  const Mat fixed = ensure_spd(bad, &guards);
  Eigen::LLT<Mat> llt(fixed);
  CHECK(llt.info() == Eigen::Success);
  CHECK(guards.jitter_events == 1);
}
