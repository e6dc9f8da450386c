// Apache License, Version 2.0, refer to LICENSE.txt

#include "dpmnig/model.hpp"

#include <cmath>

namespace dpmnig {

namespace {

// tau_mu m m' + tau_mubeta (m b' + b m') + tau_beta b b'
Mat tau_outer(const Vec& m, const Vec& b, double tau_mu, double tau_mubeta,
              double tau_beta) {
  return tau_mu * m * m.transpose() +
         tau_mubeta * (m * b.transpose() + b * m.transpose()) +
         tau_beta * b * b.transpose();
}

Mat sample_covariance(const Mat& rows) {
  const auto n = rows.rows();
  const Mat centered = rows.rowwise() - rows.colwise().mean();
  return centered.transpose() * centered / static_cast<double>(n - 1);
}

}  // namespace

Mat ensure_spd(Mat m, ModelGuards* guards, double floor_scale) {
  m = 0.5 * (m + m.transpose()).eval();
  Eigen::LLT<Mat> llt(m);
  if (llt.info() == Eigen::Success) return m;
  const auto d = m.rows();
  double base = std::max(std::fabs(m.trace()) / static_cast<double>(d), floor_scale);
  if (!(base > 0.0)) base = 1.0;
  double eps = 1e-8 * base;
  for (int it = 0; it < 30; ++it) {
    Mat repaired = m + eps * Mat::Identity(d, d);
    llt.compute(repaired);
    if (llt.info() == Eigen::Success) {
      if (guards) ++guards->jitter_events;
      return repaired;
    }
    eps *= 10.0;
  }
  throw std::domain_error("ensure_spd: matrix could not be repaired");
}

DerivedPrior CommonHyper::derive() const {
  const double det = det_tau();
  if (det == 0.0) {
    throw DegeneracyError("common hypers: a3*a4 - a0^2 is zero");
  }
  DerivedPrior dp;
  dp.mu0 = (a3 * a2 - a0 * a1) / det;
  dp.beta0 = (a4 * a1 - a0 * a2) / det;
  dp.tau_mu = a4;
  dp.tau_beta = a3;
  dp.tau_mubeta = a0;
  return dp;
}

SufficientStats sufficient_stats(const Mat& data, const Vec& u_inv, const Vec& u,
                                 std::span<const int> members) {
  const int d = static_cast<int>(data.cols());
  SufficientStats s = SufficientStats::zero(d);
  for (int i : members) {
    if (!(u(i) > 0.0) || !(u_inv(i) > 0.0)) {
      throw std::domain_error("sufficient_stats: latent moments must be positive");
    }
    const Vec x = data.row(i).transpose();
    s.t0 += 1.0;
    s.t1 += x;
    s.t2 += u_inv(i) * x;
    s.t3 += u(i);
    s.t4 += u_inv(i);
    s.t5 += u_inv(i) * x * x.transpose();
  }
  return s;
}

GroupHyper update_group_hypers(const CommonHyper& common, const SufficientStats& stats,
                               ModelGuards* guards) {
  GroupHyper g;
  g.a0g = common.a0 + stats.t0;
  g.a1g = common.a1 + stats.t1;
  g.a2g = common.a2 + stats.t2;
  g.a3g = common.a3 + stats.t3;
  g.a4g = common.a4 + stats.t4;
  g.a5g = common.a5 + stats.t5;

  const double det = g.a3g * g.a4g - g.a0g * g.a0g;
  if (!(det > 0.0)) {
    throw DegeneracyError("group hypers: a3g*a4g - a0g^2 is not positive");
  }
  g.mu0g = (g.a3g * g.a2g - g.a0g * g.a1g) / det;
  g.beta0g = (g.a4g * g.a1g - g.a0g * g.a2g) / det;
  g.tau_mu_g = g.a4g;
  g.tau_beta_g = g.a3g;
  g.tau_mubeta_g = g.a0g;

  const DerivedPrior dp = common.derive();
  Mat v0_inv = g.a5g +
               tau_outer(dp.mu0, dp.beta0, dp.tau_mu, dp.tau_mubeta, dp.tau_beta) -
               tau_outer(g.mu0g, g.beta0g, g.tau_mu_g, g.tau_mubeta_g, g.tau_beta_g);
  g.v0g_inv = ensure_spd(std::move(v0_inv), guards);
  return g;
}

ComponentParams sample_component_params(const GroupHyper& gh, Rng& rng,
                                        ModelGuards* guards, const GammaBoost& boost) {
  const int d = static_cast<int>(gh.mu0g.size());

  const double g_num = gh.a0g + boost.kappa;
  const double g_den = gh.a3g + boost.kappa / boost.mean;
  const double gamma = sample_truncated_normal_positive(g_num / g_den, 1.0 / g_den, rng);

  double df = gh.a0g;
  if (df < d + 0.1) {
    df = d + 0.1;
    if (guards) ++guards->df_floor_events;
  }
  // Bartlett draw of T = sigma^{-1} ~ Wishart(df, V0) with V0 = v0g_inv^{-1};
  // the factor of V0 is the inverse transpose of chol(v0g_inv).
  Eigen::LLT<Mat> llt(gh.v0g_inv);
  Mat L = llt.matrixL();
  Mat A = Mat::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    A(i, i) = std::sqrt(rng.chi_squared(df - i));
    for (int j = 0; j < i; ++j) A(i, j) = rng.normal();
  }
  const Mat FA = L.transpose().triangularView<Eigen::Upper>().solve(A);
  const Mat T = ensure_spd(FA * FA.transpose(), guards);

  // joint (mu, beta) given T: block precision [tau_mu T, tau_mubeta T;
  // tau_mubeta T, tau_beta T]
  Mat prec(2 * d, 2 * d);
  prec.topLeftCorner(d, d) = gh.tau_mu_g * T;
  prec.topRightCorner(d, d) = gh.tau_mubeta_g * T;
  prec.bottomLeftCorner(d, d) = gh.tau_mubeta_g * T;
  prec.bottomRightCorner(d, d) = gh.tau_beta_g * T;
  Vec mean(2 * d);
  mean << gh.mu0g, gh.beta0g;
  Vec mb;
  try {
    mb = sample_mvn_precision(mean, prec, rng);
  } catch (const std::domain_error&) {
    mb = sample_mvn_precision(mean, ensure_spd(std::move(prec), guards), rng);
  }

  Mat sigma = ensure_spd(T.llt().solve(Mat::Identity(d, d)), guards);
  ComponentParams p =
      make_component_params(mb.head(d), mb.tail(d), gamma, std::move(sigma));
  // keep the caches exactly consistent with the drawn precision
  p.sigma_inv = T;
  p.sigma_inv_beta = T * p.beta;
  p.alpha_star = std::sqrt(gamma * gamma + p.beta.dot(p.sigma_inv_beta));
  return p;
}

CommonHyper sample_common_hypers(std::span<const ComponentParams> params,
                                 std::span<const double> weights,
                                 const ThirdLayer& tl, Rng& rng,
                                 const CommonHyperOptions& opt, ModelGuards* guards) {
  if (params.empty() || params.size() != weights.size()) {
    throw std::invalid_argument("sample_common_hypers: needs matched params and weights");
  }
  const int d = params[0].dim();
  const auto G = params.size();

  double s0 = 0.0, s3 = 0.0, s4 = 0.0;
  Vec sum_ib = Vec::Zero(d);  // sum sigma^{-1} beta
  Vec sum_im = Vec::Zero(d);  // sum sigma^{-1} mu
  Mat sum_ii = Mat::Zero(d, d);
  for (std::size_t g = 0; g < G; ++g) {
    const ComponentParams& p = params[g];
    double log_det_sigma = 0.0;
    for (int i = 0; i < d; ++i) log_det_sigma += 2.0 * std::log(p.sigma_chol(i, i));
    const double bsb = p.beta.dot(p.sigma_inv_beta);
    s0 += p.gamma - p.mu.dot(p.sigma_inv_beta) - 0.5 * log_det_sigma +
          std::log(weights[g]);
    s3 += 0.5 * (bsb + p.gamma * p.gamma);
    s4 += 0.5 * (p.mu.dot(p.sigma_inv * p.mu) + 1.0);
    sum_ib += p.sigma_inv_beta;
    sum_im += p.sigma_inv * p.mu;
    sum_ii += p.sigma_inv;
  }

  CommonHyper out;
  out.a3 = rng.exponential(tl.b3 + s3);
  out.a4 = rng.exponential(tl.b4 + s4);

  double rate0 = tl.b0 - s0;
  if (rate0 < opt.rate_floor) {
    rate0 = opt.rate_floor;
    if (guards) ++guards->rate_floor_events;
  }
  // a0 drawn from the exponential truncated to [0, cap]; the cap keeps the
  // (mu, beta) prior precision positive definite.
  const double cap = opt.pd_fraction * std::sqrt(out.a3 * out.a4);
  const double tail = std::exp(-rate0 * cap);
  if (guards && tail > 0.01) ++guards->pd_truncation_events;
  out.a0 = -std::log1p(-rng.u01() * (1.0 - tail)) / rate0;
  out.a0 = std::min(out.a0, cap * (1.0 - 1e-12));

  Eigen::LLT<Mat> llt1(tl.bmat1);
  Eigen::LLT<Mat> llt2(tl.bmat2);
  Vec z1(d), z2(d);
  for (int i = 0; i < d; ++i) z1(i) = rng.normal();
  for (int i = 0; i < d; ++i) z2(i) = rng.normal();
  out.a1 = tl.c1 + tl.bmat1 * sum_ib + Mat(llt1.matrixL()) * z1;
  out.a2 = tl.c2 + tl.bmat2 * sum_im + Mat(llt2.matrixL()) * z2;

  const double df5 = tl.nu0 + static_cast<double>(G) * out.a0;
  Mat lambda0_inv = tl.lambda0.llt().solve(Mat::Identity(d, d));
  Mat scale5 = (lambda0_inv + sum_ii).llt().solve(Mat::Identity(d, d));
  out.a5 = sample_wishart(df5, ensure_spd(std::move(scale5), guards), rng);
  return out;
}

ThirdLayer compute_third_layer(const Mat& data, const Vec& u, const Vec& u_inv,
                               ModelGuards* guards) {
  const auto n = data.rows();
  const int d = static_cast<int>(data.cols());
  if (n < 2) throw std::invalid_argument("compute_third_layer: needs N >= 2");

  ThirdLayer tl;
  tl.b0 = 1.0 / static_cast<double>(n);
  tl.b3 = 1.0 / u.sum();
  tl.b4 = 1.0 / u_inv.sum();
  tl.c1 = data.colwise().sum().transpose();
  const Mat weighted = u_inv.asDiagonal() * data;
  tl.c2 = weighted.colwise().sum().transpose();
  const double scale = sample_covariance(data).trace() / d;
  tl.bmat1 = ensure_spd(sample_covariance(data), guards, scale);
  tl.bmat2 = ensure_spd(sample_covariance(weighted), guards, scale);
  tl.nu0 = d + 1.0;
  tl.lambda0 = tl.bmat1 / tl.nu0;
  return tl;
}

ThirdLayer scale_third_layer(const ThirdLayer& tl, double n_obs, double weight) {
  const double f = weight / n_obs;
  ThirdLayer out = tl;
  out.b0 = tl.b0 / f;
  out.b3 = tl.b3 / f;
  out.b4 = tl.b4 / f;
  out.c1 = f * tl.c1;
  out.c2 = f * tl.c2;
  return out;
}

}  // namespace dpmnig
