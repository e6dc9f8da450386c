// Apache License, Version 2.0, refer to LICENSE.txt

#include "dpmnig/distributions.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "dpmnig/specfun.hpp"

namespace dpmnig {

namespace {
constexpr double kLnPi = 1.1447298858494001741434273513530587;
constexpr double kLn2 = 0.69314718055994530941723212145817657;
}  // namespace

ComponentParams make_component_params(Vec mu, Vec beta, double gamma, Mat sigma) {
  const auto d = mu.size();
  if (beta.size() != d || sigma.rows() != d || sigma.cols() != d) {
    throw std::invalid_argument("component params: inconsistent dimensions");
  }
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw std::domain_error("component params: gamma must be positive");
  }
  ComponentParams p;
  p.mu = std::move(mu);
  p.beta = std::move(beta);
  p.gamma = gamma;
  p.sigma = 0.5 * (sigma + sigma.transpose());
  Eigen::LLT<Mat> llt(p.sigma);
  if (llt.info() != Eigen::Success) {
    throw std::domain_error("component params: sigma is not positive definite");
  }
  p.sigma_chol = llt.matrixL();
  p.sigma_inv = llt.solve(Mat::Identity(d, d));
  p.sigma_inv_beta = llt.solve(p.beta);
  p.alpha_star = std::sqrt(gamma * gamma + p.beta.dot(p.sigma_inv_beta));
  p.log_det_sigma = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) p.log_det_sigma += 2.0 * std::log(p.sigma_chol(i, i));
  return p;
}

double mnig_logpdf(const Vec& x, const ComponentParams& p) {
  const int d = p.dim();
  if (x.size() != d) {
    throw std::invalid_argument("mnig_logpdf: dimension mismatch");
  }
  const Vec diff = x - p.mu;
  const double mahal = diff.dot(p.sigma_inv * diff);
  const double q = std::sqrt(1.0 + mahal);
  const double px = p.gamma + diff.dot(p.sigma_inv_beta);
  const double nu = 0.5 * (d + 1);
  // The mixture integral carries |sigma|^{-1/2}; deriving
  // int N(x; mu + u beta, u sigma) IG(du) in closed form gives
  // 2^{(1-d)/2} |sigma|^{-1/2} [alpha/(pi q)]^{(d+1)/2} e^{p} K_{(d+1)/2}.
  return -0.5 * (d - 1) * kLn2 - 0.5 * p.log_det_sigma +
         nu * (std::log(p.alpha_star) - kLnPi - std::log(q)) + px +
         specfun::log_bessel_k(nu, p.alpha_star * q);
}

std::pair<Vec, Mat> mnig_mean_cov(const ComponentParams& p) {
  const double g = p.gamma;
  Vec mean = p.mu + p.beta / g;
  Mat cov = p.sigma / g + p.beta * p.beta.transpose() / (g * g * g);
  return {std::move(mean), std::move(cov)};
}

double sample_ig(double gamma, Rng& rng) {
  if (!(gamma > 0.0)) throw std::domain_error("sample_ig: gamma must be positive");
  // Michael, Schucany & Haas transformation-with-roots; mean 1/gamma, shape 1
  const double m = 1.0 / gamma;
  const double z = rng.normal();
  const double y = z * z;
  double x = m + 0.5 * m * m * y - 0.5 * m * std::sqrt(4.0 * m * y + m * m * y * y);
  if (x <= 0.0) x = std::numeric_limits<double>::min();  // roundoff guard
  if (rng.u01() <= m / (m + x)) return x;
  return m * m / x;
}

GigMoments gig_expectations(const GigParams& g) {
  if (!(g.chi > 0.0) || !(g.psi > 0.0)) {
    throw std::domain_error("gig_expectations: chi and psi must be positive");
  }
  const double q = std::sqrt(g.chi);
  const double a = std::sqrt(g.psi);
  const double w = a * q;
  // K_{-nu} = K_nu
  const double lk0 = specfun::log_bessel_k(std::fabs(g.lambda), w);
  const double lkp = specfun::log_bessel_k(std::fabs(g.lambda + 1.0), w);
  const double lkm = specfun::log_bessel_k(std::fabs(g.lambda - 1.0), w);
  return {(q / a) * std::exp(lkp - lk0), (a / q) * std::exp(lkm - lk0)};
}

double sample_gig(const GigParams& g, Rng& rng) {
  if (!(g.chi > 0.0) || !(g.psi > 0.0)) {
    throw std::domain_error("sample_gig: chi and psi must be positive");
  }
  // Devroye (2014): standardized two-parameter form (|lambda|, omega).
  const double ap = std::fabs(g.lambda);
  const double omega = std::sqrt(g.chi * g.psi);
  const double alpha = std::sqrt(omega * omega + ap * ap) - ap;
  const auto psi_f = [&](double x) {
    return -alpha * (std::cosh(x) - 1.0) - ap * (std::exp(x) - x - 1.0);
  };
  const auto psi_d = [&](double x) {
    return -alpha * std::sinh(x) - ap * (std::exp(x) - 1.0);
  };

  double t = 1.0;
  double c = -psi_f(1.0);
  if (c > 2.0) {
    t = std::sqrt(2.0 / (alpha + ap));
  } else if (c < 0.5) {
    t = std::log(4.0 / (alpha + 2.0 * ap));
  }
  double s = 1.0;
  c = -psi_f(-1.0);
  if (c > 2.0) {
    s = std::sqrt(4.0 / (alpha * std::cosh(1.0) + ap));
  } else if (c < 0.5) {
    const double s1 = ap > 0.0 ? 1.0 / ap : std::numeric_limits<double>::infinity();
    const double s2 = std::log(1.0 + 1.0 / alpha + std::sqrt(1.0 / (alpha * alpha) + 2.0 / alpha));
    s = std::min(s1, s2);
  }

  const double eta = -psi_f(t), zeta = -psi_d(t);
  const double theta = -psi_f(-s), xi = psi_d(-s);
  const double pr = 1.0 / xi, rr = 1.0 / zeta;
  const double td = t - rr * eta;
  const double sd = s - pr * theta;
  const double qr = td + sd;

  double cand = 0.0;
  for (;;) {
    const double u = rng.u01(), v = rng.u01(), w = rng.u01();
    if (u < qr / (pr + qr + rr)) {
      cand = -sd + qr * v;
    } else if (u < (qr + rr) / (pr + qr + rr)) {
      cand = td - rr * std::log(v);
    } else {
      cand = -sd + pr * std::log(v);
    }
    double env = 1.0;
    if (cand > td) {
      env = std::exp(-eta - zeta * (cand - t));
    } else if (cand < -sd) {
      env = std::exp(-theta + xi * (cand + s));
    }
    if (w * env <= std::exp(psi_f(cand))) break;
  }
  const double x = (ap / omega + std::sqrt(1.0 + ap * ap / (omega * omega))) * std::exp(cand);
  const double scale = std::sqrt(g.chi / g.psi);
  return g.lambda > 0.0 ? x * scale : scale / x;
}

double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double norm_quantile(double p) {
  // Acklam's rational approximation with one Halley polish step
  if (!(p > 0.0) || !(p < 1.0)) {
    throw std::domain_error("norm_quantile: p must lie in (0,1)");
  }
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double cc[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                              -2.400758277161838e+00, -2.549732539343734e+00,
                              4.374664141464968e+00,  2.938163982698783e+00};
  static const double dd[] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1.0 - plow;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((cc[0] * q + cc[1]) * q + cc[2]) * q + cc[3]) * q + cc[4]) * q + cc[5]) /
        ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
  } else if (p > phigh) {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((cc[0] * q + cc[1]) * q + cc[2]) * q + cc[3]) * q + cc[4]) * q + cc[5]) /
        ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
  } else {
    const double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  const double e = norm_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
  x = x - u / (1.0 + 0.5 * x * u);
  return x;
}

double sample_truncated_normal_positive(double mean, double variance, Rng& rng) {
  if (!(variance > 0.0)) {
    throw std::domain_error("sample_truncated_normal_positive: variance must be positive");
  }
  const double sd = std::sqrt(variance);
  const double a = -mean / sd;  // standardized lower bound
  const double p_above = norm_cdf(-a);
  if (p_above >= 1e-3) {
    // inverse CDF on the surviving upper tail
    const double u = rng.u01();
    const double z = -norm_quantile(p_above * (1.0 - u));
    return mean + sd * z;
  }
  // deep tail: Robert's exponential-proposal rejection on Z >= a
  const double lambda = 0.5 * (a + std::sqrt(a * a + 4.0));
  for (;;) {
    const double z = a + rng.exponential(lambda);
    const double rho = std::exp(-0.5 * (z - lambda) * (z - lambda));
    if (rng.u01() <= rho) return mean + sd * z;
  }
}

Mat sample_wishart(double df, const Mat& scale, Rng& rng) {
  const auto d = scale.rows();
  if (scale.cols() != d) throw std::invalid_argument("sample_wishart: scale must be square");
  if (!(df > d - 1)) throw std::domain_error("sample_wishart: df must exceed d - 1");
  Eigen::LLT<Mat> llt(scale);
  if (llt.info() != Eigen::Success) {
    throw std::domain_error("sample_wishart: scale is not positive definite");
  }
  Mat A = Mat::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    A(i, i) = std::sqrt(rng.chi_squared(df - static_cast<double>(i)));
    for (Eigen::Index j = 0; j < i; ++j) A(i, j) = rng.normal();
  }
  const Mat F = Mat(llt.matrixL()) * A;
  Mat W = F * F.transpose();
  return 0.5 * (W + W.transpose());
}

Vec sample_mvn_precision(const Vec& mean, const Mat& precision, Rng& rng) {
  const auto m = mean.size();
  if (precision.rows() != m || precision.cols() != m) {
    throw std::invalid_argument("sample_mvn_precision: dimension mismatch");
  }
  Eigen::LLT<Mat> llt(precision);
  if (llt.info() != Eigen::Success) {
    throw std::domain_error("sample_mvn_precision: precision is not positive definite");
  }
  Vec z(m);
  for (Eigen::Index i = 0; i < m; ++i) z(i) = rng.normal();
  // y = L^{-T} z has covariance (L L')^{-1}
  Mat L = llt.matrixL();
  const Vec y = L.transpose().triangularView<Eigen::Upper>().solve(z);
  return mean + y;
}

std::pair<Vec, double> sample_mnig(const ComponentParams& p, Rng& rng) {
  const int d = p.dim();
  const double u = sample_ig(p.gamma, rng);
  Vec z(d);
  for (int i = 0; i < d; ++i) z(i) = rng.normal();
  Vec x = p.mu + u * p.beta + std::sqrt(u) * (p.sigma_chol * z);
  return {std::move(x), u};
}

}  // namespace dpmnig
