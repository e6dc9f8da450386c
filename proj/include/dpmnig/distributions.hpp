// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <Eigen/Dense>
#include <utility>

#include "dpmnig/rng.hpp"

namespace dpmnig {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// One mixture component: location mu, skewness beta, inverse-Gaussian
// mixing parameter gamma and scale matrix sigma, with the derived
// quantities every density evaluation needs.
struct ComponentParams {
  Vec mu;
  Vec beta;
  double gamma = 1.0;
  Mat sigma;

  // caches, populated by make_component_params
  Mat sigma_inv;
  Mat sigma_chol;       // lower Cholesky factor of sigma
  Vec sigma_inv_beta;
  double alpha_star = 1.0;   // sqrt(gamma^2 + beta' sigma_inv beta)
  double log_det_sigma = 0.0;

  int dim() const { return static_cast<int>(mu.size()); }
};

// Validates shapes and positive-definiteness, fills the caches.
// Throws std::domain_error (non-SPD sigma, gamma <= 0) or
// std::invalid_argument (shape mismatch).
ComponentParams make_component_params(Vec mu, Vec beta, double gamma, Mat sigma);

// Generalized inverse Gaussian parameter triple; density
// proportional to u^{lambda-1} exp{-(chi/u + psi u)/2} on u > 0.
struct GigParams {
  double lambda;
  double chi;
  double psi;
};

// ln of the MNIG density at x.
double mnig_logpdf(const Vec& x, const ComponentParams& p);

// Mean mu + beta/gamma and covariance sigma/gamma + beta beta' / gamma^3.
std::pair<Vec, Mat> mnig_mean_cov(const ComponentParams& p);

// Draw from the one-parameter inverse Gaussian mixing law
// f(u) = (2 pi)^{-1/2} e^gamma u^{-3/2} exp{-(1/u + gamma^2 u)/2},
// i.e. IG with mean 1/gamma and shape 1.
double sample_ig(double gamma, Rng& rng);

// E[U] and E[1/U] for GIG(lambda, chi, psi) via Bessel ratios.
struct GigMoments {
  double e_u;
  double e_uinv;
};
GigMoments gig_expectations(const GigParams& g);

// Draw from GIG(lambda, chi, psi); Devroye (2014) rejection sampler.
double sample_gig(const GigParams& g, Rng& rng);

// N(mean, variance) conditioned on the value being positive.
double sample_truncated_normal_positive(double mean, double variance, Rng& rng);

// Wishart draw with E[W] = df * scale (Bartlett construction).
Mat sample_wishart(double df, const Mat& scale, Rng& rng);

// Multivariate normal given the precision matrix; solves against the
// Cholesky factor, never forms the inverse.
Vec sample_mvn_precision(const Vec& mean, const Mat& precision, Rng& rng);

// Composite MNIG draw: u from the IG mixing law, then
// x ~ N(mu + u beta, u sigma).  Returns the pair (x, u).
std::pair<Vec, double> sample_mnig(const ComponentParams& p, Rng& rng);

// Standard normal CDF and quantile (used by the truncated-normal sampler
// and exposed for tests).
double norm_cdf(double z);
double norm_quantile(double p);

}  // namespace dpmnig
