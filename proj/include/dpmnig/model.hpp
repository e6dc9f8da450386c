// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "dpmnig/distributions.hpp"

namespace dpmnig {

// a3*a4 - a0^2 <= 0 makes the joint (mu, beta) prior improper; the
// conjugate formulas divide by it.
struct DegeneracyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The six exponential-family sums over one component's members.
struct SufficientStats {
  double t0 = 0.0;  // member count
  Vec t1;           // sum x
  Vec t2;           // sum u^{-1} x
  double t3 = 0.0;  // sum u
  double t4 = 0.0;  // sum u^{-1}
  Mat t5;           // sum u^{-1} x x'

  static SufficientStats zero(int d) {
    SufficientStats s;
    s.t1 = Vec::Zero(d);
    s.t2 = Vec::Zero(d);
    s.t5 = Mat::Zero(d, d);
    return s;
  }
  SufficientStats& operator+=(const SufficientStats& o) {
    t0 += o.t0; t1 += o.t1; t2 += o.t2;
    t3 += o.t3; t4 += o.t4; t5 += o.t5;
    return *this;
  }
};

// Location/skewness block of a prior in its sampling parameterization,
// derived from a hyperparameter vector.
struct DerivedPrior {
  Vec mu0;
  Vec beta0;
  double tau_mu = 1.0;      // = a4
  double tau_beta = 1.0;    // = a3
  double tau_mubeta = 0.0;  // = a0
};

// Shared prior hyperparameters (one level above the components).
struct CommonHyper {
  double a0 = 1.0;
  Vec a1;
  Vec a2;
  double a3 = 1.0;
  double a4 = 1.0;
  Mat a5;

  double det_tau() const { return a3 * a4 - a0 * a0; }
  DerivedPrior derive() const;
};

// Per-component posterior hyperparameters plus the derived quantities the
// parameter draws need.
struct GroupHyper {
  double a0g = 0.0;
  Vec a1g;
  Vec a2g;
  double a3g = 0.0;
  double a4g = 0.0;
  Mat a5g;

  Vec mu0g;
  Vec beta0g;
  double tau_mu_g = 0.0;
  double tau_beta_g = 0.0;
  double tau_mubeta_g = 0.0;
  Mat v0g_inv;
};

// Data-driven constants of the top prior layer.
struct ThirdLayer {
  double b0 = 1.0;
  Vec c1;
  Mat bmat1;
  Vec c2;
  Mat bmat2;
  double b3 = 1.0;
  double b4 = 1.0;
  double nu0 = 2.0;
  Mat lambda0;
};

// Counters for every guard that fires during model-level computations.
struct ModelGuards {
  long rate_floor_events = 0;   // nonpositive exponential rate floored
  long df_floor_events = 0;     // Wishart df raised to d + 0.1
  long jitter_events = 0;       // SPD repair of a covariance/precision
  long pd_truncation_events = 0;  // a0 draw truncated to keep tau PD
};

// Sums t_j over `members`; an empty member set yields all-zero stats.
SufficientStats sufficient_stats(const Mat& data, const Vec& u_inv, const Vec& u,
                                 std::span<const int> members);

// Conjugate update a_{j,g} = a_j + t_j plus the derived posterior
// quantities (mu0g, beta0g, tau's and the Wishart scale inverse).
// Throws DegeneracyError when a3g*a4g - a0g^2 <= 0.
GroupHyper update_group_hypers(const CommonHyper& common, const SufficientStats& stats,
                               ModelGuards* guards = nullptr);

// Extra pseudo-observations entering only the gamma draw.  The printed
// data-driven calibration gives gamma a prior worth the whole data set;
// without some of that mass the likelihood leaves gamma nearly free
// along the (gamma, sigma) scale ridge.
struct GammaBoost {
  double kappa = 0.0;  // pseudo-observation count
  double mean = 1.0;   // prior location for gamma
};

// One joint draw (gamma, sigma^{-1}, mu, beta) from the three-stage
// posterior described by gh.
ComponentParams sample_component_params(const GroupHyper& gh, Rng& rng,
                                        ModelGuards* guards = nullptr,
                                        const GammaBoost& boost = {});

// Options controlling the guards in sample_common_hypers.
struct CommonHyperOptions {
  double rate_floor = 1e-6;  // floor for nonpositive exponential rates
  double pd_fraction = 0.9;  // a0 kept below pd_fraction * sqrt(a3*a4)
};

// One draw of the common hyperparameters from their conditional
// posteriors given the component parameters and mixing proportions.
CommonHyper sample_common_hypers(std::span<const ComponentParams> params,
                                 std::span<const double> weights,
                                 const ThirdLayer& tl, Rng& rng,
                                 const CommonHyperOptions& opt = {},
                                 ModelGuards* guards = nullptr);

// Data-driven third-layer constants computed from the full data set and
// the current latent-variable moments.
ThirdLayer compute_third_layer(const Mat& data, const Vec& u, const Vec& u_inv,
                               ModelGuards* guards = nullptr);

// Same constants recalibrated so the implied prior carries the given
// total weight instead of N observations (rates and vector centers are
// per-observation scaled); weight = N reproduces compute_third_layer.
ThirdLayer scale_third_layer(const ThirdLayer& tl, double n_obs, double weight);

// SPD repair used across the model: if llt fails, add
// 1e-8 * trace/d * I (escalating) until it succeeds.
Mat ensure_spd(Mat m, ModelGuards* guards = nullptr, double floor_scale = 0.0);

}  // namespace dpmnig
