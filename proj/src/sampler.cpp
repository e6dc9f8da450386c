// Apache License, Version 2.0, refer to LICENSE.txt

#include "dpmnig/sampler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <thread>

namespace dpmnig {

namespace {

double logsumexp(const std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

Mat global_covariance(const Mat& data) {
  const Mat centered = data.rowwise() - data.colwise().mean();
  return centered.transpose() * centered / static_cast<double>(data.rows() - 1);
}

// Group recipe of Step 0: gamma = 1, mu = group mean, beta = 0.01,
// sigma = group sample covariance (global covariance when the group is
// too small to have one).
ComponentParams init_component(const Mat& data, const std::vector<int>& members,
                               const Mat& global_cov, ModelGuards* guards) {
  const int d = static_cast<int>(data.cols());
  Vec mean = Vec::Zero(d);
  for (int i : members) mean += data.row(i).transpose();
  mean /= static_cast<double>(members.size());

  Mat cov;
  if (members.size() > static_cast<std::size_t>(d)) {
    cov = Mat::Zero(d, d);
    for (int i : members) {
      const Vec diff = data.row(i).transpose() - mean;
      cov += diff * diff.transpose();
    }
    cov /= static_cast<double>(members.size() - 1);
    Eigen::LLT<Mat> llt(cov);
    if (llt.info() != Eigen::Success) cov = global_cov;
  } else {
    cov = global_cov;
  }
  return make_component_params(mean, Vec::Constant(d, 0.01), 1.0,
                               ensure_spd(std::move(cov), guards));
}

GigMoments latent_moments(const Vec& x, const ComponentParams& p) {
  const Vec diff = x - p.mu;
  const double q2 = 1.0 + diff.dot(p.sigma_inv * diff);
  const double lambda = -0.5 * (p.dim() + 1);
  return gig_expectations({lambda, q2, p.alpha_star * p.alpha_star});
}

// Everything a new-cluster proposal draw needs, precomputed once per sweep
// from the current common hypers.
struct PriorSampler {
  double gamma_mean, gamma_var;
  double df;
  Mat wishart_factor;  // F with F F' = (a5)^{-1}
  DerivedPrior loc;
  int d;

  PriorSampler(const CommonHyper& common, const DerivedPrior& loc_block,
               const GammaBoost& boost, const Mat& a5_scale)
      : loc(loc_block), d(static_cast<int>(common.a1.size())) {
    gamma_mean = (common.a0 + boost.kappa) / (common.a3 + boost.kappa / boost.mean);
    gamma_var = 1.0 / (common.a3 + boost.kappa / boost.mean);
    df = std::max(common.a0, d + 0.1);
    // chol(a5) = L  =>  a5^{-1} = L^{-T} L^{-1}
    const Mat a5 = ensure_spd(a5_scale, nullptr);
    Eigen::LLT<Mat> llt(a5);
    Mat L = llt.matrixL();
    wishart_factor =
        L.transpose().triangularView<Eigen::Upper>().solve(Mat::Identity(d, d));
  }

  ComponentParams draw(Rng& rng) const {
    const double gamma = sample_truncated_normal_positive(gamma_mean, gamma_var, rng);
    Mat A = Mat::Zero(d, d);
    for (int i = 0; i < d; ++i) {
      A(i, i) = std::sqrt(rng.chi_squared(df - i));
      for (int j = 0; j < i; ++j) A(i, j) = rng.normal();
    }
    const Mat FA = wishart_factor * A;
    const Mat T = ensure_spd(FA * FA.transpose(), nullptr);

    Mat prec(2 * d, 2 * d);
    prec.topLeftCorner(d, d) = loc.tau_mu * T;
    prec.topRightCorner(d, d) = loc.tau_mubeta * T;
    prec.bottomLeftCorner(d, d) = loc.tau_mubeta * T;
    prec.bottomRightCorner(d, d) = loc.tau_beta * T;
    Vec mean(2 * d);
    mean << loc.mu0, loc.beta0;
    Vec mb;
    try {
      mb = sample_mvn_precision(mean, prec, rng);
    } catch (const std::domain_error&) {
      mb = sample_mvn_precision(mean, ensure_spd(std::move(prec), nullptr), rng);
    }

    Mat sigma = ensure_spd(T.llt().solve(Mat::Identity(d, d)), nullptr);
    ComponentParams p = make_component_params(mb.head(d), mb.tail(d), gamma, std::move(sigma));
    p.sigma_inv = T;
    p.sigma_inv_beta = T * p.beta;
    p.alpha_star = std::sqrt(gamma * gamma + p.beta.dot(p.sigma_inv_beta));
    return p;
  }
};

// The base measure feeding new-cluster proposals.  The resampled hypers
// (resampled_base = true) adapt the proposal scale to the
// fitted clusters, which lets fringe points split off persistently; the
// data-anchored hypers keep the base measure diffuse so spurious
// components die while seeds can still grow where nothing fits.
PriorSampler make_prior_sampler(const ChainState& state, const GibbsConfig& cfg) {
  if (cfg.resampled_base) {
    return {state.common, state.common.derive(), state.gamma_boost, state.common.a5};
  }
  // Proposal scale draws stay at the spread of the data (not the prior
  // weight): diffuse seeds die quickly on fringes yet still plant where
  // nothing fits, and the snowball comes from the refit, not the seed.
  const double spread =
      state.iteration < cfg.proposal_anneal_sweeps ? 1.0 : cfg.proposal_spread;
  const Mat a5_prop = spread * state.anchor.a5 / cfg.prior_weight;
  return {state.anchor, state.anchor_prior, state.gamma_boost, a5_prop};
}

}  // namespace

ChainState init_chain(const Mat& data, InitMode mode, const GibbsConfig& cfg,
                      std::uint64_t chain_seed, int chain_id) {
  const auto n = data.rows();
  const int d = static_cast<int>(data.cols());
  if (n < 2) throw std::invalid_argument("init_chain: needs N >= 2");

  ChainState st;
  st.chain_id = chain_id;
  st.mode = mode;
  st.rng = Rng(chain_seed);
  st.labels.assign(n, 0);

  int k = 1;
  if (mode == InitMode::singleton) {
    k = static_cast<int>(n);
    for (Eigen::Index i = 0; i < n; ++i) st.labels[i] = static_cast<int>(i);
  } else if (mode == InitMode::random_k) {
    k = static_cast<int>(st.rng.below(static_cast<std::uint64_t>(n))) + 1;
    // quantile split along the first principal direction
    const Mat cov = global_covariance(data);
    Eigen::SelfAdjointEigenSolver<Mat> eig(cov);
    const Vec pc = eig.eigenvectors().col(d - 1);
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    const Vec proj = data * pc;
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return proj(a) < proj(b); });
    for (Eigen::Index r = 0; r < n; ++r) {
      st.labels[order[r]] = static_cast<int>((r * k) / n);
    }
  }

  const Mat global_cov = ensure_spd(global_covariance(data), &st.guards);
  std::vector<std::vector<int>> members(k);
  for (Eigen::Index i = 0; i < n; ++i) members[st.labels[i]].push_back(static_cast<int>(i));
  st.components.reserve(k);
  for (int g = 0; g < k; ++g) {
    Component c;
    c.params = init_component(data, members[g], global_cov, &st.guards);
    c.count = static_cast<int>(members[g].size());
    st.components.push_back(std::move(c));
  }

  st.u = Vec::Zero(n);
  st.u_inv = Vec::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const GigMoments m =
        latent_moments(data.row(i).transpose(), st.components[st.labels[i]].params);
    st.u(i) = m.e_u;
    st.u_inv(i) = m.e_uinv;
  }

  // All data-driven constants are calibrated from the data treated as one
  // group and from a generator seeded off the run seed alone, so the
  // three chains share one prior and their likelihood traces are
  // comparable for the scale-reduction diagnostic.
  std::vector<int> everyone(n);
  std::iota(everyone.begin(), everyone.end(), 0);
  ComponentParams one_group = init_component(data, everyone, global_cov, nullptr);
  Vec u1(n), u1_inv(n);
  const auto refresh_latents = [&] {
    for (Eigen::Index i = 0; i < n; ++i) {
      const GigMoments m = latent_moments(data.row(i).transpose(), one_group);
      u1(i) = m.e_u;
      u1_inv(i) = m.e_uinv;
    }
  };
  refresh_latents();
  const double u_bar = u1.mean();

  const ThirdLayer printed = compute_third_layer(data, u1, u1_inv, &st.guards);
  st.third = scale_third_layer(printed, static_cast<double>(n), cfg.prior_weight);


  // Step 0(h): common hypers as averages of 10000 draws from their priors
  Rng calib_rng(derive_seed(cfg.seed, 0xca11b));
  const int n_draws = 10000;
  CommonHyper avg;
  avg.a0 = avg.a3 = avg.a4 = 0.0;
  avg.a1 = Vec::Zero(d);
  avg.a2 = Vec::Zero(d);
  avg.a5 = Mat::Zero(d, d);
  Eigen::LLT<Mat> l1(st.third.bmat1), l2(st.third.bmat2);
  const Mat c1f = l1.matrixL(), c2f = l2.matrixL();
  for (int it = 0; it < n_draws; ++it) {
    avg.a0 += calib_rng.exponential(st.third.b0);
    avg.a3 += calib_rng.exponential(st.third.b3);
    avg.a4 += calib_rng.exponential(st.third.b4);
    Vec z1(d), z2(d);
    for (int i = 0; i < d; ++i) z1(i) = calib_rng.normal();
    for (int i = 0; i < d; ++i) z2(i) = calib_rng.normal();
    avg.a1 += st.third.c1 + c1f * z1;
    avg.a2 += st.third.c2 + c2f * z2;
    avg.a5 += sample_wishart(st.third.nu0, st.third.lambda0, calib_rng);
  }
  avg.a0 /= n_draws;
  avg.a3 /= n_draws;
  avg.a4 /= n_draws;
  avg.a1 /= n_draws;
  avg.a2 /= n_draws;
  avg.a5 /= n_draws;

  // the anchor must describe a proper joint (mu, beta) prior
  if (!(avg.det_tau() > 1e-9 * avg.a3 * avg.a4)) {
    avg.a0 = 0.9 * std::sqrt(avg.a3 * avg.a4);
    ++st.guards.pd_truncation_events;
  }
  // Re-solve the location block for (mu0, beta0) = (data mean, 0).  The
  // raw averages put the correlation between u and x into beta0 through
  // an ill-conditioned solve, handing the base measure a spurious skew.
  const Vec xbar = data.colwise().mean().transpose();
  // The Wishart channel carries prior_weight pseudo-observations of
  // covariance-scale mass.  Leaving it at the raw average (the full
  // sample covariance, tens of cluster-sized units) inflates every
  // component's scale draw and sends gamma up the scale ridge.
  avg.a5 = cfg.prior_weight * global_cov;
  // floor the skewness channel at one pseudo-observation: beta proposals
  // otherwise spread with 1/prior_weight and outrun the data
  avg.a3 = std::max(avg.a3, u_bar);
  avg.a1 = avg.a0 * xbar;
  avg.a2 = avg.a4 * xbar;
  st.anchor = avg;
  st.anchor_prior = avg.derive();
  st.common = avg;
  st.gamma_boost.kappa = cfg.gamma_prior_weight * static_cast<double>(n);
  st.gamma_boost.mean = 1.0 / u_bar;
  return st;
}

void update_latent(ChainState& state, const Mat& data, const GibbsConfig& cfg) {
  const auto n = data.rows();
  const double lambda = -0.5 * (data.cols() + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const ComponentParams& p = state.components[state.labels[i]].params;
    const Vec x = data.row(i).transpose();
    const Vec diff = x - p.mu;
    const double q2 = 1.0 + diff.dot(p.sigma_inv * diff);
    const GigParams gp{lambda, q2, p.alpha_star * p.alpha_star};
    if (cfg.sample_u) {
      const double u = sample_gig(gp, state.rng);
      state.u(i) = u;
      state.u_inv(i) = 1.0 / u;
    } else {
      const GigMoments m = gig_expectations(gp);
      state.u(i) = m.e_u;
      state.u_inv(i) = m.e_uinv;
    }
  }
}

void update_labels(ChainState& state, const Mat& data, const GibbsConfig& cfg) {
  const auto n = data.rows();
  const PriorSampler prior = make_prior_sampler(state, cfg);

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (cfg.sweep_order == SweepOrder::random) {
    for (Eigen::Index i = n - 1; i > 0; --i) {
      const auto j = state.rng.below(static_cast<std::uint64_t>(i + 1));
      std::swap(order[i], order[j]);
    }
  }

  const int m_draws = cfg.mc_new_cluster;
  std::vector<ComponentParams> proposals;
  proposals.reserve(m_draws);
  std::vector<double> logw, prop_logpdf(m_draws);

  for (int i : order) {
    const Vec x = data.row(i).transpose();

    // remove x_i from its component, dropping the component if emptied
    const int g_old = state.labels[i];
    if (--state.components[g_old].count == 0) {
      state.components.erase(state.components.begin() + g_old);
      for (auto& lab : state.labels) {
        if (lab > g_old) --lab;
      }
    }

    const int live = state.n_components();
    logw.assign(live + 1, 0.0);
    for (int g = 0; g < live; ++g) {
      logw[g] = std::log(static_cast<double>(state.components[g].count)) +
                mnig_logpdf(x, state.components[g].params);
    }

    // Monte Carlo estimate of the new-cluster integral with fresh prior draws
    proposals.clear();
    for (int m = 0; m < m_draws; ++m) {
      proposals.push_back(prior.draw(state.rng));
      prop_logpdf[m] = mnig_logpdf(x, proposals.back());
    }
    logw[live] = std::log(cfg.alpha) - std::log(static_cast<double>(m_draws)) +
                 logsumexp(prop_logpdf);

    // categorical draw in log space
    const double lmax = *std::max_element(logw.begin(), logw.end());
    double total = 0.0;
    for (double& w : logw) {
      w = std::exp(w - lmax);
      total += w;
    }
    double r = state.rng.u01() * total;
    int pick = 0;
    for (; pick < live; ++pick) {
      r -= logw[pick];
      if (r <= 0.0) break;
    }

    if (pick < live) {
      state.labels[i] = pick;
      ++state.components[pick].count;
    } else {
      // new component seeded by the winning prior draw
      double rm = state.rng.u01() *
                  std::accumulate(prop_logpdf.begin(), prop_logpdf.end(), 0.0,
                                  [&](double acc, double lp) {
                                    return acc + std::exp(lp - lmax);
                                  });
      int win = 0;
      for (; win < m_draws - 1; ++win) {
        rm -= std::exp(prop_logpdf[win] - lmax);
        if (rm <= 0.0) break;
      }
      Component c;
      c.params = std::move(proposals[win]);
      c.count = 1;
      state.components.push_back(std::move(c));
      state.labels[i] = live;
    }
  }
}

double log_likelihood(const Mat& data, const ChainState& state) {
  const auto n = data.rows();
  const int live = state.n_components();
  std::vector<double> lw(live);
  std::vector<double> lpi(live);
  for (int g = 0; g < live; ++g) {
    lpi[g] = std::log(static_cast<double>(state.components[g].count) /
                      static_cast<double>(n));
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec x = data.row(i).transpose();
    for (int g = 0; g < live; ++g) {
      lw[g] = lpi[g] + mnig_logpdf(x, state.components[g].params);
    }
    total += logsumexp(lw);
  }
  return total;
}

void gibbs_sweep(ChainState& state, const Mat& data, const GibbsConfig& cfg) {
  update_labels(state, data, cfg);

  // Step 2(a): empirical mixing proportions
  const double n = static_cast<double>(state.n_obs());
  std::vector<double> pi(state.n_components());
  for (int g = 0; g < state.n_components(); ++g) {
    pi[g] = state.components[g].count / n;
  }

  update_latent(state, data, cfg);

  // Step 2(c/d): group hypers and parameter draws per component
  std::vector<std::vector<int>> members(state.n_components());
  for (int i = 0; i < state.n_obs(); ++i) members[state.labels[i]].push_back(i);
  const CommonHyper& base = cfg.resampled_base ? state.common : state.anchor;
  for (int g = 0; g < state.n_components(); ++g) {
    const SufficientStats stats = sufficient_stats(data, state.u_inv, state.u, members[g]);
    state.components[g].hyper = update_group_hypers(base, stats, &state.guards);
    state.components[g].params = sample_component_params(
        state.components[g].hyper, state.rng, &state.guards, state.gamma_boost);
  }

  // Step 2(e): resample the common hypers
  std::vector<ComponentParams> params;
  params.reserve(state.n_components());
  for (const auto& c : state.components) params.push_back(c.params);
  CommonHyperOptions opt;
  opt.rate_floor = cfg.rate_floor;
  state.common = sample_common_hypers(params, pi, state.third, state.rng, opt,
                                      &state.guards);

  state.loglik_trace.push_back(log_likelihood(data, state));
  ++state.iteration;
}

double psrf(const std::vector<std::vector<double>>& traces) {
  const auto m = traces.size();
  if (m < 2) throw std::invalid_argument("psrf: needs at least two chains");
  const auto len = traces[0].size();
  for (const auto& t : traces) {
    if (t.size() != len) throw std::invalid_argument("psrf: chains must have equal length");
  }
  if (len < 10) throw std::invalid_argument("psrf: chains too short");

  const double n = static_cast<double>(len);
  std::vector<double> means(m), vars(m);
  for (std::size_t j = 0; j < m; ++j) {
    double mu = 0.0;
    for (double v : traces[j]) mu += v;
    mu /= n;
    double s2 = 0.0;
    for (double v : traces[j]) s2 += (v - mu) * (v - mu);
    means[j] = mu;
    vars[j] = s2 / (n - 1.0);
  }
  double grand = 0.0;
  for (double v : means) grand += v;
  grand /= static_cast<double>(m);
  double b_over_n = 0.0;
  for (double v : means) b_over_n += (v - grand) * (v - grand);
  b_over_n /= static_cast<double>(m - 1);
  double w = 0.0;
  for (double v : vars) w += v;
  w /= static_cast<double>(m);

  if (w == 0.0) {
    return b_over_n == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  }
  // values below one are finite-sample artifacts; round them up
  return std::max(1.0, std::sqrt(((n - 1.0) / n * w + b_over_n) / w));
}

SweepDraw snapshot(const ChainState& state) {
  const int live = state.n_components();
  std::vector<int> perm(live);
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin(), perm.end(), [&](int a, int b) {
    return state.components[a].params.mu(0) < state.components[b].params.mu(0);
  });
  std::vector<int> rank(live);
  for (int r = 0; r < live; ++r) rank[perm[r]] = r;

  SweepDraw s;
  s.chain_id = state.chain_id;
  s.iteration = state.iteration;
  s.labels.resize(state.n_obs());
  for (int i = 0; i < state.n_obs(); ++i) s.labels[i] = rank[state.labels[i]];
  s.comps.reserve(live);
  for (int r = 0; r < live; ++r) {
    const ComponentParams& p = state.components[perm[r]].params;
    s.comps.push_back({p.gamma, p.mu, p.beta, p.sigma});
  }
  return s;
}

std::pair<PosteriorDraws, RunDiagnostics> run(
    const Mat& data, const GibbsConfig& cfg,
    const std::function<void(const SweepRecord&)>& on_sweep) {
  const auto t_start = std::chrono::steady_clock::now();
  const int n_chains = 3;
  const InitMode modes[3] = {InitMode::single, InitMode::singleton, InitMode::random_k};

  std::vector<ChainState> chains;
  chains.reserve(n_chains);
  for (int c = 0; c < n_chains; ++c) {
    chains.push_back(init_chain(data, modes[c], cfg, derive_seed(cfg.seed, c), c));
  }

  // rolling buffers keep the trailing sweeps so a non-converged run can
  // still report something
  std::vector<std::deque<SweepDraw>> tail(n_chains);
  std::vector<std::vector<SweepRecord>> pending(n_chains);

  const auto advance = [&](ChainState& st, std::deque<SweepDraw>* ring,
                           std::vector<SweepDraw>* collect,
                           std::vector<SweepRecord>* log, int sweeps) {
    for (int s = 0; s < sweeps; ++s) {
      gibbs_sweep(st, data, cfg);
      if (ring) {
        ring->push_back(snapshot(st));
        if (static_cast<int>(ring->size()) > cfg.post_samples) ring->pop_front();
      }
      if (collect) collect->push_back(snapshot(st));
      log->push_back({st.chain_id, st.iteration, st.n_components(),
                      st.loglik_trace.back(), st.guards});
    }
  };

  RunDiagnostics diag;

  const auto run_batch = [&](auto&& fn) {
    if (cfg.threads > 1) {
      std::vector<std::thread> workers;
      std::vector<std::exception_ptr> errors(n_chains);
      for (int c = 0; c < n_chains; ++c) {
        workers.emplace_back([&fn, &errors, c] {
          try {
            fn(c);
          } catch (...) {
            errors[c] = std::current_exception();
          }
        });
      }
      for (auto& w : workers) w.join();
      for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
    } else {
      for (int c = 0; c < n_chains; ++c) fn(c);
    }
    for (int c = 0; c < n_chains; ++c) {
      for (const auto& rec : pending[c]) {
        if (on_sweep) on_sweep(rec);
        diag.sweep_log.push_back(rec);
      }
      pending[c].clear();
    }
  };

  bool converged = false;
  int iter = 0;
  while (iter < cfg.max_iter) {
    const int stride = std::min(cfg.psrf_stride, cfg.max_iter - iter);
    run_batch([&](int c) {
      advance(chains[c], &tail[c], nullptr, &pending[c], stride);
    });
    iter += stride;
    if (iter >= cfg.burn_in_min) {
      // PSRF over the second half of the accumulated traces, capped at a
      // sliding window so one late-locking chain does not stall the
      // diagnostic on stale history
      std::vector<std::vector<double>> windows(n_chains);
      const auto len = chains[0].loglik_trace.size();
      const std::size_t start = std::max(len / 2, len > 300 ? len - 300 : 0);
      for (int c = 0; c < n_chains; ++c) {
        windows[c].assign(chains[c].loglik_trace.begin() + start,
                          chains[c].loglik_trace.end());
      }
      const double r = psrf(windows);
      diag.psrf_trajectory.emplace_back(iter, r);
      if (r < cfg.psrf_threshold) {
        converged = true;
        break;
      }
    }
  }
  diag.converged = converged;
  diag.burn_in_used = iter;

  PosteriorDraws draws;
  draws.n_obs = static_cast<int>(data.rows());
  draws.dim = static_cast<int>(data.cols());
  draws.per_chain_target = cfg.post_samples;

  if (converged) {
    std::vector<std::vector<SweepDraw>> collected(n_chains);
    int done = 0;
    while (done < cfg.post_samples) {
      const int stride = std::min(cfg.psrf_stride, cfg.post_samples - done);
      run_batch([&](int c) {
        advance(chains[c], nullptr, &collected[c], &pending[c], stride);
      });
      done += stride;
      iter += stride;
    }
    for (int c = 0; c < n_chains; ++c) {
      for (auto& s : collected[c]) draws.sweeps.push_back(std::move(s));
    }
  } else {
    for (int c = 0; c < n_chains; ++c) {
      for (auto& s : tail[c]) draws.sweeps.push_back(std::move(s));
    }
  }

  diag.sweeps_per_chain = chains[0].iteration;
  for (const auto& st : chains) {
    diag.guards.rate_floor_events += st.guards.rate_floor_events;
    diag.guards.df_floor_events += st.guards.df_floor_events;
    diag.guards.jitter_events += st.guards.jitter_events;
    diag.guards.pd_truncation_events += st.guards.pd_truncation_events;
  }
  diag.wall_ms = std::chrono::duration<double, std::milli>(
                     std::chrono::steady_clock::now() - t_start)
                     .count();
  return {std::move(draws), std::move(diag)};
}

}  // namespace dpmnig
