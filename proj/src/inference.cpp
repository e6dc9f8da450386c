// Apache License, Version 2.0, refer to LICENSE.txt

#include "dpmnig/inference.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dpmnig {

std::vector<int> map_allocation(const PosteriorDraws& draws) {
  if (draws.sweeps.empty()) {
    throw std::invalid_argument("map_allocation: no retained sweeps");
  }
  const int n = draws.n_obs;
  int max_id = 0;
  for (const auto& s : draws.sweeps) {
    max_id = std::max(max_id, static_cast<int>(s.comps.size()));
  }
  std::vector<int> counts(static_cast<std::size_t>(n) * max_id, 0);
  for (const auto& s : draws.sweeps) {
    for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(i) * max_id + s.labels[i]];
  }
  std::vector<int> out(n);
  for (int i = 0; i < n; ++i) {
    int best = 0, best_count = -1;
    for (int g = 0; g < max_id; ++g) {
      const int c = counts[static_cast<std::size_t>(i) * max_id + g];
      if (c > best_count) {  // strict: ties keep the lowest id
        best_count = c;
        best = g;
      }
    }
    out[i] = best;
  }
  return out;
}

int modal_g(const PosteriorDraws& draws) {
  if (draws.sweeps.empty()) throw std::invalid_argument("modal_g: no retained sweeps");
  std::map<int, int> freq;
  for (const auto& s : draws.sweeps) ++freq[static_cast<int>(s.comps.size())];
  int best = 0, best_count = -1;
  for (const auto& [g, c] : freq) {
    if (c > best_count) {  // map iterates ascending, ties keep the smaller G
      best_count = c;
      best = g;
    }
  }
  return best;
}

std::vector<CompSnapshot> estimate_params(const PosteriorDraws& draws) {
  const int g_hat = modal_g(draws);
  const int d = draws.dim;
  std::vector<CompSnapshot> acc(g_hat);
  for (auto& c : acc) {
    c.gamma = 0.0;
    c.mu = Vec::Zero(d);
    c.beta = Vec::Zero(d);
    c.sigma = Mat::Zero(d, d);
  }
  int used = 0;
  for (const auto& s : draws.sweeps) {
    if (static_cast<int>(s.comps.size()) != g_hat) continue;
    ++used;
    for (int g = 0; g < g_hat; ++g) {
      acc[g].gamma += s.comps[g].gamma;
      acc[g].mu += s.comps[g].mu;
      acc[g].beta += s.comps[g].beta;
      acc[g].sigma += s.comps[g].sigma;
    }
  }
  for (auto& c : acc) {
    c.gamma /= used;
    c.mu /= used;
    c.beta /= used;
    c.sigma /= used;
  }
  return acc;
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("percentile: empty sample");
  std::sort(values.begin(), values.end());
  const double h = p * (static_cast<double>(values.size()) - 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  const double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

std::map<std::string, Interval> credible_intervals(const PosteriorDraws& draws,
                                                   double level) {
  if (!(level > 0.0) || !(level < 1.0)) {
    throw std::invalid_argument("credible_intervals: level must lie in (0,1)");
  }
  const int g_hat = modal_g(draws);
  const int d = draws.dim;

  std::vector<const SweepDraw*> used;
  for (const auto& s : draws.sweeps) {
    if (static_cast<int>(s.comps.size()) == g_hat) used.push_back(&s);
  }
  if (used.size() < 40) {
    throw std::invalid_argument("credible_intervals: too few modal-G sweeps");
  }

  const double lo_p = 0.5 * (1.0 - level);
  const double hi_p = 1.0 - lo_p;
  std::map<std::string, Interval> out;
  std::vector<double> buf(used.size());
  const auto add = [&](const std::string& key, auto&& getter) {
    for (std::size_t s = 0; s < used.size(); ++s) buf[s] = getter(*used[s]);
    out[key] = {percentile(buf, lo_p), percentile(buf, hi_p)};
  };

  for (int g = 0; g < g_hat; ++g) {
    const std::string pre = "comp" + std::to_string(g) + ".";
    add(pre + "gamma", [g](const SweepDraw& s) { return s.comps[g].gamma; });
    for (int i = 0; i < d; ++i) {
      add(pre + "mu[" + std::to_string(i) + "]",
          [g, i](const SweepDraw& s) { return s.comps[g].mu(i); });
      add(pre + "beta[" + std::to_string(i) + "]",
          [g, i](const SweepDraw& s) { return s.comps[g].beta(i); });
    }
    for (int i = 0; i < d; ++i) {
      for (int j = i; j < d; ++j) {
        add(pre + "sigma[" + std::to_string(i) + "," + std::to_string(j) + "]",
            [g, i, j](const SweepDraw& s) { return s.comps[g].sigma(i, j); });
      }
    }
  }
  return out;
}

FitResult summarize(const PosteriorDraws& draws, double level) {
  FitResult fr;
  fr.labels_map = map_allocation(draws);
  // number of distinct labels in the MAP allocation; equals the modal G
  // whenever the chains agree
  std::vector<int> distinct = fr.labels_map;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  fr.g_hat = static_cast<int>(distinct.size());
  fr.params_hat = estimate_params(draws);
  fr.interval_level = level;
  int used = 0;
  for (const auto& s : draws.sweeps) {
    if (static_cast<int>(s.comps.size()) == fr.g_hat) ++used;
  }
  fr.sweeps_at_modal_g = used;
  if (used >= 40) fr.intervals = credible_intervals(draws, level);
  return fr;
}

}  // namespace dpmnig
