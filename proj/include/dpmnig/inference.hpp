// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <map>
#include <string>
#include <vector>

#include "dpmnig/sampler.hpp"

namespace dpmnig {

// One named scalar parameter's credible interval.
struct Interval {
  double lower;
  double upper;
};

struct FitResult {
  std::vector<int> labels_map;
  int g_hat = 0;
  std::vector<CompSnapshot> params_hat;
  std::map<std::string, Interval> intervals;  // keyed like "comp0.mu[1]"
  double interval_level = 0.95;
  int sweeps_at_modal_g = 0;
};

// Modal component id per observation across all retained sweeps; ties go
// to the lowest id.
std::vector<int> map_allocation(const PosteriorDraws& draws);

// Component count appearing most often among retained sweeps (ties to the
// smaller count).
int modal_g(const PosteriorDraws& draws);

// Coordinate-wise posterior means over the sweeps whose component count
// equals the modal one.
std::vector<CompSnapshot> estimate_params(const PosteriorDraws& draws);

// Empirical central credible intervals at `level` for every scalar
// parameter, over the modal-G sweeps.  Requires at least 40 such sweeps.
std::map<std::string, Interval> credible_intervals(const PosteriorDraws& draws,
                                                   double level);

// Percentile with linear interpolation between order statistics
// (exposed for tests).
double percentile(std::vector<double> values, double p);

FitResult summarize(const PosteriorDraws& draws, double level = 0.95);

}  // namespace dpmnig
