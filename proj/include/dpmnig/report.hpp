// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <optional>
#include <string>

#include "dpmnig/eval.hpp"
#include "dpmnig/inference.hpp"
#include "dpmnig/io.hpp"

namespace dpmnig {

struct RunReport {
  std::map<std::string, std::string> config;
  bool converged = false;
  int g_hat = 0;
  int modal_g = 0;
  std::vector<int> labels;
  FitResult fit;
  std::vector<std::pair<int, double>> psrf_trajectory;
  std::vector<SweepRecord> sweep_log;
  ModelGuards guards;
  int sweeps_per_chain = 0;
  int burn_in_used = 0;
  double wall_ms = 0.0;
  std::optional<double> ari;
  std::optional<ContingencyTable> crosstab;
  std::optional<ScaleInfo> scaling;
};

// JSON round trip; serialize(parse(s)) is lossless for every field.
std::string serialize_report(const RunReport& r);
RunReport parse_report(const std::string& text);

}  // namespace dpmnig
