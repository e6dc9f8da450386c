// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <map>
#include <string>
#include <vector>

#include "dpmnig/sampler.hpp"

namespace dpmnig {

// Comma-separated numeric matrix; a non-numeric first line is treated as
// a header and skipped.  Malformed input throws std::runtime_error with
// the offending row and column in the message.
Mat read_csv_matrix(const std::string& path);

// One integer label per line (zero-based).
std::vector<int> read_labels(const std::string& path);

void write_csv_matrix(const std::string& path, const Mat& m);
void write_labels(const std::string& path, const std::vector<int>& labels);

// Columns rescaled to mean 0, sample variance 1.
struct ScaleInfo {
  Vec means;
  Vec sds;
};
ScaleInfo standardize(Mat& data);

// Flat key-value config ("key = value" or "key value" per line, '#'
// comments).  Unknown keys are an error.  The `scale` key is reported
// through scale_out; it is a data-ingestion switch, not a sampler knob.
GibbsConfig parse_config_text(const std::string& text, bool* scale_out = nullptr);
GibbsConfig read_config(const std::string& path, bool* scale_out = nullptr);

// Echo of the effective settings, including defaults.
std::map<std::string, std::string> config_echo(const GibbsConfig& cfg, bool scale);

}  // namespace dpmnig
