// Apache License, Version 2.0, refer to LICENSE.txt

#include "dpmnig/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace dpmnig {

namespace {

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_double(const std::string& s, double& out) {
  const char* b = s.data();
  const char* e = s.data() + s.size();
  while (b < e && (*b == ' ' || *b == '\t' || *b == '\r')) ++b;
  while (e > b && (e[-1] == ' ' || e[-1] == '\t' || e[-1] == '\r')) --e;
  if (b == e) return false;
  const auto res = std::from_chars(b, e, out);
  return res.ec == std::errc() && res.ptr == e;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

Mat read_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0, width = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split_commas(line);
    std::vector<double> row(cells.size());
    bool ok = true;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (!parse_double(cells[c], row[c])) {
        if (first_content) {  // header row
          ok = false;
          break;
        }
        throw std::runtime_error(path + ": non-numeric cell at row " +
                                 std::to_string(lineno) + ", column " +
                                 std::to_string(c + 1));
      }
    }
    if (!ok) {
      first_content = false;
      continue;
    }
    if (first_content) {
      width = row.size();
      first_content = false;
    } else if (row.size() != width && width != 0) {
      throw std::runtime_error(path + ": row " + std::to_string(lineno) + " has " +
                               std::to_string(row.size()) + " cells, expected " +
                               std::to_string(width));
    }
    if (width == 0) width = row.size();
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error(path + ": no data rows");
  Mat m(rows.size(), width);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < width; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return m;
}

std::vector<int> read_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<int> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    double v;
    if (!parse_double(t, v) || v != std::floor(v)) {
      if (lineno == 1) continue;  // header
      throw std::runtime_error(path + ": non-integer label at line " +
                               std::to_string(lineno));
    }
    out.push_back(static_cast<int>(v));
  }
  if (out.empty()) throw std::runtime_error(path + ": no labels");
  return out;
}

void write_csv_matrix(const std::string& path, const Mat& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.precision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << m(i, j);
    }
    out << '\n';
  }
}

void write_labels(const std::string& path, const std::vector<int>& labels) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (int v : labels) out << v << '\n';
}

ScaleInfo standardize(Mat& data) {
  const auto n = data.rows();
  ScaleInfo info;
  info.means = data.colwise().mean().transpose();
  data.rowwise() -= info.means.transpose();
  info.sds = (data.array().square().colwise().sum() / static_cast<double>(n - 1))
                 .sqrt()
                 .transpose();
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    if (info.sds(j) > 0.0) data.col(j) /= info.sds(j);
  }
  return info;
}

GibbsConfig parse_config_text(const std::string& text, bool* scale_out) {
  GibbsConfig cfg;
  std::stringstream ss(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    std::string key, value;
    const auto eq = line.find('=');
    if (eq != std::string::npos) {
      key = trim(line.substr(0, eq));
      value = trim(line.substr(eq + 1));
    } else {
      const auto sp = line.find_first_of(" \t");
      if (sp == std::string::npos) {
        throw std::runtime_error("config line " + std::to_string(lineno) +
                                 ": expected 'key = value'");
      }
      key = trim(line.substr(0, sp));
      value = trim(line.substr(sp + 1));
    }

    const auto to_d = [&](const std::string& v) {
      double x;
      if (!parse_double(v, x)) {
        throw std::runtime_error("config line " + std::to_string(lineno) +
                                 ": bad numeric value '" + v + "'");
      }
      return x;
    };
    const auto to_bool = [&](const std::string& v) {
      if (v == "true" || v == "1" || v == "yes") return true;
      if (v == "false" || v == "0" || v == "no") return false;
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               ": bad boolean value '" + v + "'");
    };

    if (key == "alpha") cfg.alpha = to_d(value);
    else if (key == "mc_new_cluster") cfg.mc_new_cluster = static_cast<int>(to_d(value));
    else if (key == "psrf_threshold") cfg.psrf_threshold = to_d(value);
    else if (key == "post_samples") cfg.post_samples = static_cast<int>(to_d(value));
    else if (key == "burn_in_min") cfg.burn_in_min = static_cast<int>(to_d(value));
    else if (key == "max_iter") cfg.max_iter = static_cast<int>(to_d(value));
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(to_d(value));
    else if (key == "rate_floor") cfg.rate_floor = to_d(value);
    else if (key == "sample_u") cfg.sample_u = to_bool(value);
    else if (key == "scale") {
      const bool s = to_bool(value);
      if (scale_out) *scale_out = s;
    }
    else if (key == "sweep_order") {
      if (value == "storage") cfg.sweep_order = SweepOrder::storage;
      else if (value == "random") cfg.sweep_order = SweepOrder::random;
      else throw std::runtime_error("config line " + std::to_string(lineno) +
                                    ": sweep_order must be storage or random");
    }
    else if (key == "prior_weight") cfg.prior_weight = to_d(value);
    else if (key == "gamma_prior_weight") cfg.gamma_prior_weight = to_d(value);
    else if (key == "proposal_spread") cfg.proposal_spread = to_d(value);
    else if (key == "proposal_anneal_sweeps") cfg.proposal_anneal_sweeps = static_cast<int>(to_d(value));
    else if (key == "resampled_base") cfg.resampled_base = to_bool(value);
    else if (key == "threads") cfg.threads = static_cast<int>(to_d(value));
    else {
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               ": unknown key '" + key + "'");
    }
  }
  if (!(cfg.alpha > 0.0)) throw std::runtime_error("config: alpha must be positive");
  if (cfg.post_samples < 1) throw std::runtime_error("config: post_samples must be >= 1");
  if (!(cfg.psrf_threshold > 1.0)) throw std::runtime_error("config: psrf_threshold must exceed 1");
  if (cfg.mc_new_cluster < 1) throw std::runtime_error("config: mc_new_cluster must be >= 1");
  if (cfg.max_iter < 1) throw std::runtime_error("config: max_iter must be >= 1");
  return cfg;
}

GibbsConfig read_config(const std::string& path, bool* scale_out) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), scale_out);
}

std::map<std::string, std::string> config_echo(const GibbsConfig& cfg, bool scale) {
  const auto fmt = [](double v) {
    std::ostringstream o;
    o.precision(17);
    o << v;
    return o.str();
  };
  std::map<std::string, std::string> m;
  m["alpha"] = fmt(cfg.alpha);
  m["mc_new_cluster"] = std::to_string(cfg.mc_new_cluster);
  m["psrf_threshold"] = fmt(cfg.psrf_threshold);
  m["post_samples"] = std::to_string(cfg.post_samples);
  m["burn_in_min"] = std::to_string(cfg.burn_in_min);
  m["max_iter"] = std::to_string(cfg.max_iter);
  m["seed"] = std::to_string(cfg.seed);
  m["rate_floor"] = fmt(cfg.rate_floor);
  m["sample_u"] = cfg.sample_u ? "true" : "false";
  m["scale"] = scale ? "true" : "false";
  m["sweep_order"] = cfg.sweep_order == SweepOrder::storage ? "storage" : "random";
  m["prior_weight"] = fmt(cfg.prior_weight);
  m["gamma_prior_weight"] = fmt(cfg.gamma_prior_weight);
  m["proposal_spread"] = fmt(cfg.proposal_spread);
  m["proposal_anneal_sweeps"] = std::to_string(cfg.proposal_anneal_sweeps);
  m["resampled_base"] = cfg.resampled_base ? "true" : "false";
  m["threads"] = std::to_string(cfg.threads);
  return m;
}

}  // namespace dpmnig
