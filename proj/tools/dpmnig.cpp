// Apache License, Version 2.0, refer to LICENSE.txt

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "dpmnig/datagen.hpp"
#include "dpmnig/report.hpp"

namespace fs = std::filesystem;
using namespace dpmnig;

namespace {

MixtureSpec load_custom_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open spec file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("spec file " + path + ": not valid JSON: " + e.what());
  }
  if (!j.contains("components") || !j["components"].is_array() || j["components"].empty()) {
    throw std::runtime_error("spec file " + path +
                             ": expected a non-empty 'components' array");
  }
  MixtureSpec spec;
  int idx = 0;
  for (const auto& c : j["components"]) {
    for (const char* field : {"gamma", "mu", "beta", "sigma", "size"}) {
      if (!c.contains(field)) {
        throw std::runtime_error("spec file " + path + ": component " +
                                 std::to_string(idx) + " is missing '" + field + "'");
      }
    }
    const auto mu = c["mu"].get<std::vector<double>>();
    const auto beta = c["beta"].get<std::vector<double>>();
    const auto sig = c["sigma"].get<std::vector<std::vector<double>>>();
    const int d = static_cast<int>(mu.size());
    if (static_cast<int>(beta.size()) != d || static_cast<int>(sig.size()) != d) {
      throw std::runtime_error("spec file " + path + ": component " +
                               std::to_string(idx) + " has inconsistent dimensions");
    }
    Vec m(d), b(d);
    Mat s(d, d);
    for (int i = 0; i < d; ++i) {
      m(i) = mu[i];
      b(i) = beta[i];
      if (static_cast<int>(sig[i].size()) != d) {
        throw std::runtime_error("spec file " + path + ": component " +
                                 std::to_string(idx) + " sigma is not square");
      }
      for (int jj = 0; jj < d; ++jj) s(i, jj) = sig[i][jj];
    }
    spec.components.push_back(
        {make_component_params(m, b, c["gamma"].get<double>(), s),
         c["size"].get<int>()});
    ++idx;
  }
  return spec;
}

void print_crosstab(std::ostream& os, const ContingencyTable& t) {
  os << "cross-tabulation (rows: truth, cols: predicted)\n      ";
  for (int c : t.col_labels) os << '\t' << c;
  os << '\n';
  for (std::size_t i = 0; i < t.counts.size(); ++i) {
    os << t.row_labels[i];
    for (long v : t.counts[i]) os << '\t' << v;
    os << '\n';
  }
}

int cmd_fit(const std::string& data_path, const std::string& config_path,
            const std::string& out_dir, const std::string& truth_path,
            bool scale_flag) {
  Mat data;
  GibbsConfig cfg;
  bool scale = scale_flag;
  std::vector<int> truth;
  try {
    data = read_csv_matrix(data_path);
    if (!config_path.empty()) cfg = read_config(config_path, &scale);
    if (scale_flag) scale = true;  // the flag wins over the config key
    if (!truth_path.empty()) {
      truth = read_labels(truth_path);
      if (truth.size() != static_cast<std::size_t>(data.rows())) {
        std::cerr << "error: truth has " << truth.size() << " labels for "
                  << data.rows() << " data rows\n";
        return 1;
      }
    }
    if (const char* env = std::getenv("DPMNIG_SEED")) {
      cfg.seed = std::strtoull(env, nullptr, 10);
    }
    fs::create_directories(out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }

  RunReport rep;
  std::optional<ScaleInfo> scaling;
  if (scale) {
    scaling = standardize(data);
  }
  rep.config = config_echo(cfg, scale);

  const auto on_sweep = [](const SweepRecord& r) {
    std::cerr << "sweep chain=" << r.chain << " iter=" << r.iteration
              << " G=" << r.g << " loglik=" << r.loglik
              << " rate_floors=" << r.guards.rate_floor_events
              << " df_floors=" << r.guards.df_floor_events
              << " jitters=" << r.guards.jitter_events
              << " pd_truncations=" << r.guards.pd_truncation_events << '\n';
  };

  auto [draws, diag] = run(data, cfg, on_sweep);
  rep.fit = summarize(draws);
  rep.converged = diag.converged;
  rep.g_hat = rep.fit.g_hat;
  rep.modal_g = modal_g(draws);
  rep.labels = rep.fit.labels_map;
  rep.psrf_trajectory = diag.psrf_trajectory;
  rep.sweep_log = diag.sweep_log;
  rep.guards = diag.guards;
  rep.sweeps_per_chain = diag.sweeps_per_chain;
  rep.burn_in_used = diag.burn_in_used;
  rep.wall_ms = diag.wall_ms;
  rep.scaling = scaling;
  if (!truth.empty()) {
    rep.ari = adjusted_rand_index(rep.labels, truth);
    rep.crosstab = cross_tab(truth, rep.labels);
  }

  const fs::path out(out_dir);
  std::ofstream rf(out / "report.json");
  rf << serialize_report(rep) << '\n';
  write_labels((out / "labels.csv").string(), rep.labels);

  std::cout << "g_hat " << rep.g_hat << '\n';
  std::cout << "converged " << (rep.converged ? "true" : "false") << '\n';
  if (rep.ari) std::cout << "ari " << *rep.ari << '\n';
  return rep.converged ? 0 : 2;
}

int cmd_simulate(const std::string& spec_name, std::uint64_t seed,
                 const std::string& out_dir) {
  try {
    MixtureSpec spec;
    if (spec_name == "sim1") spec = sim1_spec();
    else if (spec_name == "sim2") spec = sim2_spec();
    else spec = load_custom_spec(spec_name);

    const auto [data, truth] = generate(spec, seed);
    fs::create_directories(out_dir);
    const fs::path out(out_dir);
    write_csv_matrix((out / "data.csv").string(), data);
    write_labels((out / "labels.csv").string(), truth);
    std::cout << "wrote " << data.rows() << " rows, " << data.cols()
              << " columns to " << out_dir << '\n';
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

int cmd_evaluate(const std::string& pred_path, const std::string& truth_path) {
  try {
    const auto pred = read_labels(pred_path);
    const auto truth = read_labels(truth_path);
    if (pred.size() != truth.size()) {
      std::cerr << "error: " << pred.size() << " predicted labels vs "
                << truth.size() << " true labels\n";
      return 1;
    }
    std::cout << "ari " << adjusted_rand_index(pred, truth) << '\n';
    print_crosstab(std::cout, cross_tab(truth, pred));
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dirichlet process mixture of multivariate normal-inverse "
               "Gaussian distributions"};
  app.require_subcommand(1);

  auto* fit = app.add_subcommand("fit", "fit the model to a CSV data set");
  std::string data_path, config_path, out_dir = "out", truth_path;
  bool scale = false;
  fit->add_option("--data", data_path, "data CSV")->required();
  fit->add_option("--config", config_path, "flat key-value config file");
  fit->add_option("--out", out_dir, "output directory");
  fit->add_option("--truth", truth_path, "true labels CSV for evaluation");
  fit->add_flag("--scale", scale, "standardize columns to mean 0, variance 1");

  auto* sim = app.add_subcommand("simulate", "generate a benchmark data set");
  std::string spec_name;
  std::uint64_t seed = 1;
  std::string sim_out = "out";
  sim->add_option("--spec", spec_name, "sim1, sim2 or a JSON spec file")->required();
  sim->add_option("--seed", seed, "generator seed");
  sim->add_option("--out", sim_out, "output directory");

  auto* ev = app.add_subcommand("evaluate", "adjusted Rand index and cross-tab");
  std::string pred_path, ev_truth_path;
  ev->add_option("--pred", pred_path, "predicted labels CSV")->required();
  ev->add_option("--truth", ev_truth_path, "true labels CSV")->required();

  CLI11_PARSE(app, argc, argv);

  if (fit->parsed()) return cmd_fit(data_path, config_path, out_dir, truth_path, scale);
  if (sim->parsed()) return cmd_simulate(spec_name, seed, sim_out);
  return cmd_evaluate(pred_path, ev_truth_path);
}
