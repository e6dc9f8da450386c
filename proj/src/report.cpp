// Apache License, Version 2.0, refer to LICENSE.txt

#include "dpmnig/report.hpp"

#include <json.hpp>

namespace dpmnig {

using nlohmann::json;

namespace {

json vec_to_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Vec vec_from_json(const json& a) {
  Vec v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
  return v;
}

json mat_to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

Mat mat_from_json(const json& rows) {
  const auto r = rows.size();
  const auto c = r == 0 ? 0 : rows[0].size();
  Mat m(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j].get<double>();
    }
  }
  return m;
}

json guards_to_json(const ModelGuards& g) {
  return json{{"rate_floor_events", g.rate_floor_events},
              {"df_floor_events", g.df_floor_events},
              {"jitter_events", g.jitter_events},
              {"pd_truncation_events", g.pd_truncation_events}};
}

ModelGuards guards_from_json(const json& j) {
  ModelGuards g;
  g.rate_floor_events = j.at("rate_floor_events").get<long>();
  g.df_floor_events = j.at("df_floor_events").get<long>();
  g.jitter_events = j.at("jitter_events").get<long>();
  g.pd_truncation_events = j.at("pd_truncation_events").get<long>();
  return g;
}

}  // namespace

std::string serialize_report(const RunReport& r) {
  json j;
  j["config"] = r.config;
  j["converged"] = r.converged;
  j["g_hat"] = r.g_hat;
  j["modal_g"] = r.modal_g;
  j["labels"] = r.labels;
  j["sweeps_per_chain"] = r.sweeps_per_chain;
  j["burn_in_used"] = r.burn_in_used;
  j["wall_ms"] = r.wall_ms;
  j["guards"] = guards_to_json(r.guards);

  json comps = json::array();
  for (const auto& c : r.fit.params_hat) {
    comps.push_back(json{{"gamma", c.gamma},
                         {"mu", vec_to_json(c.mu)},
                         {"beta", vec_to_json(c.beta)},
                         {"sigma", mat_to_json(c.sigma)}});
  }
  j["estimates"] = std::move(comps);
  j["interval_level"] = r.fit.interval_level;
  j["sweeps_at_modal_g"] = r.fit.sweeps_at_modal_g;
  json iv = json::object();
  for (const auto& [k, v] : r.fit.intervals) iv[k] = json::array({v.lower, v.upper});
  j["intervals"] = std::move(iv);

  json traj = json::array();
  for (const auto& [it, v] : r.psrf_trajectory) traj.push_back(json::array({it, v}));
  j["psrf_trajectory"] = std::move(traj);

  json sweeps = json::array();
  for (const auto& s : r.sweep_log) {
    sweeps.push_back(json{{"chain", s.chain},
                          {"iteration", s.iteration},
                          {"g", s.g},
                          {"loglik", s.loglik},
                          {"guards", guards_to_json(s.guards)}});
  }
  j["sweep_log"] = std::move(sweeps);

  if (r.ari) j["ari"] = *r.ari;
  if (r.crosstab) {
    j["crosstab"] = json{{"rows", r.crosstab->row_labels},
                         {"cols", r.crosstab->col_labels},
                         {"counts", r.crosstab->counts}};
  }
  if (r.scaling) {
    j["scaling"] = json{{"means", vec_to_json(r.scaling->means)},
                        {"sds", vec_to_json(r.scaling->sds)}};
  }
  return j.dump(2);
}

RunReport parse_report(const std::string& text) {
  const json j = json::parse(text);
  RunReport r;
  r.config = j.at("config").get<std::map<std::string, std::string>>();
  r.converged = j.at("converged").get<bool>();
  r.g_hat = j.at("g_hat").get<int>();
  r.modal_g = j.at("modal_g").get<int>();
  r.labels = j.at("labels").get<std::vector<int>>();
  r.sweeps_per_chain = j.at("sweeps_per_chain").get<int>();
  r.burn_in_used = j.at("burn_in_used").get<int>();
  r.wall_ms = j.at("wall_ms").get<double>();
  r.guards = guards_from_json(j.at("guards"));

  for (const auto& c : j.at("estimates")) {
    CompSnapshot s;
    s.gamma = c.at("gamma").get<double>();
    s.mu = vec_from_json(c.at("mu"));
    s.beta = vec_from_json(c.at("beta"));
    s.sigma = mat_from_json(c.at("sigma"));
    r.fit.params_hat.push_back(std::move(s));
  }
  r.fit.interval_level = j.at("interval_level").get<double>();
  r.fit.sweeps_at_modal_g = j.at("sweeps_at_modal_g").get<int>();
  for (const auto& [k, v] : j.at("intervals").items()) {
    r.fit.intervals[k] = {v[0].get<double>(), v[1].get<double>()};
  }
  r.fit.labels_map = r.labels;
  r.fit.g_hat = r.g_hat;

  for (const auto& t : j.at("psrf_trajectory")) {
    r.psrf_trajectory.emplace_back(t[0].get<int>(), t[1].get<double>());
  }
  for (const auto& s : j.at("sweep_log")) {
    r.sweep_log.push_back({s.at("chain").get<int>(), s.at("iteration").get<int>(),
                           s.at("g").get<int>(), s.at("loglik").get<double>(),
                           guards_from_json(s.at("guards"))});
  }
  if (j.contains("ari")) r.ari = j.at("ari").get<double>();
  if (j.contains("crosstab")) {
    ContingencyTable t;
    t.row_labels = j.at("crosstab").at("rows").get<std::vector<int>>();
    t.col_labels = j.at("crosstab").at("cols").get<std::vector<int>>();
    t.counts = j.at("crosstab").at("counts").get<std::vector<std::vector<long>>>();
    r.crosstab = std::move(t);
  }
  if (j.contains("scaling")) {
    ScaleInfo s;
    s.means = vec_from_json(j.at("scaling").at("means"));
    s.sds = vec_from_json(j.at("scaling").at("sds"));
    r.scaling = std::move(s);
  }
  return r;
}

}  // namespace dpmnig
