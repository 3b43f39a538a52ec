#include "epidirect/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <string>

namespace epidirect {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const char* where) {
  if (!j.is_object()) throw PreconditionError(std::string(where) + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) throw PreconditionError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

NormalSpec normal_from(const json& j, NormalSpec spec, const char* where) {
  reject_unknown(j, {"mean", "sd"}, where);
  read(j, "mean", spec.mean);
  read(j, "sd", spec.sd);
  return spec;
}

GridSpec grid_from(const json& j, const char* where) {
  reject_unknown(j, {"min", "max", "step"}, where);
  GridSpec g;
  read(j, "min", g.min);
  read(j, "max", g.max);
  read(j, "step", g.step);
  g.validate();
  return g;
}

json grid_json(const GridSpec& g) { return {{"min", g.min}, {"max", g.max}, {"step", g.step}}; }

json number_or_null(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  reject_unknown(j,
                 {"design", "params", "cluster_size", "horizon", "n_clusters", "n_replicates",
                  "sweep", "seed", "coefficient_mode", "threads"},
                 "config");
  ExperimentConfig c;
  if (j.contains("design")) {
    const json& d = j.at("design");
    reject_unknown(d, {"kind", "p"}, "design");
    if (d.contains("kind")) c.design.kind = design_kind_from_string(d.at("kind").get<std::string>());
    read(d, "p", c.design.p);
  }
  if (j.contains("params")) {
    const json& p = j.at("params");
    reject_unknown(p, {"alpha", "beta", "gamma", "eta", "xi"}, "params");
    read(p, "alpha", c.params.alpha);
    read(p, "beta", c.params.beta);
    read(p, "gamma", c.params.gamma);
    if (p.contains("eta")) c.params.eta = normal_from(p.at("eta"), c.params.eta, "params.eta");
    if (p.contains("xi")) c.params.xi = normal_from(p.at("xi"), c.params.xi, "params.xi");
  }
  if (j.contains("cluster_size")) {
    const json& s = j.at("cluster_size");
    reject_unknown(s, {"kind", "n", "shift", "mean"}, "cluster_size");
    const std::string kind = s.value("kind", std::string("shifted_poisson"));
    if (kind == "fixed") {
      c.cluster_size.kind = ClusterSizeSpec::Kind::Fixed;
      read(s, "n", c.cluster_size.fixed);
    } else if (kind == "shifted_poisson") {
      c.cluster_size.kind = ClusterSizeSpec::Kind::ShiftedPoisson;
      read(s, "shift", c.cluster_size.shift);
      read(s, "mean", c.cluster_size.mean);
    } else {
      throw PreconditionError("unknown cluster_size kind '" + kind + "'");
    }
  }
  if (j.contains("horizon")) {
    const json& h = j.at("horizon");
    reject_unknown(h, {"kind", "value", "mean"}, "horizon");
    const std::string kind = h.value("kind", std::string("fixed"));
    if (kind == "fixed") {
      c.horizon.kind = HorizonSpec::Kind::Fixed;
      read(h, "value", c.horizon.value);
    } else if (kind == "exponential") {
      c.horizon.kind = HorizonSpec::Kind::Exponential;
      read(h, "mean", c.horizon.value);
    } else {
      throw PreconditionError("unknown horizon kind '" + kind + "'");
    }
  }
  read(j, "n_clusters", c.n_clusters);
  read(j, "n_replicates", c.n_replicates);
  if (j.contains("sweep")) {
    const json& s = j.at("sweep");
    reject_unknown(s, {"gamma", "beta"}, "sweep");
    if (s.contains("gamma")) c.gamma_grid = grid_from(s.at("gamma"), "sweep.gamma");
    if (s.contains("beta")) c.beta_grid = grid_from(s.at("beta"), "sweep.beta");
  }
  read(j, "seed", c.seed);
  if (j.contains("coefficient_mode")) {
    const auto mode = j.at("coefficient_mode").get<std::string>();
    if (mode == "redraw_per_replicate") {
      c.coefficient_mode = CoefficientMode::RedrawPerReplicate;
    } else if (mode == "fixed_across_replicates") {
      c.coefficient_mode = CoefficientMode::FixedAcrossReplicates;
    } else {
      throw PreconditionError("unknown coefficient_mode '" + mode + "'");
    }
  }
  read(j, "threads", c.threads);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw PreconditionError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["design"] = {{"kind", std::string(to_string(c.design.kind))}, {"p", c.design.p}};
  j["params"] = {{"alpha", c.params.alpha},
                 {"beta", c.params.beta},
                 {"gamma", c.params.gamma},
                 {"eta", {{"mean", c.params.eta.mean}, {"sd", c.params.eta.sd}}},
                 {"xi", {{"mean", c.params.xi.mean}, {"sd", c.params.xi.sd}}}};
  if (c.cluster_size.kind == ClusterSizeSpec::Kind::Fixed) {
    j["cluster_size"] = {{"kind", "fixed"}, {"n", c.cluster_size.fixed}};
  } else {
    j["cluster_size"] = {
        {"kind", "shifted_poisson"}, {"shift", c.cluster_size.shift}, {"mean", c.cluster_size.mean}};
  }
  if (c.horizon.kind == HorizonSpec::Kind::Fixed) {
    j["horizon"] = {{"kind", "fixed"}, {"value", c.horizon.value}};
  } else {
    j["horizon"] = {{"kind", "exponential"}, {"mean", c.horizon.value}};
  }
  j["n_clusters"] = c.n_clusters;
  j["n_replicates"] = c.n_replicates;
  json sweep = json::object();
  if (c.gamma_grid) sweep["gamma"] = grid_json(*c.gamma_grid);
  if (c.beta_grid) sweep["beta"] = grid_json(*c.beta_grid);
  if (!sweep.empty()) j["sweep"] = sweep;
  j["seed"] = c.seed;
  j["coefficient_mode"] = c.coefficient_mode == CoefficientMode::RedrawPerReplicate
                              ? "redraw_per_replicate"
                              : "fixed_across_replicates";
  j["threads"] = c.threads;
  return j;
}

json to_json(const ReplicateSummary& s) {
  return {{"de_mean", number_or_null(s.de_mean)}, {"de_sd", number_or_null(s.de_sd)},
          {"ci_low", number_or_null(s.ci_low)},   {"ci_high", number_or_null(s.ci_high)},
          {"n_reps", s.n_reps},                   {"n_degenerate", s.n_degenerate}};
}

json to_json(const PropositionReport& report) {
  json checks = json::array();
  for (const auto& c : report.checks) {
    checks.push_back({{"design", std::string(to_string(c.design))},
                      {"gamma", c.gamma},
                      {"expected_sign", c.expected_sign},
                      {"estimate", to_json(c.summary)},
                      {"verdict", to_string(c.verdict)}});
  }
  return {{"checks", checks},
          {"insufficient_replication", report.insufficient_replication},
          {"all_pass", report.all_pass()}};
}

json to_json(const MarginalValidityReport& report) {
  auto arm = [](const ArmValidity& a) {
    return json{{"coupled_histogram", a.coupled_histogram},
                {"independent_histogram", a.independent_histogram},
                {"chi_square", a.test.statistic},
                {"dof", a.test.dof},
                {"p_value", a.test.p_value}};
  };
  return {{"n_samples", report.n_samples},
          {"identical_arm_samples", report.identical_arm_samples},
          {"treated", arm(report.treated)},
          {"control", arm(report.control)}};
}

json to_json(const DominanceReport& r) {
  return {{"n_samples", r.n_samples},
          {"violations", r.violations},
          {"strict_events", r.strict_events},
          {"strict_violations", r.strict_violations},
          {"nonidentical", r.nonidentical},
          {"mean_gap", r.mean_gap},
          {"max_abs_gap", r.max_abs_gap},
          {"pass", r.passes()}};
}

json to_json(const CouplingSuiteReport& report) {
  json marginal = json::array();
  for (const auto& m : report.marginal) {
    json entry = to_json(m.report);
    entry["gamma"] = m.gamma;
    entry["x1"] = m.x1;
    entry["x0"] = m.x0;
    entry["pass"] = m.report.passes(report.alpha_level);
    marginal.push_back(std::move(entry));
  }
  json dominance = json::array();
  for (const auto& d : report.dominance) {
    json entry = to_json(d.report);
    entry["contrast"] =
        d.spec.contrast == Contrast::ClusterAllVsNone ? "cluster_all_vs_none" : "block_swap_pair";
    entry["gamma"] = d.gamma;
    dominance.push_back(std::move(entry));
  }
  return {{"alpha_level", report.alpha_level},
          {"marginal", marginal},
          {"dominance", dominance},
          {"marginal_pass", report.marginal_passes()},
          {"dominance_pass", report.dominance_passes()},
          {"pass", report.passes()}};
}

json to_json(const OracleSuiteReport& report) {
  json signs = json::array();
  for (const auto& c : report.signs) {
    signs.push_back({{"design", std::string(to_string(c.design))},
                     {"n", c.n},
                     {"gamma", c.gamma},
                     {"expected_sign", c.expected_sign},
                     {"min_de", c.min_de},
                     {"max_de", c.max_de},
                     {"ok", c.ok}});
  }
  json decompositions = json::array();
  for (const auto& d : report.decompositions) {
    decompositions.push_back({{"n", d.n},
                              {"m", d.m},
                              {"max_residual", d.max_residual},
                              {"max_partner_residual", d.max_partner_residual}});
  }
  return {{"signs", signs},
          {"binomial_pairs", report.binomial_pairs},
          {"binomial_failures", report.binomial_failures},
          {"decompositions", decompositions},
          {"signs_pass", report.signs_pass()},
          {"identities_pass", report.identities_pass()},
          {"pass", report.passes()}};
}

json to_json(const SimulatedTrial& trial) {
  json clusters = json::array();
  for (std::size_t i = 0; i < trial.clusters.size(); ++i) {
    const Cluster& c = trial.clusters[i];
    const EpidemicOutcome& o = trial.outcomes[i];
    json times = json::array();
    for (double t : o.infection_time) times.push_back(std::isfinite(t) ? json(t) : json(nullptr));
    clusters.push_back({{"horizon", c.horizon},
                        {"treatment", c.treatment},
                        {"eta", c.eta},
                        {"xi", c.xi},
                        {"infection_time", times},
                        {"infected_by_horizon", o.infected_by_horizon},
                        {"order", o.order}});
  }
  return {{"clusters", clusters},
          {"de_hat", number_or_null(trial.result.de_hat)},
          {"degenerate", trial.result.degenerate},
          {"n_clusters_used", trial.result.n_clusters_used}};
}

}  // namespace epidirect
