// Command-line front end: runs simulations, sweeps and the verification
// checks, writing CSV or JSON to stdout or to --out.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "epidirect/config.hpp"
#include "epidirect/experiments.hpp"
#include "epidirect/oracle.hpp"
#include "epidirect/verification.hpp"

using nlohmann::json;
using namespace epidirect;

namespace {

struct CommonOptions {
  std::string config_path;
  std::string design;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  bool paper_scale = false;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "JSON experiment config")->check(CLI::ExistingFile);
  cmd->add_option("--design", o.design, "bernoulli, block or cluster");
  cmd->add_option("--set", o.overrides,
                  "override a config field, e.g. --set params.gamma=-1 (repeatable)");
  cmd->add_option("--seed", o.seed, "root seed");
  cmd->add_option("--threads", o.threads, "worker threads");
  cmd->add_flag("--paper-scale", o.paper_scale, "1000 clusters and 500 replicates");
  cmd->add_option("--out", o.out, "output file (default: stdout)");
}

// "a.b.c=value": value is parsed as JSON when possible, else taken as a string.
void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw CLI::ValidationError("--set", "expected key=value, got '" + assignment + "'");
  }
  const std::string value_text = assignment.substr(eq + 1);
  json value = json::parse(value_text, nullptr, false);
  if (value.is_discarded()) value = value_text;

  json* node = &j;
  std::stringstream path(assignment.substr(0, eq));
  std::string key;
  std::vector<std::string> keys;
  while (std::getline(path, key, '.')) keys.push_back(key);
  for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
    json& child = (*node)[keys[i]];
    if (!child.is_object()) child = json::object();
    node = &child;
  }
  (*node)[keys.back()] = std::move(value);
}

ExperimentConfig resolve(const CommonOptions& o) {
  json j;
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    j = json::parse(in);
  } else {
    j = json::object();
  }
  if (!o.design.empty()) j["design"]["kind"] = o.design;
  for (const auto& s : o.overrides) apply_override(j, s);
  ExperimentConfig c = config_from_json(j);
  if (o.paper_scale) c.apply_full_scale();
  if (o.seed) c.seed = *o.seed;
  if (o.threads) c.threads = *o.threads;
  c.validate();
  return c;
}

template <typename Writer>
void emit(const std::string& path, Writer&& write) {
  if (path.empty() || path == "-") {
    write(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write(out);
}

void emit_json(const std::string& path, const json& j) {
  emit(path, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Direct-effect simulations for clustered epidemics"};
  app.require_subcommand(1);

  CommonOptions opts;

  auto* simulate_cmd = app.add_subcommand("simulate", "run one trial and dump per-cluster outcomes");
  add_common(simulate_cmd, opts);
  std::size_t replicate = 0;
  simulate_cmd->add_option("--replicate", replicate, "replicate index");

  auto* sweep_cmd = app.add_subcommand("sweep", "mean direct-effect estimates over a grid (CSV)");
  add_common(sweep_cmd, opts);

  auto* heatmap_cmd = app.add_subcommand("heatmap", "sign-mismatch mask over a (beta, gamma) grid");
  add_common(heatmap_cmd, opts);
  std::string sweep_out;
  heatmap_cmd->add_option("--sweep-out", sweep_out, "also write the underlying sweep CSV");

  auto* coupling_cmd =
      app.add_subcommand("verify-coupling", "marginal validity and pathwise ordering (JSON)");
  add_common(coupling_cmd, opts);
  CouplingSuiteOptions suite;
  coupling_cmd->add_option("--samples", suite.marginal_samples, "samples per side per setting");
  coupling_cmd->add_option("--settings", suite.marginal_settings, "random (gamma, allocation) settings");
  coupling_cmd->add_option("--dominance-samples", suite.dominance_samples,
                           "coupled samples per dominance case");

  auto* props_cmd = app.add_subcommand(
      "verify-propositions", "sign of the mean estimate per design and gamma at beta = 0 (JSON)");
  add_common(props_cmd, opts);

  auto* oracle_cmd =
      app.add_subcommand("oracle-check", "exact sign grid and combinatorial identities (JSON)");
  add_common(oracle_cmd, opts);

  CLI11_PARSE(app, argc, argv);

  try {
    const ExperimentConfig config = resolve(opts);

    if (simulate_cmd->parsed()) {
      const SimulatedTrial trial =
          simulate_trial(config, config.params.beta, config.params.gamma, replicate);
      json j = to_json(trial);
      j["config"] = to_json(config);
      j["replicate"] = replicate;
      emit_json(opts.out, j);
      return 0;
    }
    if (sweep_cmd->parsed()) {
      const SweepResult result = run_sweep(config);
      emit(opts.out, [&](std::ostream& out) { write_sweep_csv(result, out); });
      return 0;
    }
    if (heatmap_cmd->parsed()) {
      ExperimentConfig c = config;
      if (!c.beta_grid) c.beta_grid = GridSpec{};
      if (!c.gamma_grid) c.gamma_grid = GridSpec{};
      const HeatmapResult result = run_heatmap(c);
      emit(opts.out, [&](std::ostream& out) { write_mask_csv(result, out); });
      if (!sweep_out.empty()) {
        emit(sweep_out, [&](std::ostream& out) { write_sweep_csv(result.sweep, out); });
      }
      return 0;
    }
    if (coupling_cmd->parsed()) {
      suite.seed = config.seed;
      suite.threads = config.threads;
      const CouplingSuiteReport report = run_coupling_suite(config.params, suite);
      emit_json(opts.out, to_json(report));
      return report.passes() ? 0 : 1;
    }
    if (props_cmd->parsed()) {
      const PropositionReport report = verify_propositions(config);
      json j = to_json(report);
      j["config"] = to_json(config);
      emit_json(opts.out, j);
      return report.all_pass() ? 0 : 1;
    }
    if (oracle_cmd->parsed()) {
      const OracleSuiteReport report = run_oracle_suite(config.seed);
      emit_json(opts.out, to_json(report));
      return report.passes() ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
