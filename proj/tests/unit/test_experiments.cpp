#include <doctest.h>

#include <cmath>
#include <sstream>

#include "epidirect/config.hpp"
#include "epidirect/experiments.hpp"

using namespace epidirect;

namespace {

ExperimentConfig small_config(DesignKind kind) {
  ExperimentConfig c = ExperimentConfig::desk_defaults(kind);
  c.n_clusters = 40;
  c.n_replicates = 12;
  c.params.gamma = -1.0;
  return c;
}

std::string sweep_csv(const ExperimentConfig& c) {
  std::ostringstream out;
  write_sweep_csv(run_sweep(c), out);
  return out.str();
}

}  // namespace

TEST_CASE("grid points") {
  const auto pts = GridSpec{-2.0, 2.0, 0.1}.points();
  REQUIRE(pts.size() == 41);
  CHECK(pts.front() == -2.0);
  CHECK(pts.back() == 2.0);
  CHECK(pts[20] == 0.0);
  CHECK(GridSpec{0.5, 0.5, 0.1}.points() == std::vector<double>{0.5});
  CHECK_THROWS_AS(GridSpec({1.0, 0.0, 0.1}).validate(), PreconditionError);
  CHECK_THROWS_AS(GridSpec({0.0, 1.0, 0.0}).validate(), PreconditionError);
}

TEST_CASE("pairwise sum and summary") {
  std::vector<double> v(1000);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.001 * static_cast<double>(i);
  CHECK(pairwise_sum(v) == doctest::Approx(499.5).epsilon(1e-12));
  CHECK(pairwise_sum({}) == 0.0);

  std::vector<TrialResult> reps;
  for (double d : {0.1, 0.3, 0.2}) reps.push_back({d, 10, false});
  reps.push_back(TrialResult::undefined(10));
  const ReplicateSummary s = summarize(reps);
  CHECK(s.n_reps == 4);
  CHECK(s.n_degenerate == 1);
  CHECK(s.effective() == 3);
  CHECK(s.de_mean == doctest::Approx(0.2));
  CHECK(s.de_sd == doctest::Approx(0.1));
  const double half = 1.959963984540054 * 0.1 / std::sqrt(3.0);
  CHECK(s.ci_low == doctest::Approx(0.2 - half));
  CHECK(s.ci_high == doctest::Approx(0.2 + half));

  const ReplicateSummary single = summarize({TrialResult{0.4, 5, false}});
  CHECK(std::isnan(single.de_sd));
  CHECK(std::isnan(single.ci_low));
}

TEST_CASE("desk defaults and paper scale") {
  ExperimentConfig c = ExperimentConfig::desk_defaults(DesignKind::Block);
  CHECK(c.n_clusters == 500);
  CHECK(c.n_replicates == 200);
  CHECK(c.params.alpha == 0.01);
  CHECK(c.params.eta.sd == 0.1);
  CHECK(c.horizon.value == 10.0);
  CHECK(c.design.p == 0.5);
  c.apply_full_scale();
  CHECK(c.n_clusters == 1000);
  CHECK(c.n_replicates == 500);
}

TEST_CASE("population draws respect the size and horizon specs") {
  ExperimentConfig c = small_config(DesignKind::Bernoulli);
  RandomStream rng(9);
  const auto pop = draw_population(c, rng);
  CHECK(pop.size() == 40);
  for (const Cluster& cl : pop) {
    CHECK(cl.size() >= 2);
    CHECK(cl.horizon == 10.0);
  }
  c.cluster_size.kind = ClusterSizeSpec::Kind::Fixed;
  c.cluster_size.fixed = 3;
  c.horizon.kind = HorizonSpec::Kind::Exponential;
  for (const Cluster& cl : draw_population(c, rng)) {
    CHECK(cl.size() == 3);
    CHECK(cl.horizon > 0.0);
  }
}

TEST_CASE("replicates are deterministic and share streams across grid points") {
  const ExperimentConfig c = small_config(DesignKind::Block);
  const TrialResult a = run_replicate(c, 0.0, -1.0, 3);
  const TrialResult b = run_replicate(c, 0.0, -1.0, 3);
  CHECK(a.de_hat == b.de_hat);
  const TrialResult other = run_replicate(c, 0.0, -1.0, 4);
  CHECK(other.de_hat != a.de_hat);

  // The replicate's population does not depend on the grid point.
  const SimulatedTrial low = simulate_trial(c, 0.0, -2.0, 3);
  const SimulatedTrial high = simulate_trial(c, 0.5, 2.0, 3);
  REQUIRE(low.clusters.size() == high.clusters.size());
  for (std::size_t i = 0; i < low.clusters.size(); ++i) {
    CHECK(low.clusters[i].eta == high.clusters[i].eta);
    CHECK(low.clusters[i].xi == high.clusters[i].xi);
  }
  CHECK(low.clusters.front().treatment == high.clusters.front().treatment);
  CHECK(low.result.de_hat == run_replicate(c, 0.0, -2.0, 3).de_hat);

  ExperimentConfig fixed = c;
  fixed.coefficient_mode = CoefficientMode::FixedAcrossReplicates;
  CHECK(simulate_trial(fixed, 0.0, 0.0, 1).clusters.front().eta ==
        simulate_trial(fixed, 0.0, 0.0, 2).clusters.front().eta);
  CHECK(simulate_trial(c, 0.0, 0.0, 1).clusters.front().eta !=
        simulate_trial(c, 0.0, 0.0, 2).clusters.front().eta);
}

TEST_CASE("sweep output is identical for any thread count") {
  ExperimentConfig c = small_config(DesignKind::Cluster);
  c.gamma_grid = GridSpec{-1.0, 1.0, 1.0};
  c.threads = 1;
  const std::string one = sweep_csv(c);
  c.threads = 4;
  CHECK(sweep_csv(c) == one);
}

TEST_CASE("sweep csv layout") {
  ExperimentConfig c = small_config(DesignKind::Bernoulli);
  c.gamma_grid = GridSpec{0.0, 0.5, 0.5};
  const std::string csv = sweep_csv(c);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == kSweepCsvHeader);
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    CHECK(line.rfind("bernoulli,0,", 0) == 0);
    CHECK(std::count(line.begin(), line.end(), ',') == 8);
  }
  CHECK(rows == 2);
}

TEST_CASE("heatmap mask") {
  ExperimentConfig c = small_config(DesignKind::Block);
  c.n_replicates = 4;
  CHECK_THROWS_AS(run_heatmap(c), PreconditionError);
  c.beta_grid = GridSpec{-1.0, 1.0, 2.0};
  c.gamma_grid = GridSpec{0.0, 0.0, 1.0};
  const HeatmapResult h = run_heatmap(c);
  CHECK(h.mask.size() == 2);
  for (const MaskCell& cell : h.mask) {
    if (!cell.decisive) CHECK_FALSE(cell.mismatch);
  }
  std::ostringstream out;
  write_mask_csv(h, out);
  CHECK(out.str().rfind(std::string(kMaskCsvHeader) + "\n", 0) == 0);
}

TEST_CASE("proposition verdicts") {
  CHECK(expected_null_sign(DesignKind::Bernoulli, -2.0) == 0);
  CHECK(expected_null_sign(DesignKind::Block, -2.0) == 1);
  CHECK(expected_null_sign(DesignKind::Block, 2.0) == -1);
  CHECK(expected_null_sign(DesignKind::Cluster, -2.0) == -1);
  CHECK(expected_null_sign(DesignKind::Cluster, 0.0) == 0);

  ExperimentConfig c = small_config(DesignKind::Bernoulli);
  c.n_replicates = 1;
  const PropositionReport thin = verify_propositions(c);
  CHECK(thin.insufficient_replication);
  CHECK(thin.checks.size() == 15);
  CHECK_FALSE(thin.all_pass());
  for (const auto& check : thin.checks) CHECK(check.verdict == Verdict::Insufficient);
  CHECK(to_string(Verdict::Insufficient) == "insufficient");
}

TEST_CASE("config json") {
  const auto j = nlohmann::json::parse(R"({
    "design": {"kind": "block", "p": 0.5},
    "params": {"alpha": 0.02, "gamma": -1.5, "eta": {"sd": 0.2}},
    "cluster_size": {"kind": "fixed", "n": 5},
    "horizon": {"kind": "exponential", "value": 8},
    "n_clusters": 100,
    "n_replicates": 20,
    "sweep": {"gamma": {"min": -1, "max": 1, "step": 0.5}},
    "seed": 7,
    "coefficient_mode": "fixed_across_replicates",
    "threads": 2
  })");
  const ExperimentConfig c = config_from_json(j);
  CHECK(c.design.kind == DesignKind::Block);
  CHECK(c.params.alpha == 0.02);
  CHECK(c.params.gamma == -1.5);
  CHECK(c.params.eta.sd == 0.2);
  CHECK(c.params.eta.mean == 0.0);
  CHECK(c.cluster_size.kind == ClusterSizeSpec::Kind::Fixed);
  CHECK(c.cluster_size.fixed == 5);
  CHECK(c.horizon.kind == HorizonSpec::Kind::Exponential);
  CHECK(c.n_clusters == 100);
  REQUIRE(c.gamma_grid.has_value());
  CHECK(c.gamma_grid->points().size() == 5);
  CHECK_FALSE(c.beta_grid.has_value());
  CHECK(c.seed == 7);
  CHECK(c.coefficient_mode == CoefficientMode::FixedAcrossReplicates);

  const ExperimentConfig round = config_from_json(to_json(c));
  CHECK(to_json(round) == to_json(c));

  CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"n_clusterz": 3})")),
                  PreconditionError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"params": {"alpha": -1}})")),
                  PreconditionError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"design": {"p": 1.5}})")),
                  PreconditionError);
}

TEST_CASE("bernoulli sweep at beta = 0 stays inside the null band") {
  ExperimentConfig c = ExperimentConfig::desk_defaults(DesignKind::Bernoulli);
  c.n_clusters = 100;
  c.n_replicates = 40;
  c.gamma_grid = GridSpec{-2.0, 2.0, 1.0};
  const SweepResult r = run_sweep(c);
  REQUIRE(r.rows.size() == 5);
  double max_mean = 0.0, max_se = 0.0;
  for (const SweepRow& row : r.rows) {
    CHECK(row.summary.n_degenerate + row.summary.effective() == c.n_replicates);
    max_mean = std::max(max_mean, std::abs(row.summary.de_mean));
    max_se = std::max(max_se, row.summary.de_sd / std::sqrt(double(row.summary.effective())));
  }
  CHECK(max_mean < 4.0 * max_se);
}
