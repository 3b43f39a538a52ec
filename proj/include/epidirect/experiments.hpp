#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "epidirect/estimators.hpp"
#include "epidirect/model.hpp"
#include "epidirect/randomization.hpp"
#include "epidirect/rng.hpp"
#include "epidirect/simulator.hpp"

namespace epidirect {

struct ClusterSizeSpec {
  enum class Kind { Fixed, ShiftedPoisson };
  Kind kind = Kind::ShiftedPoisson;
  std::size_t fixed = 4;
  std::size_t shift = 2;
  double mean = 2.0;

  std::size_t draw(RandomStream& rng) const;
};

struct HorizonSpec {
  enum class Kind { Fixed, Exponential };
  Kind kind = Kind::Fixed;
  double value = 10.0;  // the fixed horizon, or the mean of the exponential

  double draw(RandomStream& rng) const;
};

/// Closed grid [min, max] with spacing step.
struct GridSpec {
  double min = -2.0;
  double max = 2.0;
  double step = 0.1;

  void validate() const;
  [[nodiscard]] std::vector<double> points() const;
};

enum class CoefficientMode { RedrawPerReplicate, FixedAcrossReplicates };

struct ExperimentConfig {
  DesignSpec design;
  ModelParams params;
  ClusterSizeSpec cluster_size;
  HorizonSpec horizon;
  std::size_t n_clusters = 500;
  std::size_t n_replicates = 200;
  std::optional<GridSpec> gamma_grid;
  std::optional<GridSpec> beta_grid;
  std::uint64_t seed = 20200101;
  CoefficientMode coefficient_mode = CoefficientMode::RedrawPerReplicate;
  std::size_t threads = 1;

  void validate() const;

  /// N = 500 clusters and 200 replicates; cluster sizes 2 + Poisson(2),
  /// horizon 10, p = 0.5 and ModelParams::standard().
  static ExperimentConfig desk_defaults(DesignKind kind);

  /// N = 1000 clusters, 500 replicates per grid point.
  void apply_full_scale();
};

/// Runs body(i) for i in [0, count) on `threads` workers. Each index is
/// processed exactly once; exceptions are rethrown on the calling thread.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& body);

/// Cluster sizes, coefficients and horizons for one trial; treatments unset.
std::vector<Cluster> draw_population(const ExperimentConfig& config, RandomStream& rng);

struct SimulatedTrial {
  std::vector<Cluster> clusters;          // with the assigned treatments
  std::vector<EpidemicOutcome> outcomes;  // one per cluster
  TrialResult result;
};

/// One trial with its per-cluster outcomes kept; run_replicate returns only
/// the estimate from the same computation.
SimulatedTrial simulate_trial(const ExperimentConfig& config, double beta, double gamma,
                              std::size_t replicate_index);

/// One simulated trial at (beta, gamma): draws the population, assigns
/// treatment, simulates every cluster and applies the design's estimator.
/// Deterministic in (seed, replicate_index) and the parameters; the same
/// replicate index reuses the same random streams at every grid point.
TrialResult run_replicate(const ExperimentConfig& config, double beta, double gamma,
                          std::size_t replicate_index);

struct ReplicateSummary {
  double de_mean;
  double de_sd;
  double ci_low;
  double ci_high;
  std::size_t n_reps;        // replicates run
  std::size_t n_degenerate;  // replicates excluded because an arm was empty

  [[nodiscard]] std::size_t effective() const { return n_reps - n_degenerate; }
  [[nodiscard]] bool ci_contains_zero() const { return ci_low <= 0.0 && 0.0 <= ci_high; }
};

/// Mean, sample sd and normal 95% interval for the mean over non-degenerate
/// replicates. Sums are pairwise so the result does not depend on how the
/// work was split.
ReplicateSummary summarize(const std::vector<TrialResult>& replicates);

/// Sum by recursive halving.
double pairwise_sum(std::span<const double> values);

struct SweepRow {
  DesignKind design;
  double beta;
  double gamma;
  ReplicateSummary summary;
};

struct SweepResult {
  std::vector<SweepRow> rows;
};

/// Every (beta, gamma) grid point; an absent grid means the single value
/// in config.params.
SweepResult run_sweep(const ExperimentConfig& config);

inline constexpr const char* kSweepCsvHeader =
    "design,beta,gamma,de_mean,de_sd,ci_low,ci_high,n_reps,n_degenerate";
inline constexpr const char* kMaskCsvHeader = "beta,gamma,design,de_mean,decisive,mismatch";

void write_sweep_csv(const SweepResult& result, std::ostream& out);

struct MaskCell {
  double beta;
  double gamma;
  DesignKind design;
  double de_mean;
  bool decisive;  // the 95% interval excludes zero
  bool mismatch;  // decisive, beta != 0 and sign(de_mean) != sign(beta)
};

struct HeatmapResult {
  SweepResult sweep;
  std::vector<MaskCell> mask;
};

HeatmapResult run_heatmap(const ExperimentConfig& config);

void write_mask_csv(const HeatmapResult& result, std::ostream& out);

enum class Verdict { Pass, Fail, Insufficient };

struct PropositionCheck {
  DesignKind design;
  double gamma;
  int expected_sign;  // sign the mean direct effect must take at beta = 0
  ReplicateSummary summary;
  Verdict verdict;
};

struct PropositionReport {
  std::vector<PropositionCheck> checks;
  bool insufficient_replication = false;

  [[nodiscard]] bool all_pass() const;
};

/// Expected sign of the direct effect at beta = 0 for a design and gamma:
/// zero under Bernoulli or gamma = 0, -sign(gamma) under block, sign(gamma)
/// under cluster randomization.
int expected_null_sign(DesignKind design, double gamma);

/// For each design and gamma in {-2, -1, 0, 1, 2} at beta = 0, tests the mean
/// replicate estimate against zero in the expected direction.
PropositionReport verify_propositions(const ExperimentConfig& config);

std::string to_string(Verdict v);

}  // namespace epidirect
