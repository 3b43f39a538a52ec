#pragma once

// Executable checks of the coupling construction: marginal validity of each
// coupled arm, pathwise ordering of infection times for the allocation pairs
// used in the sign arguments, and Monte Carlo agreement with the exact oracle.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "epidirect/model.hpp"
#include "epidirect/randomization.hpp"
#include "epidirect/oracle.hpp"

namespace epidirect {

inline constexpr std::size_t kMaxHistogramSize = 6;

struct ChiSquareResult {
  double statistic = 0.0;
  std::size_t dof = 0;
  double p_value = 1.0;
};

/// Two-sample chi-square homogeneity test for histograms over the same cells.
/// Cells empty in both samples are dropped.
ChiSquareResult two_sample_chi_square(const std::vector<std::uint64_t>& a,
                                      const std::vector<std::uint64_t>& b);

struct ArmValidity {
  std::vector<std::uint64_t> coupled_histogram;      // bitmask of infected_by_horizon
  std::vector<std::uint64_t> independent_histogram;
  ChiSquareResult test;
};

struct MarginalValidityReport {
  ArmValidity treated;  // x1 arm vs. simulate under x1
  ArmValidity control;  // x0 arm vs. simulate under x0
  std::size_t n_samples = 0;
  std::size_t identical_arm_samples = 0;  // samples where both arms agree exactly

  [[nodiscard]] bool passes(double alpha_level) const {
    return treated.test.p_value > alpha_level && control.test.p_value > alpha_level;
  }
};

/// Histograms the coupled sampler's arms against independent draws from the
/// plain sampler, n_samples per side. Requires beta == 0 and n <= 6.
MarginalValidityReport check_marginal_validity(const ModelParams& params, const Cluster& cluster,
                                               const Allocation& x1, const Allocation& x0,
                                               std::size_t n_samples, std::uint64_t seed,
                                               std::size_t threads = 1);

enum class Contrast { ClusterAllVsNone, BlockSwapPair };
enum class GammaSign { Negative, Zero, Positive };
enum class Expectation { TreatedLater, Identical, TreatedEarlier };

/// Allocation pair plus the time ordering the coupling must produce.
///
/// ClusterAllVsNone: x1 = all treated, x0 = none treated; the ordering applies
/// to every individual.
/// BlockSwapPair: x1 treats `focus` and not `partner`, x0 the reverse, others
/// fixed at `others`; the ordering applies to `focus` only.
struct DominanceSpec {
  Contrast contrast = Contrast::ClusterAllVsNone;
  GammaSign gamma_sign = GammaSign::Negative;
  Expectation expected = Expectation::TreatedLater;
  std::size_t focus = 0;
  std::size_t partner = 1;
  Allocation others;  // n - 2 entries, index order with focus and partner removed

  /// Spec whose expectation follows from the sign of gamma.
  static DominanceSpec for_gamma(Contrast contrast, double gamma, std::size_t focus = 0,
                                 std::size_t partner = 1, Allocation others = {});

  void validate(std::size_t n) const;
  [[nodiscard]] std::pair<Allocation, Allocation> allocations(std::size_t n) const;
};

Expectation expected_ordering(Contrast contrast, GammaSign sign);
GammaSign sign_class(double gamma);

struct DominanceReport {
  std::size_t n_samples = 0;
  std::size_t violations = 0;         // samples breaking the non-strict ordering
  std::size_t strict_events = 0;      // comparisons where the ordering must be strict
  std::size_t strict_violations = 0;  // of those, ties
  std::size_t nonidentical = 0;       // Identical expectation: samples with any difference
  double mean_gap = 0.0;              // mean of T1 - T0 over checked comparisons
  double max_abs_gap = 0.0;

  [[nodiscard]] bool passes() const {
    return violations == 0 && strict_violations == 0 && nonidentical == 0;
  }
};

/// Runs n_samples coupled simulations and counts pathwise ordering
/// violations. Zero tolerance: any violation is reported.
///
/// Strictness: for ClusterAllVsNone every infection after the first must be
/// strictly ordered; for BlockSwapPair the focus time is strictly ordered
/// whenever the partner was infected before the focus.
DominanceReport check_dominance(const DominanceSpec& spec, const ModelParams& params,
                                const Cluster& cluster, std::size_t n_samples,
                                std::uint64_t seed, std::size_t threads = 1);

struct OracleAgreement {
  std::vector<double> exact;      // per-individual Pr(infected by horizon)
  std::vector<double> empirical;  // Monte Carlo frequencies
  std::vector<double> z_scores;   // (empirical - exact) / binomial standard error
  std::size_t n_samples = 0;

  [[nodiscard]] double max_abs_z() const;
};

/// Monte Carlo frequencies from simulate() vs. the exact CTMC marginals.
OracleAgreement compare_with_oracle(const ModelParams& params, const Cluster& cluster,
                                    std::size_t n_samples, std::uint64_t seed,
                                    std::size_t threads = 1);

struct EstimatorAgreement {
  double exact_de = 0.0;   // oracle cluster-average direct effect
  double mc_mean = 0.0;    // mean estimate over non-degenerate replicates
  double mc_se = 0.0;      // empirical standard error of mc_mean
  std::size_t n_replicates = 0;
  std::size_t n_degenerate = 0;

  [[nodiscard]] double z() const { return (mc_mean - exact_de) / mc_se; }
};

/// Replicates a trial of n_clusters copies of one fixed cluster (coefficients
/// held fixed, treatment and epidemics redrawn) and compares the mean of the
/// design-matched estimate with the oracle's exact direct effect.
EstimatorAgreement compare_estimator_with_oracle(const ModelParams& params,
                                                 const Cluster& cluster,
                                                 const DesignSpec& design,
                                                 std::size_t n_clusters,
                                                 std::size_t n_replicates, std::uint64_t seed,
                                                 std::size_t threads = 1);

struct CouplingSuiteOptions {
  std::size_t marginal_size = 3;
  std::size_t marginal_settings = 5;
  std::size_t marginal_samples = 100'000;
  double alpha_level = 0.001;
  std::size_t dominance_size = 4;
  std::size_t dominance_samples = 10'000;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
};

struct MarginalSetting {
  double gamma;
  Allocation x1;
  Allocation x0;
  MarginalValidityReport report;
};

struct DominanceCase {
  DominanceSpec spec;
  double gamma;
  DominanceReport report;
};

struct CouplingSuiteReport {
  std::vector<MarginalSetting> marginal;
  std::vector<DominanceCase> dominance;
  double alpha_level = 0.001;

  [[nodiscard]] bool marginal_passes() const;
  [[nodiscard]] bool dominance_passes() const;
  [[nodiscard]] bool passes() const { return marginal_passes() && dominance_passes(); }
};

/// Marginal validity at randomly drawn (gamma, allocation pair) settings, then
/// pathwise dominance for both contrasts at gamma = -1, 0, 1. Coefficients are
/// drawn from the params' normals; beta is forced to zero.
CouplingSuiteReport run_coupling_suite(const ModelParams& params,
                                       const CouplingSuiteOptions& options);

struct SignCase {
  DesignKind design;
  std::size_t n;
  double gamma;
  int expected_sign;
  double min_de;  // smallest DE_ij over individuals
  double max_de;  // largest DE_ij over individuals
  bool ok;
};

struct DecompositionCase {
  std::size_t n;
  std::size_t m;
  double max_residual;
  double max_partner_residual;
};

struct OracleSuiteReport {
  std::vector<SignCase> signs;
  std::size_t binomial_pairs = 0;
  std::size_t binomial_failures = 0;
  std::vector<DecompositionCase> decompositions;
  double zero_tolerance = 1e-10;

  [[nodiscard]] bool signs_pass() const;
  [[nodiscard]] bool identities_pass() const;
  [[nodiscard]] bool passes() const { return signs_pass() && identities_pass(); }
};

/// Exact sign grid (every design, n = 2..5, gamma in {-1, 0, 1}, beta = 0,
/// zero coefficients, alpha = 0.01, horizon 10), the binomial identity for
/// 1 <= m < n <= 20 and the block decomposition at (3,1), (4,2), (5,2) with
/// parameters drawn from the seed.
OracleSuiteReport run_oracle_suite(std::uint64_t seed);

}  // namespace epidirect
