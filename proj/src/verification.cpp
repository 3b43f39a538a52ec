#include "epidirect/verification.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

#include "epidirect/estimators.hpp"
#include "epidirect/experiments.hpp"
#include "epidirect/oracle.hpp"
#include "epidirect/rng.hpp"
#include "epidirect/simulator.hpp"

namespace epidirect {

namespace {

constexpr std::uint64_t kCoupledStream = 11;
constexpr std::uint64_t kIndependentTreatedStream = 12;
constexpr std::uint64_t kIndependentControlStream = 13;
constexpr std::uint64_t kDominanceStream = 14;
constexpr std::uint64_t kOracleStream = 15;
constexpr std::uint64_t kEstimatorStream = 16;
constexpr std::uint64_t kSuiteSetupStream = 17;
constexpr std::uint64_t kSuiteSampleStream = 18;

std::uint32_t outcome_mask(const EpidemicOutcome& o) {
  std::uint32_t mask = 0;
  for (std::size_t k = 0; k < o.infected_by_horizon.size(); ++k) {
    if (o.infected_by_horizon[k] != 0) mask |= 1U << k;
  }
  return mask;
}

void require_null_beta(const ModelParams& params) {
  if (params.beta != 0.0) throw CouplingRequiresNullBeta();
}

Cluster draw_cluster(const ModelParams& params, std::size_t n, RandomStream& rng) {
  Cluster c = Cluster::uniform(n, 10.0);
  for (std::size_t k = 0; k < n; ++k) {
    c.eta[k] = rng.normal(params.eta.mean, params.eta.sd);
    c.xi[k] = rng.normal(params.xi.mean, params.xi.sd);
  }
  return c;
}

Allocation random_allocation(std::size_t n, RandomStream& rng) {
  Allocation x(n);
  for (auto& b : x) b = rng.bernoulli(0.5) ? 1 : 0;
  return x;
}

Cluster with_treatment(const Cluster& base, const Allocation& x) {
  Cluster c = base;
  c.treatment = x;
  return c;
}

struct SampleCheck {
  std::size_t violations = 0;
  std::size_t strict_events = 0;
  std::size_t strict_violations = 0;
  bool nonidentical = false;
  double gap_sum = 0.0;
  std::size_t gap_count = 0;
  double max_abs_gap = 0.0;
};

// true when the ordering t1 vs t0 is consistent with the expectation.
bool ordered(Expectation e, double t1, double t0) {
  switch (e) {
    case Expectation::TreatedLater: return t1 >= t0;
    case Expectation::TreatedEarlier: return t1 <= t0;
    case Expectation::Identical: return t1 == t0;
  }
  return false;
}

void record(SampleCheck& s, Expectation e, double t1, double t0, bool strict) {
  if (!ordered(e, t1, t0)) ++s.violations;
  if (strict && e != Expectation::Identical) {
    ++s.strict_events;
    if (t1 == t0) ++s.strict_violations;
  }
  const double gap = t1 - t0;
  s.gap_sum += gap;
  ++s.gap_count;
  s.max_abs_gap = std::max(s.max_abs_gap, std::abs(gap));
}

SampleCheck check_sample(const DominanceSpec& spec, const CoupledOutcome& out) {
  SampleCheck s;
  const auto& t1 = out.outcome_treated.infection_time;
  const auto& t0 = out.outcome_control.infection_time;
  if (spec.expected == Expectation::Identical) {
    s.nonidentical = t1 != t0 || out.outcome_treated.infected_by_horizon !=
                                     out.outcome_control.infected_by_horizon;
  }
  const auto& order = out.shared_order;
  if (spec.contrast == Contrast::ClusterAllVsNone) {
    // Before any infective exists both arms share the same waiting time, so
    // only infections after the first in the order can be strictly separated.
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      const std::size_t v = order[pos];
      record(s, spec.expected, t1[v], t0[v], pos > 0 && t1[v] > 0.0);
    }
  } else {
    const auto pos_of = [&](std::size_t who) {
      return static_cast<std::size_t>(std::find(order.begin(), order.end(), who) - order.begin());
    };
    const bool partner_first = pos_of(spec.partner) < pos_of(spec.focus);
    record(s, spec.expected, t1[spec.focus], t0[spec.focus],
           partner_first && t1[spec.focus] > 0.0);
  }
  return s;
}

}  // namespace

ChiSquareResult two_sample_chi_square(const std::vector<std::uint64_t>& a,
                                      const std::vector<std::uint64_t>& b) {
  if (a.size() != b.size()) throw PreconditionError("histograms differ in cell count");
  double total_a = 0.0, total_b = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    total_a += static_cast<double>(a[c]);
    total_b += static_cast<double>(b[c]);
  }
  if (total_a == 0.0 || total_b == 0.0) throw PreconditionError("empty histogram");
  // Homogeneity statistic for unequal sample sizes; reduces to
  // sum (a - b)^2 / (a + b) when the totals agree.
  const double ka = std::sqrt(total_b / total_a);
  const double kb = std::sqrt(total_a / total_b);
  ChiSquareResult r;
  std::size_t cells = 0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    const double ac = static_cast<double>(a[c]);
    const double bc = static_cast<double>(b[c]);
    if (ac + bc == 0.0) continue;
    ++cells;
    const double d = ka * ac - kb * bc;
    r.statistic += d * d / (ac + bc);
  }
  if (cells < 2) return r;
  r.dof = cells - 1;
  r.p_value = boost::math::gamma_q(static_cast<double>(r.dof) / 2.0, r.statistic / 2.0);
  return r;
}

MarginalValidityReport check_marginal_validity(const ModelParams& params, const Cluster& cluster,
                                               const Allocation& x1, const Allocation& x0,
                                               std::size_t n_samples, std::uint64_t seed,
                                               std::size_t threads) {
  require_null_beta(params);
  const std::size_t n = cluster.size();
  if (n > kMaxHistogramSize) {
    throw PreconditionError("marginal validity histograms need n <= 6");
  }
  if (n_samples == 0) throw PreconditionError("need at least one sample");
  const Cluster c1 = with_treatment(cluster, x1);
  const Cluster c0 = with_treatment(cluster, x0);
  c1.validate();
  c0.validate();

  struct Sample {
    std::uint32_t coupled1, coupled0, independent1, independent0;
    bool identical;
  };
  std::vector<Sample> samples(n_samples);
  parallel_for(n_samples, threads, [&](std::size_t i) {
    RandomStream coupled_rng(derive_seed(seed, {kCoupledStream, i}));
    const CoupledOutcome co = simulate_coupled(params, cluster, x1, x0, coupled_rng);
    RandomStream rng1(derive_seed(seed, {kIndependentTreatedStream, i}));
    RandomStream rng0(derive_seed(seed, {kIndependentControlStream, i}));
    samples[i] = {outcome_mask(co.outcome_treated), outcome_mask(co.outcome_control),
                  outcome_mask(simulate(params, c1, rng1)),
                  outcome_mask(simulate(params, c0, rng0)),
                  co.outcome_treated.infection_time == co.outcome_control.infection_time};
  });

  MarginalValidityReport report;
  report.n_samples = n_samples;
  const std::size_t cells = std::size_t{1} << n;
  for (ArmValidity* arm : {&report.treated, &report.control}) {
    arm->coupled_histogram.assign(cells, 0);
    arm->independent_histogram.assign(cells, 0);
  }
  for (const auto& s : samples) {
    ++report.treated.coupled_histogram[s.coupled1];
    ++report.control.coupled_histogram[s.coupled0];
    ++report.treated.independent_histogram[s.independent1];
    ++report.control.independent_histogram[s.independent0];
    if (s.identical) ++report.identical_arm_samples;
  }
  report.treated.test =
      two_sample_chi_square(report.treated.coupled_histogram, report.treated.independent_histogram);
  report.control.test =
      two_sample_chi_square(report.control.coupled_histogram, report.control.independent_histogram);
  return report;
}

GammaSign sign_class(double gamma) {
  if (gamma < 0.0) return GammaSign::Negative;
  if (gamma > 0.0) return GammaSign::Positive;
  return GammaSign::Zero;
}

Expectation expected_ordering(Contrast contrast, GammaSign sign) {
  if (sign == GammaSign::Zero) return Expectation::Identical;
  // All treated with gamma < 0 lowers every infectiousness term, delaying
  // every infection. Swapping treatment from the partner to the focus raises
  // the partner's infectiousness when gamma < 0, so the focus is infected
  // no later.
  const bool negative = sign == GammaSign::Negative;
  if (contrast == Contrast::ClusterAllVsNone) {
    return negative ? Expectation::TreatedLater : Expectation::TreatedEarlier;
  }
  return negative ? Expectation::TreatedEarlier : Expectation::TreatedLater;
}

DominanceSpec DominanceSpec::for_gamma(Contrast contrast, double gamma, std::size_t focus,
                                       std::size_t partner, Allocation others) {
  DominanceSpec spec;
  spec.contrast = contrast;
  spec.gamma_sign = sign_class(gamma);
  spec.expected = expected_ordering(contrast, spec.gamma_sign);
  spec.focus = focus;
  spec.partner = partner;
  spec.others = std::move(others);
  return spec;
}

void DominanceSpec::validate(std::size_t n) const {
  if (expected != expected_ordering(contrast, gamma_sign)) {
    throw PreconditionError("dominance expectation inconsistent with the sign of gamma");
  }
  if (contrast == Contrast::BlockSwapPair) {
    if (n < 2) throw PreconditionError("block swap needs at least two individuals");
    if (focus >= n || partner >= n || focus == partner) {
      throw PreconditionError("block swap needs distinct focus and partner indices");
    }
    if (others.size() != n - 2) throw PreconditionError("block swap others must have n - 2 entries");
    check_binary(others, "others");
  }
}

std::pair<Allocation, Allocation> DominanceSpec::allocations(std::size_t n) const {
  validate(n);
  if (contrast == Contrast::ClusterAllVsNone) return {Allocation(n, 1), Allocation(n, 0)};
  Allocation x1(n, 0);
  std::size_t next = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (k == focus || k == partner) continue;
    x1[k] = others[next++];
  }
  Allocation x0 = x1;
  x1[focus] = 1;
  x1[partner] = 0;
  x0[focus] = 0;
  x0[partner] = 1;
  return {x1, x0};
}

DominanceReport check_dominance(const DominanceSpec& spec, const ModelParams& params,
                                const Cluster& cluster, std::size_t n_samples,
                                std::uint64_t seed, std::size_t threads) {
  require_null_beta(params);
  if (sign_class(params.gamma) != spec.gamma_sign) {
    throw PreconditionError("dominance spec gamma sign differs from params.gamma");
  }
  const auto [x1, x0] = spec.allocations(cluster.size());

  std::vector<SampleCheck> checks(n_samples);
  parallel_for(n_samples, threads, [&](std::size_t i) {
    RandomStream rng(derive_seed(seed, {kDominanceStream, i}));
    checks[i] = check_sample(spec, simulate_coupled(params, cluster, x1, x0, rng));
  });

  DominanceReport report;
  report.n_samples = n_samples;
  double gap_sum = 0.0;
  std::size_t gap_count = 0;
  for (const auto& s : checks) {
    report.violations += s.violations > 0 ? 1 : 0;
    report.strict_events += s.strict_events;
    report.strict_violations += s.strict_violations;
    report.nonidentical += s.nonidentical ? 1 : 0;
    gap_sum += s.gap_sum;
    gap_count += s.gap_count;
    report.max_abs_gap = std::max(report.max_abs_gap, s.max_abs_gap);
  }
  report.mean_gap = gap_count > 0 ? gap_sum / static_cast<double>(gap_count) : 0.0;
  return report;
}

double OracleAgreement::max_abs_z() const {
  double m = 0.0;
  for (double z : z_scores) m = std::max(m, std::abs(z));
  return m;
}

OracleAgreement compare_with_oracle(const ModelParams& params, const Cluster& cluster,
                                    std::size_t n_samples, std::uint64_t seed,
                                    std::size_t threads) {
  if (n_samples == 0) throw PreconditionError("need at least one sample");
  const std::size_t n = cluster.size();
  OracleAgreement out;
  out.n_samples = n_samples;
  out.exact = exact_marginals(params, cluster, cluster.horizon);

  std::vector<std::uint32_t> masks(n_samples);
  parallel_for(n_samples, threads, [&](std::size_t i) {
    RandomStream rng(derive_seed(seed, {kOracleStream, i}));
    masks[i] = outcome_mask(simulate(params, cluster, rng));
  });
  std::vector<std::uint64_t> counts(n, 0);
  for (auto m : masks) {
    for (std::size_t k = 0; k < n; ++k) counts[k] += m >> k & 1U;
  }
  const double total = static_cast<double>(n_samples);
  for (std::size_t k = 0; k < n; ++k) {
    const double p = out.exact[k];
    const double freq = static_cast<double>(counts[k]) / total;
    const double se = std::sqrt(p * (1.0 - p) / total);
    out.empirical.push_back(freq);
    if (se > 0.0) {
      out.z_scores.push_back((freq - p) / se);
    } else {
      out.z_scores.push_back(freq == p ? 0.0 : std::numeric_limits<double>::infinity());
    }
  }
  return out;
}

EstimatorAgreement compare_estimator_with_oracle(const ModelParams& params,
                                                 const Cluster& cluster,
                                                 const DesignSpec& design,
                                                 std::size_t n_clusters,
                                                 std::size_t n_replicates, std::uint64_t seed,
                                                 std::size_t threads) {
  if (n_clusters == 0 || n_replicates < 2) {
    throw PreconditionError("need n_clusters >= 1 and n_replicates >= 2");
  }
  cluster.validate();
  EstimatorAgreement out;
  out.exact_de = exact_de(params, cluster, design, cluster.horizon).cluster_average;

  std::vector<TrialResult> results(n_replicates);
  parallel_for(n_replicates, threads, [&](std::size_t r) {
    RandomStream rng(derive_seed(seed, {kEstimatorStream, r}));
    TrialData data;
    data.design = design;
    data.clusters.reserve(n_clusters);
    Cluster c = cluster;
    for (std::size_t i = 0; i < n_clusters; ++i) {
      c.treatment = assign(design, c.size(), rng);
      EpidemicOutcome o = simulate(params, c, rng);
      data.clusters.push_back(ClusterObservation::from(c.treatment, std::move(o.infected_by_horizon)));
    }
    results[r] = de_hat(data);
  });
  const ReplicateSummary s = summarize(results);
  out.mc_mean = s.de_mean;
  out.n_replicates = s.n_reps;
  out.n_degenerate = s.n_degenerate;
  out.mc_se = s.de_sd / std::sqrt(static_cast<double>(s.effective()));
  return out;
}

bool CouplingSuiteReport::marginal_passes() const {
  return !marginal.empty() && std::all_of(marginal.begin(), marginal.end(), [&](const auto& m) {
    return m.report.passes(alpha_level);
  });
}

bool CouplingSuiteReport::dominance_passes() const {
  return !dominance.empty() && std::all_of(dominance.begin(), dominance.end(),
                                           [](const auto& d) { return d.report.passes(); });
}

CouplingSuiteReport run_coupling_suite(const ModelParams& params,
                                       const CouplingSuiteOptions& options) {
  ModelParams p = params.validated();
  p.beta = 0.0;
  RandomStream setup(derive_seed(options.seed, {kSuiteSetupStream}));

  CouplingSuiteReport report;
  report.alpha_level = options.alpha_level;
  const std::size_t n = options.marginal_size;
  for (std::size_t s = 0; s < options.marginal_settings; ++s) {
    MarginalSetting setting;
    setting.gamma = 4.0 * setup.uniform01() - 2.0;
    setting.x1 = random_allocation(n, setup);
    do {
      setting.x0 = random_allocation(n, setup);
    } while (setting.x0 == setting.x1);
    const Cluster cluster = draw_cluster(p, n, setup);
    ModelParams ps = p;
    ps.gamma = setting.gamma;
    setting.report =
        check_marginal_validity(ps, cluster, setting.x1, setting.x0, options.marginal_samples,
                                derive_seed(options.seed, {kSuiteSampleStream, s}),
                                options.threads);
    report.marginal.push_back(std::move(setting));
  }

  const std::size_t nd = options.dominance_size;
  const Cluster cluster = draw_cluster(p, nd, setup);
  const Allocation others = random_allocation(nd - 2, setup);
  std::uint64_t case_index = 0;
  for (Contrast contrast : {Contrast::ClusterAllVsNone, Contrast::BlockSwapPair}) {
    for (double gamma : {-1.0, 0.0, 1.0}) {
      DominanceCase c{DominanceSpec::for_gamma(contrast, gamma, 0, 1, others), gamma, {}};
      ModelParams pg = p;
      pg.gamma = gamma;
      c.report = check_dominance(
          c.spec, pg, cluster, options.dominance_samples,
          derive_seed(options.seed, {kSuiteSampleStream, 1000 + case_index++}), options.threads);
      report.dominance.push_back(std::move(c));
    }
  }
  return report;
}

bool OracleSuiteReport::signs_pass() const {
  return !signs.empty() &&
         std::all_of(signs.begin(), signs.end(), [](const SignCase& c) { return c.ok; });
}

bool OracleSuiteReport::identities_pass() const {
  if (binomial_failures != 0 || binomial_pairs == 0 || decompositions.empty()) return false;
  return std::all_of(decompositions.begin(), decompositions.end(), [&](const auto& d) {
    return d.max_residual < zero_tolerance && d.max_partner_residual < zero_tolerance;
  });
}

OracleSuiteReport run_oracle_suite(std::uint64_t seed) {
  OracleSuiteReport report;
  for (DesignKind design : {DesignKind::Bernoulli, DesignKind::Block, DesignKind::Cluster}) {
    for (std::size_t n = 2; n <= 5; ++n) {
      for (double gamma : {-1.0, 0.0, 1.0}) {
        ModelParams p;
        p.alpha = 0.01;
        p.beta = 0.0;
        p.gamma = gamma;
        const Cluster base = Cluster::uniform(n, 10.0);
        const DirectEffects de = exact_de(p, base, DesignSpec{design, 0.5}, 10.0);
        SignCase c{design, n, gamma, expected_null_sign(design, gamma),
                   *std::min_element(de.individual.begin(), de.individual.end()),
                   *std::max_element(de.individual.begin(), de.individual.end()), false};
        if (c.expected_sign == 0) {
          c.ok = std::abs(c.min_de) < report.zero_tolerance &&
                 std::abs(c.max_de) < report.zero_tolerance;
        } else if (c.expected_sign > 0) {
          c.ok = c.min_de > 0.0;
        } else {
          c.ok = c.max_de < 0.0;
        }
        report.signs.push_back(c);
      }
    }
  }

  for (std::size_t n = 2; n <= 20; ++n) {
    for (std::size_t m = 1; m < n; ++m) {
      ++report.binomial_pairs;
      if (!binomial_identity_holds(n, m)) ++report.binomial_failures;
    }
  }

  RandomStream rng(derive_seed(seed, {kSuiteSetupStream, 1}));
  for (auto [n, m] : {std::pair<std::size_t, std::size_t>{3, 1}, {4, 2}, {5, 2}}) {
    ModelParams p;
    p.alpha = 0.005 + 0.045 * rng.uniform01();
    p.beta = rng.normal(0.0, 0.5);
    p.gamma = rng.normal(0.0, 1.0);
    Cluster base = Cluster::uniform(n, 10.0);
    for (std::size_t k = 0; k < n; ++k) {
      base.eta[k] = rng.normal(0.0, 0.3);
      base.xi[k] = rng.normal(0.0, 0.3);
    }
    DecompositionCase d{n, m, 0.0, 0.0};
    for (std::size_t j = 0; j < n; ++j) {
      const DecompositionCheck check = check_block_decomposition(p, base, m, j, 10.0);
      d.max_residual = std::max(d.max_residual, check.residual);
      d.max_partner_residual = std::max(d.max_partner_residual, check.partner_residual);
    }
    report.decompositions.push_back(d);
  }
  return report;
}

}  // namespace epidirect
