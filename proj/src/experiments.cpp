#include "epidirect/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

#include "epidirect/simulator.hpp"

namespace epidirect {

namespace {

// Stream tags for derive_seed.
constexpr std::uint64_t kPopulationStream = 1;
constexpr std::uint64_t kTrialStream = 2;

constexpr double kZ95 = 1.959963984540054;

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

std::vector<std::pair<double, double>> grid_points(const ExperimentConfig& config) {
  const std::vector<double> betas =
      config.beta_grid ? config.beta_grid->points() : std::vector<double>{config.params.beta};
  const std::vector<double> gammas =
      config.gamma_grid ? config.gamma_grid->points() : std::vector<double>{config.params.gamma};
  std::vector<std::pair<double, double>> out;
  out.reserve(betas.size() * gammas.size());
  for (double b : betas) {
    for (double g : gammas) out.emplace_back(b, g);
  }
  return out;
}

}  // namespace

std::size_t ClusterSizeSpec::draw(RandomStream& rng) const {
  if (kind == Kind::Fixed) return fixed;
  return shift + static_cast<std::size_t>(rng.poisson(mean));
}

double HorizonSpec::draw(RandomStream& rng) const {
  if (kind == Kind::Fixed) return value;
  return waiting_time_quantile(1.0 / value, rng.uniform01());
}

void GridSpec::validate() const {
  if (!std::isfinite(min) || !std::isfinite(max) || !std::isfinite(step)) {
    throw PreconditionError("grid bounds and step must be finite");
  }
  if (!(step > 0.0)) throw PreconditionError("grid step must be positive");
  if (max < min) throw PreconditionError("grid max is below grid min");
}

std::vector<double> GridSpec::points() const {
  validate();
  const auto count = static_cast<std::size_t>(std::floor((max - min) / step + 1e-9)) + 1;
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    // Snap to 1e-9 so grids such as -2:0.1:2 hit 0 exactly.
    out[i] = std::round((min + static_cast<double>(i) * step) * 1e9) / 1e9;
  }
  return out;
}

void ExperimentConfig::validate() const {
  design.validate();
  (void)params.validated();
  if (n_clusters < 1) throw PreconditionError("n_clusters must be >= 1");
  if (n_replicates < 1) throw PreconditionError("n_replicates must be >= 1");
  if (cluster_size.kind == ClusterSizeSpec::Kind::Fixed && cluster_size.fixed < 1) {
    throw PreconditionError("fixed cluster size must be >= 1");
  }
  if (cluster_size.kind == ClusterSizeSpec::Kind::ShiftedPoisson &&
      (cluster_size.shift < 1 || !(cluster_size.mean >= 0.0))) {
    throw PreconditionError("shifted Poisson cluster size needs shift >= 1 and mean >= 0");
  }
  if (!(horizon.value > 0.0) || !std::isfinite(horizon.value)) {
    throw PreconditionError("horizon must be positive and finite");
  }
  if (gamma_grid) gamma_grid->validate();
  if (beta_grid) beta_grid->validate();
}

ExperimentConfig ExperimentConfig::desk_defaults(DesignKind kind) {
  ExperimentConfig config;
  config.design = DesignSpec{kind, 0.5};
  config.params = ModelParams::standard();
  return config;
}

void ExperimentConfig::apply_full_scale() {
  n_clusters = 1000;
  n_replicates = 500;
}

void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& body) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(count);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<Cluster> draw_population(const ExperimentConfig& config, RandomStream& rng) {
  const ModelParams params = config.params.validated();
  std::vector<Cluster> clusters;
  clusters.reserve(config.n_clusters);
  for (std::size_t i = 0; i < config.n_clusters; ++i) {
    const std::size_t n = config.cluster_size.draw(rng);
    if (n == 0) throw PreconditionError("drew an empty cluster");
    Cluster c = Cluster::uniform(n, 1.0);
    for (std::size_t k = 0; k < n; ++k) {
      c.eta[k] = rng.normal(params.eta.mean, params.eta.sd);
      c.xi[k] = rng.normal(params.xi.mean, params.xi.sd);
    }
    c.horizon = config.horizon.draw(rng);
    clusters.push_back(std::move(c));
  }
  return clusters;
}

SimulatedTrial simulate_trial(const ExperimentConfig& config, double beta, double gamma,
                              std::size_t replicate_index) {
  ModelParams params = config.params;
  params.beta = beta;
  params.gamma = gamma;
  params = params.validated();

  const std::uint64_t population_seed =
      config.coefficient_mode == CoefficientMode::RedrawPerReplicate
          ? derive_seed(config.seed, {kPopulationStream, replicate_index})
          : derive_seed(config.seed, {kPopulationStream});
  RandomStream population_rng(population_seed);

  SimulatedTrial trial;
  trial.clusters = draw_population(config, population_rng);
  trial.outcomes.reserve(trial.clusters.size());

  RandomStream rng(derive_seed(config.seed, {kTrialStream, replicate_index}));
  TrialData data;
  data.design = config.design;
  data.clusters.reserve(trial.clusters.size());
  for (Cluster& c : trial.clusters) {
    c.treatment = assign(config.design, c.size(), rng);
    trial.outcomes.push_back(simulate(params, c, rng));
    data.clusters.push_back(
        ClusterObservation::from(c.treatment, trial.outcomes.back().infected_by_horizon));
  }
  trial.result = de_hat(data);
  return trial;
}

TrialResult run_replicate(const ExperimentConfig& config, double beta, double gamma,
                          std::size_t replicate_index) {
  return simulate_trial(config, beta, gamma, replicate_index).result;
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

ReplicateSummary summarize(const std::vector<TrialResult>& replicates) {
  std::vector<double> values;
  values.reserve(replicates.size());
  for (const auto& r : replicates) {
    if (!r.degenerate) values.push_back(r.de_hat);
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  ReplicateSummary s{nan, nan, nan, nan, replicates.size(), replicates.size() - values.size()};
  const std::size_t k = values.size();
  if (k == 0) return s;
  s.de_mean = pairwise_sum(values) / static_cast<double>(k);
  if (k < 2) return s;
  std::vector<double> squares(k);
  for (std::size_t i = 0; i < k; ++i) squares[i] = (values[i] - s.de_mean) * (values[i] - s.de_mean);
  s.de_sd = std::sqrt(pairwise_sum(squares) / static_cast<double>(k - 1));
  const double half_width = kZ95 * s.de_sd / std::sqrt(static_cast<double>(k));
  s.ci_low = s.de_mean - half_width;
  s.ci_high = s.de_mean + half_width;
  return s;
}

SweepResult run_sweep(const ExperimentConfig& config) {
  config.validate();
  const auto points = grid_points(config);
  const std::size_t reps = config.n_replicates;
  std::vector<TrialResult> results(points.size() * reps);
  parallel_for(results.size(), config.threads, [&](std::size_t item) {
    const auto& [beta, gamma] = points[item / reps];
    results[item] = run_replicate(config, beta, gamma, item % reps);
  });

  SweepResult out;
  out.rows.reserve(points.size());
  for (std::size_t p = 0; p < points.size(); ++p) {
    const std::vector<TrialResult> slice(results.begin() + static_cast<std::ptrdiff_t>(p * reps),
                                         results.begin() +
                                             static_cast<std::ptrdiff_t>((p + 1) * reps));
    out.rows.push_back({config.design.kind, points[p].first, points[p].second, summarize(slice)});
  }
  return out;
}

void write_sweep_csv(const SweepResult& result, std::ostream& out) {
  out << kSweepCsvHeader << '\n';
  for (const auto& r : result.rows) {
    const auto& s = r.summary;
    out << to_string(r.design) << ',' << format_number(r.beta) << ',' << format_number(r.gamma)
        << ',' << format_number(s.de_mean) << ',' << format_number(s.de_sd) << ','
        << format_number(s.ci_low) << ',' << format_number(s.ci_high) << ',' << s.n_reps << ','
        << s.n_degenerate << '\n';
  }
}

HeatmapResult run_heatmap(const ExperimentConfig& config) {
  if (!config.beta_grid || !config.gamma_grid) {
    throw PreconditionError("heatmap needs both beta and gamma grids");
  }
  HeatmapResult out;
  out.sweep = run_sweep(config);
  out.mask.reserve(out.sweep.rows.size());
  for (const auto& r : out.sweep.rows) {
    const auto& s = r.summary;
    const bool decisive = !std::isnan(s.ci_low) && !s.ci_contains_zero();
    const bool mismatch = decisive && r.beta != 0.0 && sign_of(s.de_mean) != sign_of(r.beta);
    out.mask.push_back({r.beta, r.gamma, r.design, s.de_mean, decisive, mismatch});
  }
  return out;
}

void write_mask_csv(const HeatmapResult& result, std::ostream& out) {
  out << kMaskCsvHeader << '\n';
  for (const auto& c : result.mask) {
    out << format_number(c.beta) << ',' << format_number(c.gamma) << ',' << to_string(c.design)
        << ',' << format_number(c.de_mean) << ',' << (c.decisive ? 1 : 0) << ','
        << (c.mismatch ? 1 : 0) << '\n';
  }
}

int expected_null_sign(DesignKind design, double gamma) {
  switch (design) {
    case DesignKind::Bernoulli: return 0;
    case DesignKind::Block: return -sign_of(gamma);
    case DesignKind::Cluster: return sign_of(gamma);
  }
  return 0;
}

bool PropositionReport::all_pass() const {
  if (insufficient_replication || checks.empty()) return false;
  return std::all_of(checks.begin(), checks.end(),
                     [](const PropositionCheck& c) { return c.verdict == Verdict::Pass; });
}

PropositionReport verify_propositions(const ExperimentConfig& config) {
  PropositionReport report;
  report.insufficient_replication = config.n_replicates < 2;
  for (DesignKind design : {DesignKind::Bernoulli, DesignKind::Block, DesignKind::Cluster}) {
    ExperimentConfig c = config;
    c.design.kind = design;
    c.params.beta = 0.0;
    c.beta_grid.reset();
    c.gamma_grid.reset();
    for (double gamma : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
      c.params.gamma = gamma;
      PropositionCheck check{design, gamma, expected_null_sign(design, gamma), {},
                             Verdict::Insufficient};
      check.summary = run_sweep(c).rows.front().summary;
      if (!report.insufficient_replication && check.summary.effective() >= 2) {
        const auto& s = check.summary;
        bool ok = false;
        if (check.expected_sign == 0) {
          ok = s.ci_contains_zero();
        } else {
          ok = !s.ci_contains_zero() && sign_of(s.de_mean) == check.expected_sign;
        }
        check.verdict = ok ? Verdict::Pass : Verdict::Fail;
      }
      report.checks.push_back(check);
    }
  }
  return report;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Insufficient: return "insufficient";
  }
  return "unknown";
}

}  // namespace epidirect
