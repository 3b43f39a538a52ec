#include "epidirect/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace epidirect {

namespace {

Allocation initial_state(const Cluster& cluster) {
  if (cluster.initial_infected.empty()) return Allocation(cluster.size(), 0);
  return cluster.initial_infected;
}

EpidemicOutcome start_outcome(const Allocation& infected, double horizon) {
  EpidemicOutcome out;
  const std::size_t n = infected.size();
  out.infection_time.assign(n, kNeverInfected);
  out.horizon = horizon;
  for (std::size_t k = 0; k < n; ++k) {
    if (infected[k] != 0) {
      out.infection_time[k] = 0.0;
      out.order.push_back(k);
    }
  }
  return out;
}

void finish_outcome(EpidemicOutcome& out) {
  out.infected_by_horizon.resize(out.infection_time.size());
  for (std::size_t k = 0; k < out.infection_time.size(); ++k) {
    out.infected_by_horizon[k] = out.infection_time[k] < out.horizon ? 1 : 0;
  }
}

// Index into `weights` (restricted to susceptibles) chosen with probability
// proportional to weight, using a single uniform.
std::size_t pick_weighted(const Allocation& infected, const std::vector<double>& weights,
                          double total, double u) {
  const double target = u * total;
  double acc = 0.0;
  std::size_t last = weights.size();
  for (std::size_t a = 0; a < weights.size(); ++a) {
    if (infected[a] != 0) continue;
    acc += weights[a];
    last = a;
    if (target < acc) return a;
  }
  // Rounding can leave target == total; fall back to the last susceptible.
  return last;
}

double infectious_pressure(double alpha, double gamma, const Allocation& infected,
                           const Allocation& x, const std::vector<double>& xi) {
  double pressure = alpha;
  for (std::size_t b = 0; b < infected.size(); ++b) {
    if (infected[b] != 0) pressure += infectiousness_weight(gamma, x[b], xi[b]);
  }
  return pressure;
}

void check_rate(double rate) {
  if (!(rate > 0.0) || !std::isfinite(rate)) {
    throw NonFiniteRate("total infection rate is not positive and finite: " +
                        std::to_string(rate));
  }
}

double advance(double previous, double wait) {
  const double next = previous + wait;
  if (!(next > previous)) {
    throw TiedInfectionTimes("consecutive infections at identical time " +
                             std::to_string(previous));
  }
  return next;
}

}  // namespace

std::size_t EpidemicOutcome::infected_count() const {
  return static_cast<std::size_t>(
      std::count(infected_by_horizon.begin(), infected_by_horizon.end(), std::uint8_t{1}));
}

double waiting_time_cdf(double rate, double w) {
  if (!(rate > 0.0)) throw PreconditionError("waiting time rate must be positive");
  if (!(w >= 0.0)) throw PreconditionError("waiting time must be nonnegative");
  return -std::expm1(-rate * w);
}

double waiting_time_quantile(double rate, double u) {
  if (!(rate > 0.0)) throw PreconditionError("waiting time rate must be positive");
  if (!(u >= 0.0 && u < 1.0)) throw PreconditionError("quantile level must be in [0, 1)");
  return -std::log1p(-u) / rate;
}

EpidemicOutcome simulate(const ModelParams& params, const Cluster& cluster, RandomStream& rng) {
  cluster.validate();
  const std::size_t n = cluster.size();
  Allocation infected = initial_state(cluster);
  EpidemicOutcome out = start_outcome(infected, cluster.horizon);
  if (out.order.size() == n) throw PreconditionError("cluster has no susceptible individuals");

  std::vector<double> weight(n);
  for (std::size_t a = 0; a < n; ++a) {
    weight[a] = susceptibility_weight(params.beta, cluster.treatment[a], cluster.eta[a]);
  }

  double now = 0.0;
  while (out.order.size() < n) {
    double susceptible_weight = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      if (infected[a] == 0) susceptible_weight += weight[a];
    }
    const double pressure =
        infectious_pressure(params.alpha, params.gamma, infected, cluster.treatment, cluster.xi);
    const double rate = susceptible_weight * pressure;
    check_rate(rate);

    now = advance(now, waiting_time_quantile(rate, rng.uniform01()));
    const std::size_t v = pick_weighted(infected, weight, susceptible_weight, rng.uniform01());
    infected[v] = 1;
    out.infection_time[v] = now;
    out.order.push_back(v);
  }
  finish_outcome(out);
  return out;
}

CoupledOutcome simulate_coupled(const ModelParams& params, const Cluster& cluster_base,
                                const Allocation& x1, const Allocation& x0, RandomStream& rng) {
  if (params.beta != 0.0) throw CouplingRequiresNullBeta();
  const std::size_t n = cluster_base.size();
  if (x1.size() != n || x0.size() != n) {
    throw PreconditionError("allocation length differs from cluster size");
  }
  check_binary(x1, "x1");
  check_binary(x0, "x0");
  {
    Cluster probe = cluster_base;
    probe.treatment = x1;
    probe.validate();
  }

  Allocation infected = initial_state(cluster_base);
  CoupledOutcome out;
  out.outcome_treated = start_outcome(infected, cluster_base.horizon);
  out.outcome_control = start_outcome(infected, cluster_base.horizon);
  out.shared_order = out.outcome_treated.order;
  if (out.shared_order.size() == n) {
    throw PreconditionError("cluster has no susceptible individuals");
  }

  std::vector<double> weight(n);
  for (std::size_t a = 0; a < n; ++a) weight[a] = std::exp(cluster_base.eta[a]);

  double now1 = 0.0;
  double now0 = 0.0;
  while (out.shared_order.size() < n) {
    double susceptible_weight = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      if (infected[a] == 0) susceptible_weight += weight[a];
    }
    const double rate1 =
        susceptible_weight * infectious_pressure(params.alpha, params.gamma, infected, x1,
                                                 cluster_base.xi);
    const double rate0 =
        susceptible_weight * infectious_pressure(params.alpha, params.gamma, infected, x0,
                                                 cluster_base.xi);
    check_rate(rate1);
    check_rate(rate0);

    const double u = rng.uniform01();
    out.shared_uniforms.push_back(u);
    now1 = advance(now1, waiting_time_quantile(rate1, u));
    now0 = advance(now0, waiting_time_quantile(rate0, u));

    const std::size_t v = pick_weighted(infected, weight, susceptible_weight, rng.uniform01());
    infected[v] = 1;
    out.outcome_treated.infection_time[v] = now1;
    out.outcome_control.infection_time[v] = now0;
    out.outcome_treated.order.push_back(v);
    out.outcome_control.order.push_back(v);
    out.shared_order.push_back(v);
  }
  finish_outcome(out.outcome_treated);
  finish_outcome(out.outcome_control);
  return out;
}

}  // namespace epidirect
