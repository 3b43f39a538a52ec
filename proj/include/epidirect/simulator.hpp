#pragma once

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "epidirect/model.hpp"
#include "epidirect/rng.hpp"

namespace epidirect {

class CouplingRequiresNullBeta : public PreconditionError {
 public:
  CouplingRequiresNullBeta()
      : PreconditionError("coupled sampling is only defined for beta == 0") {}
};

/// Two infection events landed on the same floating-point time.
class TiedInfectionTimes : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A total event rate came out zero, negative, or non-finite.
class NonFiniteRate : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kNeverInfected = std::numeric_limits<double>::infinity();

struct EpidemicOutcome {
  std::vector<double> infection_time;  // kNeverInfected if not infected
  Allocation infected_by_horizon;      // infection_time < horizon
  std::vector<std::size_t> order;      // initial infections first, then by event time
  double horizon = 0.0;

  [[nodiscard]] std::size_t size() const { return infection_time.size(); }
  [[nodiscard]] std::size_t infected_count() const;
};

/// Paired outcomes under two allocations driven by shared uniforms and a
/// shared infection order.
struct CoupledOutcome {
  EpidemicOutcome outcome_treated;  // under x1
  EpidemicOutcome outcome_control;  // under x0
  std::vector<double> shared_uniforms;
  std::vector<std::size_t> shared_order;
};

/// F(w) = 1 - exp(-rate * w).
double waiting_time_cdf(double rate, double w);

/// Inverse of waiting_time_cdf: -log(1 - u) / rate.
double waiting_time_quantile(double rate, double u);

/// Competing-exponentials event loop. Generates every infection (the chain
/// always completes because alpha > 0), then thresholds at the horizon.
EpidemicOutcome simulate(const ModelParams& params, const Cluster& cluster, RandomStream& rng);

/// Coupled construction for beta == 0: at each step one uniform drives both
/// arms' waiting times through their inverse CDFs, and one categorical draw
/// with weights exp(eta_v) picks the next infected individual for both arms.
/// The treatment vector of cluster_base is ignored.
CoupledOutcome simulate_coupled(const ModelParams& params, const Cluster& cluster_base,
                                const Allocation& x1, const Allocation& x0, RandomStream& rng);

}  // namespace epidirect
