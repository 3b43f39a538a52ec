#pragma once

// Structural within-cluster transmission model.
//
// A susceptible individual j in a cluster experiences the hazard
//
//   lambda_j = exp(x_j * beta + eta_j) * (alpha + sum_{k != j, infected} exp(x_k * gamma + xi_k))
//
// where x is the treatment vector, eta/xi are individual susceptibility and
// infectiousness coefficients, alpha the exogenous force of infection.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace epidirect {

/// Thrown when an operation is called outside its domain (bad index,
/// inconsistent vector lengths, non-positive rate, ...).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using Allocation = std::vector<std::uint8_t>;

/// Normal(mean, sd) spec for individual coefficients. sd == 0 gives a constant.
struct NormalSpec {
  double mean = 0.0;
  double sd = 0.0;
};

inline constexpr double kDefaultParamClamp = 10.0;

struct ModelParams {
  double alpha = 0.01;
  double beta = 0.0;
  double gamma = 0.0;
  NormalSpec eta{0.0, 0.1};
  NormalSpec xi{0.0, 0.1};

  /// Returns a copy with beta, gamma, the coefficient means and sds clamped to
  /// [-clamp, clamp] (sds to [0, clamp]). Throws if alpha is not positive and
  /// finite or any field is NaN.
  [[nodiscard]] ModelParams validated(double clamp = kDefaultParamClamp) const;

  /// Default simulation values: alpha 0.01, eta and xi ~ N(0, 0.1^2), beta = gamma = 0.
  static ModelParams standard();
};

struct Cluster {
  std::vector<double> eta;
  std::vector<double> xi;
  Allocation treatment;
  double horizon = 10.0;
  Allocation initial_infected;  // empty means nobody infected at t = 0

  [[nodiscard]] std::size_t size() const { return eta.size(); }

  /// Checks vector lengths, binary entries and horizon > 0. An empty
  /// initial_infected vector is normalized to all zeros.
  void validate() const;

  /// Cluster of n individuals with zero coefficients and no treatment.
  static Cluster uniform(std::size_t n, double horizon);
};

struct EpidemicState {
  double time = 0.0;
  Allocation infected;
};

/// Infection hazard of susceptible individual j. Only currently infected
/// individuals other than j contribute infectious pressure.
double hazard(const ModelParams& params, const Cluster& cluster,
              const EpidemicState& state, std::size_t j);

/// exp(beta): the hazard ratio of own treatment vs. no treatment with
/// everything else held fixed.
double susceptibility_hazard_ratio(const ModelParams& params);

/// exp(x * beta + eta), the susceptibility factor of one individual.
inline double susceptibility_weight(double beta, std::uint8_t x, double eta) {
  return std::exp((x != 0 ? beta : 0.0) + eta);
}

/// exp(x * gamma + xi), the infectiousness factor of one individual.
inline double infectiousness_weight(double gamma, std::uint8_t x, double xi) {
  return std::exp((x != 0 ? gamma : 0.0) + xi);
}

void check_binary(std::span<const std::uint8_t> v, const char* what);

}  // namespace epidirect
