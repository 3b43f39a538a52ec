#include "epidirect/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace epidirect {

namespace {

double clamp_symmetric(double v, double bound) {
  return std::clamp(v, -bound, bound);
}

void require_not_nan(double v, const char* what) {
  if (std::isnan(v)) throw PreconditionError(std::string(what) + " is NaN");
}

}  // namespace

ModelParams ModelParams::validated(double clamp) const {
  if (!(clamp > 0.0)) throw PreconditionError("parameter clamp must be positive");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw PreconditionError("alpha must be positive and finite");
  }
  for (auto [v, name] : {std::pair{beta, "beta"}, {gamma, "gamma"}, {eta.mean, "eta.mean"},
                         {eta.sd, "eta.sd"}, {xi.mean, "xi.mean"}, {xi.sd, "xi.sd"}}) {
    require_not_nan(v, name);
  }
  if (eta.sd < 0.0 || xi.sd < 0.0) throw PreconditionError("coefficient sd must be >= 0");

  ModelParams out = *this;
  out.beta = clamp_symmetric(beta, clamp);
  out.gamma = clamp_symmetric(gamma, clamp);
  out.eta = {clamp_symmetric(eta.mean, clamp), std::min(eta.sd, clamp)};
  out.xi = {clamp_symmetric(xi.mean, clamp), std::min(xi.sd, clamp)};
  return out;
}

ModelParams ModelParams::standard() { return ModelParams{}; }

void check_binary(std::span<const std::uint8_t> v, const char* what) {
  for (auto b : v) {
    if (b > 1) throw PreconditionError(std::string(what) + " must be binary");
  }
}

void Cluster::validate() const {
  const std::size_t n = eta.size();
  if (n == 0) throw PreconditionError("cluster is empty");
  if (xi.size() != n || treatment.size() != n) {
    throw PreconditionError("cluster vectors differ in length");
  }
  if (!initial_infected.empty() && initial_infected.size() != n) {
    throw PreconditionError("initial_infected length differs from cluster size");
  }
  if (!(horizon > 0.0)) throw PreconditionError("horizon must be positive");
  for (std::size_t k = 0; k < n; ++k) {
    if (!std::isfinite(eta[k]) || !std::isfinite(xi[k])) {
      throw PreconditionError("individual coefficients must be finite");
    }
  }
  check_binary(treatment, "treatment");
  check_binary(initial_infected, "initial_infected");
}

Cluster Cluster::uniform(std::size_t n, double horizon) {
  return Cluster{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), Allocation(n, 0),
                 horizon, {}};
}

double hazard(const ModelParams& params, const Cluster& cluster, const EpidemicState& state,
              std::size_t j) {
  const std::size_t n = cluster.size();
  if (j >= n) throw PreconditionError("individual index out of range");
  if (state.infected.size() != n) throw PreconditionError("state size differs from cluster size");
  if (state.infected[j] != 0) throw PreconditionError("individual is already infected");

  double pressure = params.alpha;
  for (std::size_t k = 0; k < n; ++k) {
    if (k == j || state.infected[k] == 0) continue;
    pressure += infectiousness_weight(params.gamma, cluster.treatment[k], cluster.xi[k]);
  }
  return susceptibility_weight(params.beta, cluster.treatment[j], cluster.eta[j]) * pressure;
}

double susceptibility_hazard_ratio(const ModelParams& params) { return std::exp(params.beta); }

}  // namespace epidirect
