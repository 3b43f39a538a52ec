#include "epidirect/estimators.hpp"

#include <algorithm>

namespace epidirect {

ClusterObservation ClusterObservation::from(Allocation x, Allocation y) {
  const bool all_treated =
      !x.empty() && std::all_of(x.begin(), x.end(), [](std::uint8_t b) { return b == 1; });
  ClusterObservation obs{std::move(x), std::move(y), 0};
  obs.arm = all_treated ? 1 : 0;
  return obs;
}

void TrialData::validate() const {
  for (const auto& c : clusters) {
    if (c.x.empty()) throw PreconditionError("observed cluster is empty");
    if (c.x.size() != c.y.size()) throw PreconditionError("treatment/outcome length mismatch");
    check_binary(c.x, "treatment");
    check_binary(c.y, "outcome");
    if (design.kind == DesignKind::Cluster) {
      const auto treated = std::count(c.x.begin(), c.x.end(), 1);
      const bool uniform = treated == 0 || static_cast<std::size_t>(treated) == c.x.size();
      if (!uniform) throw PreconditionError("cluster design requires all-or-none treatment");
      if ((c.arm == 1) != (static_cast<std::size_t>(treated) == c.x.size())) {
        throw PreconditionError("cluster arm flag disagrees with treatment vector");
      }
    }
  }
}

TrialResult de_hat_bernoulli(const TrialData& data, double p) {
  if (!(p > 0.0 && p < 1.0)) throw PreconditionError("p must lie in (0, 1)");
  data.validate();
  const std::size_t N = data.clusters.size();
  if (N == 0) return TrialResult::undefined(0);
  double total = 0.0;
  for (const auto& c : data.clusters) {
    double s = 0.0;
    for (std::size_t j = 0; j < c.x.size(); ++j) {
      if (c.y[j] == 0) continue;
      s += c.x[j] == 1 ? 1.0 / p : -1.0 / (1.0 - p);
    }
    total += s / static_cast<double>(c.x.size());
  }
  return {total / static_cast<double>(N), N, false};
}

TrialResult de_hat_block(const TrialData& data) {
  data.validate();
  const std::size_t N = data.clusters.size();
  if (N == 0) return TrialResult::undefined(0);
  double total = 0.0;
  for (const auto& c : data.clusters) {
    double treated = 0.0, treated_inf = 0.0, control = 0.0, control_inf = 0.0;
    for (std::size_t j = 0; j < c.x.size(); ++j) {
      if (c.x[j] == 1) {
        treated += 1.0;
        treated_inf += c.y[j];
      } else {
        control += 1.0;
        control_inf += c.y[j];
      }
    }
    if (treated == 0.0 || control == 0.0) return TrialResult::undefined(N);
    total += treated_inf / treated - control_inf / control;
  }
  return {total / static_cast<double>(N), N, false};
}

TrialResult de_hat_cluster(const TrialData& data) {
  data.validate();
  const std::size_t N = data.clusters.size();
  double treated = 0.0, treated_rate = 0.0, control = 0.0, control_rate = 0.0;
  for (const auto& c : data.clusters) {
    const double infected = static_cast<double>(std::count(c.y.begin(), c.y.end(), 1));
    const double rate = infected / static_cast<double>(c.y.size());
    if (c.arm == 1) {
      treated += 1.0;
      treated_rate += rate;
    } else {
      control += 1.0;
      control_rate += rate;
    }
  }
  if (treated == 0.0 || control == 0.0) return TrialResult::undefined(N);
  return {treated_rate / treated - control_rate / control, N, false};
}

TrialResult de_hat(const TrialData& data) {
  switch (data.design.kind) {
    case DesignKind::Bernoulli: return de_hat_bernoulli(data, data.design.p);
    case DesignKind::Block: return de_hat_block(data);
    case DesignKind::Cluster: return de_hat_cluster(data);
  }
  throw PreconditionError("unknown design");
}

}  // namespace epidirect
