#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "epidirect/model.hpp"
#include "epidirect/randomization.hpp"

namespace epidirect {

/// One observed cluster: treatments, infection-by-horizon outcomes, and the
/// cluster arm flag (1 when the whole cluster was assigned treatment).
struct ClusterObservation {
  Allocation x;
  Allocation y;
  std::uint8_t arm = 0;

  /// Builds an observation with the arm flag derived from x (1 iff all treated).
  static ClusterObservation from(Allocation x, Allocation y);
};

struct TrialData {
  std::vector<ClusterObservation> clusters;
  DesignSpec design;

  void validate() const;
};

struct TrialResult {
  double de_hat = std::numeric_limits<double>::quiet_NaN();
  std::size_t n_clusters_used = 0;
  bool degenerate = true;

  static TrialResult undefined(std::size_t n_clusters) { return {kNaN, n_clusters, true}; }

 private:
  static constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
};

/// Inverse-probability weighted contrast, averaged per cluster then over clusters.
TrialResult de_hat_bernoulli(const TrialData& data, double p);

/// Mean over clusters of (treated-arm attack rate - untreated-arm attack rate).
TrialResult de_hat_block(const TrialData& data);

/// Mean attack rate of treated clusters minus that of untreated clusters.
TrialResult de_hat_cluster(const TrialData& data);

/// Dispatches on data.design.kind.
TrialResult de_hat(const TrialData& data);

}  // namespace epidirect
