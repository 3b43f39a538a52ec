#pragma once

// Exact infection probabilities for small clusters.
//
// The epidemic in a cluster of n individuals is a continuous-time Markov
// chain on the 2^n subsets of infected individuals (bitmask-indexed). From
// state S the chain jumps to S | {j} at the hazard of j given S. The chain is
// monotone: every transition adds exactly one infected individual, and the
// full set is absorbing.

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "epidirect/model.hpp"
#include "epidirect/randomization.hpp"

namespace epidirect {

inline constexpr std::size_t kMaxCtmcSize = 12;
inline constexpr std::size_t kMaxEnumerationSize = 10;
inline constexpr std::size_t kMaxDecompositionSize = 8;

/// Transient solution failed its probability-vector checks.
class OracleToleranceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class OracleBackend {
  MatrixExponential,  // scaling-and-squaring Pade exponential of the dense generator
  RungeKutta4,        // fixed-step RK4 on the forward equations
};

struct CtmcSpec {
  std::size_t n = 0;
  std::vector<double> generator;  // dense, row-major, states() x states()

  [[nodiscard]] std::size_t states() const { return std::size_t{1} << n; }
  [[nodiscard]] double rate(std::size_t from, std::size_t to) const {
    return generator[from * states() + to];
  }

  /// Generator for the cluster's own treatment vector.
  static CtmcSpec build(const ModelParams& params, const Cluster& cluster);
};

struct OracleOptions {
  OracleBackend backend = OracleBackend::MatrixExponential;
  double rk4_step = 1e-4;
};

/// State distribution at time t, starting from the cluster's initial infections.
std::vector<double> state_distribution(const ModelParams& params, const Cluster& cluster,
                                       double t, const OracleOptions& opts = {});

/// Pr(individual j infected by t) for every j, under the cluster's treatment.
std::vector<double> exact_marginals(const ModelParams& params, const Cluster& cluster, double t,
                                    const OracleOptions& opts = {});

/// Individual average potential outcome: exact_marginals[j] under (x_j, others)
/// averaged over the design's conditional distribution of the others' treatments.
double exact_individual_average(const ModelParams& params, const Cluster& cluster_base,
                                const DesignSpec& design, std::size_t j, std::uint8_t x_j,
                                double t, const OracleOptions& opts = {});

struct DirectEffects {
  std::vector<double> individual;  // DE_ij
  double cluster_average = 0.0;    // DE_i
};

/// Individual and cluster average direct effects for fixed coefficients.
DirectEffects exact_de(const ModelParams& params, const Cluster& cluster_base,
                       const DesignSpec& design, double t, const OracleOptions& opts = {});

struct DecompositionCheck {
  double direct;             // DE_ij from the design's conditional averages
  double decomposed;         // DE_ij as a sum of (1, z) vs (0, w) partner contrasts
  double residual;           // |direct - decomposed|
  double partner_residual;   // residual of regrouping the untreated sum by partners
};

/// Evaluates both sides of the partner decomposition of the block-design
/// direct effect for individual j with m of n treated.
DecompositionCheck check_block_decomposition(const ModelParams& params,
                                             const Cluster& cluster_base, std::size_t m,
                                             std::size_t j, double t,
                                             const OracleOptions& opts = {});

/// Exact integer check of C(n-1, m) * m == (n - m) * C(n-1, m-1).
bool binomial_identity_holds(std::size_t n, std::size_t m);

/// Exact n choose k in 64-bit integers (n <= 60).
std::uint64_t binomial_exact(std::size_t n, std::size_t k);

/// Block design with exactly m of n treated.
DesignSpec block_design_for(std::size_t n, std::size_t m);

}  // namespace epidirect
