#include "epidirect/oracle.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>

namespace epidirect {

namespace {

constexpr double kNegativeSlack = 1e-12;
constexpr double kMassTolerance = 1e-10;

std::size_t initial_mask(const Cluster& cluster) {
  std::size_t mask = 0;
  for (std::size_t k = 0; k < cluster.initial_infected.size(); ++k) {
    if (cluster.initial_infected[k] != 0) mask |= std::size_t{1} << k;
  }
  return mask;
}

void require_size(std::size_t n, std::size_t limit, const char* what) {
  if (n > limit) {
    throw PreconditionError(std::string(what) + ": cluster size " + std::to_string(n) +
                            " exceeds limit " + std::to_string(limit));
  }
}

// Clamps tiny negative entries and rejects anything that is not a
// probability vector to within the oracle tolerances.
void finalize_distribution(std::vector<double>& pi) {
  double total = 0.0;
  for (double& v : pi) {
    if (!std::isfinite(v)) throw OracleToleranceError("non-finite state probability");
    if (v < 0.0) {
      if (v < -kNegativeSlack) {
        throw OracleToleranceError("state probability " + std::to_string(v) +
                                   " below tolerance");
      }
      v = 0.0;
    }
    total += v;
  }
  if (std::abs(total - 1.0) > kMassTolerance) {
    throw OracleToleranceError("state probabilities sum to " + std::to_string(total));
  }
}

std::vector<double> solve_expm(const CtmcSpec& ctmc, std::size_t start, double t) {
  const auto s = static_cast<Eigen::Index>(ctmc.states());
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> q(
      ctmc.generator.data(), s, s);
  const Eigen::MatrixXd transition = (q * t).exp();
  std::vector<double> pi(ctmc.states());
  const auto row = static_cast<Eigen::Index>(start);
  for (Eigen::Index k = 0; k < s; ++k) pi[static_cast<std::size_t>(k)] = transition(row, k);
  return pi;
}

struct Transition {
  std::size_t from;
  std::size_t to;
  double rate;
};

std::vector<double> solve_rk4(const CtmcSpec& ctmc, std::size_t start, double t, double step) {
  if (!(step > 0.0)) throw PreconditionError("RK4 step must be positive");
  const std::size_t states = ctmc.states();
  std::vector<Transition> transitions;
  std::vector<double> exit(states, 0.0);
  double fastest = 0.0;
  for (std::size_t from = 0; from < states; ++from) {
    exit[from] = -ctmc.rate(from, from);
    fastest = std::max(fastest, exit[from]);
    for (std::size_t bit = 0; bit < ctmc.n; ++bit) {
      const std::size_t to = from | (std::size_t{1} << bit);
      if (to != from && ctmc.rate(from, to) > 0.0) {
        transitions.push_back({from, to, ctmc.rate(from, to)});
      }
    }
  }

  std::vector<double> pi(states, 0.0);
  pi[start] = 1.0;
  if (t == 0.0) return pi;
  const auto steps = static_cast<std::size_t>(std::ceil(t / step));
  const double h = t / static_cast<double>(steps);
  // Explicit RK4 is stable for h * rate below about 2.78.
  if (h * fastest > 2.5) {
    throw OracleToleranceError("RK4 step too large for the fastest exit rate");
  }

  auto derivative = [&](const std::vector<double>& p, std::vector<double>& dp) {
    for (std::size_t k = 0; k < states; ++k) dp[k] = -exit[k] * p[k];
    for (const auto& tr : transitions) dp[tr.to] += tr.rate * p[tr.from];
  };
  std::vector<double> k1(states), k2(states), k3(states), k4(states), tmp(states);
  for (std::size_t i = 0; i < steps; ++i) {
    derivative(pi, k1);
    for (std::size_t k = 0; k < states; ++k) tmp[k] = pi[k] + 0.5 * h * k1[k];
    derivative(tmp, k2);
    for (std::size_t k = 0; k < states; ++k) tmp[k] = pi[k] + 0.5 * h * k2[k];
    derivative(tmp, k3);
    for (std::size_t k = 0; k < states; ++k) tmp[k] = pi[k] + h * k3[k];
    derivative(tmp, k4);
    for (std::size_t k = 0; k < states; ++k) {
      pi[k] += h / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
    }
  }
  return pi;
}

std::vector<double> marginals_from(const std::vector<double>& pi, std::size_t n) {
  std::vector<double> out(n, 0.0);
  for (std::size_t s = 0; s < pi.size(); ++s) {
    for (std::size_t j = 0; j < n; ++j) {
      if (s >> j & 1U) out[j] += pi[s];
    }
  }
  return out;
}

// Full allocation with x_j inserted at position j into the (n-1)-bit pattern.
Allocation with_individual(std::size_t n, std::size_t j, std::uint8_t x_j,
                           std::size_t others_mask) {
  Allocation x(n, 0);
  std::size_t bit = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (k == j) {
      x[k] = x_j;
    } else {
      x[k] = static_cast<std::uint8_t>(others_mask >> bit & 1U);
      ++bit;
    }
  }
  return x;
}

Allocation others_of(const Allocation& x, std::size_t j) {
  Allocation out;
  out.reserve(x.size() - 1);
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (k != j) out.push_back(x[k]);
  }
  return out;
}

std::size_t mask_of(const Allocation& x) {
  std::size_t mask = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (x[k] != 0) mask |= std::size_t{1} << k;
  }
  return mask;
}

// Lazily computed exact marginals for each full allocation of one cluster.
class MarginalTable {
 public:
  MarginalTable(const ModelParams& params, const Cluster& base, double t,
                const OracleOptions& opts)
      : params_(params), base_(base), t_(t), opts_(opts), table_(std::size_t{1} << base.size()) {}

  double at(const Allocation& x, std::size_t j) {
    auto& slot = table_[mask_of(x)];
    if (!slot) {
      Cluster c = base_;
      c.treatment = x;
      slot = exact_marginals(params_, c, t_, opts_);
    }
    return (*slot)[j];
  }

 private:
  const ModelParams& params_;
  const Cluster& base_;
  double t_;
  OracleOptions opts_;
  std::vector<std::optional<std::vector<double>>> table_;
};

double individual_average(MarginalTable& table, const DesignSpec& design, std::size_t n,
                          std::size_t j, std::uint8_t x_j) {
  double acc = 0.0;
  double mass = 0.0;
  for (std::size_t others = 0; others < (std::size_t{1} << (n - 1)); ++others) {
    const Allocation x = with_individual(n, j, x_j, others);
    const Allocation rest = others_of(x, j);
    const double w = conditional_pmf_others(design, n, j, x_j, rest);
    if (w == 0.0) continue;
    mass += w;
    acc += w * table.at(x, j);
  }
  if (mass == 0.0) {
    throw PreconditionError("conditioning event has zero probability under the design");
  }
  return acc;
}

}  // namespace

CtmcSpec CtmcSpec::build(const ModelParams& params, const Cluster& cluster) {
  cluster.validate();
  const std::size_t n = cluster.size();
  require_size(n, kMaxCtmcSize, "CTMC oracle");
  CtmcSpec spec;
  spec.n = n;
  const std::size_t states = spec.states();
  spec.generator.assign(states * states, 0.0);
  EpidemicState state{0.0, Allocation(n, 0)};
  for (std::size_t from = 0; from < states; ++from) {
    for (std::size_t k = 0; k < n; ++k) state.infected[k] = from >> k & 1U;
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (state.infected[j] != 0) continue;
      const double r = hazard(params, cluster, state, j);
      spec.generator[from * states + (from | std::size_t{1} << j)] = r;
      total += r;
    }
    spec.generator[from * states + from] = -total;
  }
  return spec;
}

std::vector<double> state_distribution(const ModelParams& params, const Cluster& cluster,
                                       double t, const OracleOptions& opts) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw PreconditionError("time must be finite and >= 0");
  const CtmcSpec ctmc = CtmcSpec::build(params, cluster);
  const std::size_t start = initial_mask(cluster);
  std::vector<double> pi = opts.backend == OracleBackend::MatrixExponential
                               ? solve_expm(ctmc, start, t)
                               : solve_rk4(ctmc, start, t, opts.rk4_step);
  finalize_distribution(pi);
  return pi;
}

std::vector<double> exact_marginals(const ModelParams& params, const Cluster& cluster, double t,
                                    const OracleOptions& opts) {
  return marginals_from(state_distribution(params, cluster, t, opts), cluster.size());
}

double exact_individual_average(const ModelParams& params, const Cluster& cluster_base,
                                const DesignSpec& design, std::size_t j, std::uint8_t x_j,
                                double t, const OracleOptions& opts) {
  const std::size_t n = cluster_base.size();
  require_size(n, kMaxEnumerationSize, "individual average");
  if (j >= n) throw PreconditionError("individual index out of range");
  MarginalTable table(params, cluster_base, t, opts);
  return individual_average(table, design, n, j, x_j);
}

DirectEffects exact_de(const ModelParams& params, const Cluster& cluster_base,
                       const DesignSpec& design, double t, const OracleOptions& opts) {
  const std::size_t n = cluster_base.size();
  require_size(n, kMaxEnumerationSize, "direct effect");
  MarginalTable table(params, cluster_base, t, opts);
  DirectEffects out;
  out.individual.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    out.individual[j] =
        individual_average(table, design, n, j, 1) - individual_average(table, design, n, j, 0);
  }
  out.cluster_average = std::accumulate(out.individual.begin(), out.individual.end(), 0.0) /
                        static_cast<double>(n);
  return out;
}

std::uint64_t binomial_exact(std::size_t n, std::size_t k) {
  if (n > 60) throw PreconditionError("binomial_exact supports n <= 60");
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  // r * (n - k + i) is divisible by i at every step.
  for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

bool binomial_identity_holds(std::size_t n, std::size_t m) {
  if (m < 1 || m >= n) throw PreconditionError("identity needs 1 <= m < n");
  return binomial_exact(n - 1, m) * m == (n - m) * binomial_exact(n - 1, m - 1);
}

DesignSpec block_design_for(std::size_t n, std::size_t m) {
  if (m < 1 || m >= n) throw DegenerateBlockDesign("block design needs 1 <= m <= n - 1");
  return DesignSpec{DesignKind::Block, (static_cast<double>(m) + 0.5) / static_cast<double>(n)};
}

DecompositionCheck check_block_decomposition(const ModelParams& params,
                                             const Cluster& cluster_base, std::size_t m,
                                             std::size_t j, double t,
                                             const OracleOptions& opts) {
  const std::size_t n = cluster_base.size();
  require_size(n, kMaxDecompositionSize, "block decomposition");
  if (j >= n) throw PreconditionError("individual index out of range");
  const DesignSpec design = block_design_for(n, m);
  MarginalTable table(params, cluster_base, t, opts);

  DecompositionCheck out{};
  out.direct = individual_average(table, design, n, j, 1) -
               individual_average(table, design, n, j, 0);

  // Sum over z with m-1 treated others, and over partners w of z that add
  // one more treated individual.
  const std::size_t others = n - 1;
  double contrast_sum = 0.0;
  double partner_sum = 0.0;
  double untreated_sum = 0.0;
  for (std::size_t mask = 0; mask < (std::size_t{1} << others); ++mask) {
    const auto ones = static_cast<std::size_t>(std::popcount(mask));
    if (ones == m) untreated_sum += table.at(with_individual(n, j, 0, mask), j);
    if (ones != m - 1) continue;
    const double treated = table.at(with_individual(n, j, 1, mask), j);
    for (std::size_t extra = 0; extra < others; ++extra) {
      if (mask >> extra & 1U) continue;
      const double partner = table.at(with_individual(n, j, 0, mask | std::size_t{1} << extra), j);
      contrast_sum += treated - partner;
      partner_sum += partner;
    }
  }
  out.decomposed = contrast_sum / binomial(others, m - 1) / static_cast<double>(n - m);
  out.residual = std::abs(out.direct - out.decomposed);
  out.partner_residual = std::abs(untreated_sum - partner_sum / static_cast<double>(m));
  return out;
}

}  // namespace epidirect
