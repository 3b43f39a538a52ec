#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>

#include "epidirect/model.hpp"
#include "epidirect/rng.hpp"

namespace epidirect {

enum class DesignKind { Bernoulli, Block, Cluster };

std::string_view to_string(DesignKind kind);
DesignKind design_kind_from_string(std::string_view name);

/// Treatment assignment design. `p` is the individual (Bernoulli) or cluster
/// treatment probability, or the treated fraction for block designs, where
/// exactly floor(p * n) members of each cluster are treated.
struct DesignSpec {
  DesignKind kind = DesignKind::Bernoulli;
  double p = 0.5;

  void validate() const;
};

/// Block design whose treated count floor(p * n) is 0 or n for some cluster.
class DegenerateBlockDesign : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

/// Number of treated individuals in a block-randomized cluster of size n.
/// Throws DegenerateBlockDesign unless 1 <= floor(p * n) <= n - 1.
std::size_t block_treated_count(const DesignSpec& design, std::size_t n);

Allocation assign(const DesignSpec& design, std::size_t n, RandomStream& rng);

/// Exact probability of the full allocation x under the design.
double allocation_pmf(const DesignSpec& design, std::span<const std::uint8_t> x);

/// Pr(X_others = x_others | X_j = x_j) for a cluster of size n; x_others lists
/// the other n - 1 individuals in index order with j removed. Returns 0 when
/// the pattern is incompatible with x_j.
double conditional_pmf_others(const DesignSpec& design, std::size_t n, std::size_t j,
                              std::uint8_t x_j, std::span<const std::uint8_t> x_others);

/// Marginal Pr(X_j = 1) under the design for a cluster of size n.
double marginal_treatment_probability(const DesignSpec& design, std::size_t n);

/// n choose k as a double (exact for the small arguments used here).
double binomial(std::size_t n, std::size_t k);

}  // namespace epidirect
