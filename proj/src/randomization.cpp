#include "epidirect/randomization.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace epidirect {

std::string_view to_string(DesignKind kind) {
  switch (kind) {
    case DesignKind::Bernoulli: return "bernoulli";
    case DesignKind::Block: return "block";
    case DesignKind::Cluster: return "cluster";
  }
  return "unknown";
}

DesignKind design_kind_from_string(std::string_view name) {
  if (name == "bernoulli") return DesignKind::Bernoulli;
  if (name == "block") return DesignKind::Block;
  if (name == "cluster") return DesignKind::Cluster;
  throw PreconditionError("unknown design '" + std::string(name) + "'");
}

void DesignSpec::validate() const {
  if (!(p > 0.0 && p < 1.0)) throw PreconditionError("design probability must lie in (0, 1)");
}

std::size_t block_treated_count(const DesignSpec& design, std::size_t n) {
  const auto m = static_cast<std::size_t>(std::floor(design.p * static_cast<double>(n)));
  if (m == 0 || m >= n) {
    throw DegenerateBlockDesign("block design treats " + std::to_string(m) + " of " +
                                std::to_string(n) + "; need 1 <= m <= n - 1");
  }
  return m;
}

double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) {
    r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  }
  return std::round(r);
}

Allocation assign(const DesignSpec& design, std::size_t n, RandomStream& rng) {
  design.validate();
  if (n == 0) throw PreconditionError("cluster size must be >= 1");
  Allocation x(n, 0);
  switch (design.kind) {
    case DesignKind::Bernoulli:
      for (auto& b : x) b = rng.bernoulli(design.p) ? 1 : 0;
      break;
    case DesignKind::Block: {
      const std::size_t m = block_treated_count(design, n);
      // Partial Fisher-Yates: the first m slots of a random permutation.
      std::vector<std::size_t> idx(n);
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      for (std::size_t i = 0; i < m; ++i) {
        const std::size_t r = i + rng.below(n - i);
        std::swap(idx[i], idx[r]);
        x[idx[i]] = 1;
      }
      break;
    }
    case DesignKind::Cluster:
      std::fill(x.begin(), x.end(), rng.bernoulli(design.p) ? 1 : 0);
      break;
  }
  return x;
}

double allocation_pmf(const DesignSpec& design, std::span<const std::uint8_t> x) {
  design.validate();
  check_binary(x, "allocation");
  const std::size_t n = x.size();
  if (n == 0) throw PreconditionError("cluster size must be >= 1");
  const auto treated = static_cast<std::size_t>(std::count(x.begin(), x.end(), 1));
  switch (design.kind) {
    case DesignKind::Bernoulli:
      return std::pow(design.p, static_cast<double>(treated)) *
             std::pow(1.0 - design.p, static_cast<double>(n - treated));
    case DesignKind::Block: {
      const std::size_t m = block_treated_count(design, n);
      return treated == m ? 1.0 / binomial(n, m) : 0.0;
    }
    case DesignKind::Cluster:
      if (treated == n) return design.p;
      if (treated == 0) return 1.0 - design.p;
      return 0.0;
  }
  return 0.0;
}

double conditional_pmf_others(const DesignSpec& design, std::size_t n, std::size_t j,
                              std::uint8_t x_j, std::span<const std::uint8_t> x_others) {
  design.validate();
  if (n == 0 || j >= n) throw PreconditionError("individual index out of range");
  if (x_others.size() != n - 1) throw PreconditionError("x_others must have n - 1 entries");
  if (x_j > 1) throw PreconditionError("x_j must be binary");
  check_binary(x_others, "x_others");
  const auto treated = static_cast<std::size_t>(std::count(x_others.begin(), x_others.end(), 1));
  const std::size_t others = n - 1;
  switch (design.kind) {
    case DesignKind::Bernoulli:
      return std::pow(design.p, static_cast<double>(treated)) *
             std::pow(1.0 - design.p, static_cast<double>(others - treated));
    case DesignKind::Block: {
      const std::size_t m = block_treated_count(design, n);
      const std::size_t want = m - x_j;
      return treated == want ? 1.0 / binomial(others, want) : 0.0;
    }
    case DesignKind::Cluster:
      if (x_j == 1) return treated == others ? 1.0 : 0.0;
      return treated == 0 ? 1.0 : 0.0;
  }
  return 0.0;
}

double marginal_treatment_probability(const DesignSpec& design, std::size_t n) {
  design.validate();
  if (design.kind == DesignKind::Block) {
    return static_cast<double>(block_treated_count(design, n)) / static_cast<double>(n);
  }
  return design.p;
}

}  // namespace epidirect
