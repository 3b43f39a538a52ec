#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "epidirect/randomization.hpp"

using namespace epidirect;

namespace {

Allocation from_mask(std::size_t mask, std::size_t n) {
  Allocation x(n);
  for (std::size_t k = 0; k < n; ++k) x[k] = static_cast<std::uint8_t>(mask >> k & 1U);
  return x;
}

}  // namespace

TEST_CASE("assign: cluster design is all-or-none") {
  RandomStream rng(1);
  const DesignSpec d{DesignKind::Cluster, 0.3};
  for (std::size_t n = 1; n <= 6; ++n) {
    for (int i = 0; i < 200; ++i) {
      const Allocation x = assign(d, n, rng);
      const auto treated = std::count(x.begin(), x.end(), 1);
      CHECK((treated == 0 || static_cast<std::size_t>(treated) == n));
    }
  }
}

TEST_CASE("assign: block n=4 p=0.5 is uniform over the six subsets") {
  RandomStream rng(2);
  const DesignSpec d{DesignKind::Block, 0.5};
  std::map<Allocation, std::size_t> freq;
  const std::size_t draws = 60'000;
  for (std::size_t i = 0; i < draws; ++i) {
    const Allocation x = assign(d, 4, rng);
    REQUIRE(std::count(x.begin(), x.end(), 1) == 2);
    ++freq[x];
  }
  CHECK(freq.size() == 6);
  const double p = 1.0 / 6.0;
  const double sigma = std::sqrt(p * (1.0 - p) / draws);
  for (const auto& [x, count] : freq) {
    CHECK(std::abs(static_cast<double>(count) / draws - p) < 3.0 * sigma);
  }
}

TEST_CASE("assign: block always treats floor(p n)") {
  RandomStream rng(3);
  for (double p : {0.25, 0.5, 0.7}) {
    for (std::size_t n = 2; n <= 12; ++n) {
      const DesignSpec d{DesignKind::Block, p};
      const auto m = static_cast<std::size_t>(std::floor(p * static_cast<double>(n)));
      if (m == 0 || m == n) {
        CHECK_THROWS_AS(assign(d, n, rng), DegenerateBlockDesign);
        continue;
      }
      for (int i = 0; i < 50; ++i) {
        const Allocation x = assign(d, n, rng);
        CHECK(static_cast<std::size_t>(std::count(x.begin(), x.end(), 1)) == m);
      }
    }
  }
}

TEST_CASE("assign: rejects invalid designs") {
  RandomStream rng(4);
  CHECK_THROWS_AS(assign({DesignKind::Bernoulli, 0.0}, 3, rng), PreconditionError);
  CHECK_THROWS_AS(assign({DesignKind::Bernoulli, 1.0}, 3, rng), PreconditionError);
  CHECK_THROWS_AS(assign({DesignKind::Bernoulli, 0.5}, 0, rng), PreconditionError);
  CHECK_THROWS_AS(assign({DesignKind::Block, 0.5}, 1, rng), DegenerateBlockDesign);
}

TEST_CASE("allocation_pmf: worked values") {
  const DesignSpec bern{DesignKind::Bernoulli, 0.5};
  for (std::size_t mask = 0; mask < 8; ++mask) {
    CHECK(allocation_pmf(bern, from_mask(mask, 3)) == doctest::Approx(0.125));
  }
  const DesignSpec block{DesignKind::Block, 0.5};
  CHECK(allocation_pmf(block, Allocation{1, 0, 1, 0}) == doctest::Approx(1.0 / 6.0));
  CHECK(allocation_pmf(block, Allocation{1, 0, 0, 0}) == 0.0);
  const DesignSpec cl{DesignKind::Cluster, 0.3};
  CHECK(allocation_pmf(cl, Allocation{1, 1, 1}) == doctest::Approx(0.3));
  CHECK(allocation_pmf(cl, Allocation{0, 0, 0}) == doctest::Approx(0.7));
  CHECK(allocation_pmf(cl, Allocation{1, 0, 1}) == 0.0);
}

TEST_CASE("allocation_pmf sums to one for n <= 10") {
  for (DesignSpec d : {DesignSpec{DesignKind::Bernoulli, 0.37}, DesignSpec{DesignKind::Block, 0.5},
                       DesignSpec{DesignKind::Cluster, 0.62}}) {
    for (std::size_t n = 2; n <= 10; ++n) {
      double total = 0.0;
      for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        total += allocation_pmf(d, from_mask(mask, n));
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("conditional_pmf_others: worked values") {
  const DesignSpec bern{DesignKind::Bernoulli, 0.3};
  for (std::size_t mask = 0; mask < 4; ++mask) {
    const Allocation rest = from_mask(mask, 2);
    const double uncond = allocation_pmf(bern, rest);
    CHECK(conditional_pmf_others(bern, 3, 0, 1, rest) == doctest::Approx(uncond));
    CHECK(conditional_pmf_others(bern, 3, 0, 0, rest) == doctest::Approx(uncond));
  }
  const DesignSpec block{DesignKind::Block, 0.4};  // n = 3 -> m = 1
  CHECK(conditional_pmf_others(block, 3, 1, 1, Allocation{0, 0}) == 1.0);
  CHECK(conditional_pmf_others(block, 3, 1, 0, Allocation{1, 0}) == doctest::Approx(0.5));
  CHECK(conditional_pmf_others(block, 3, 1, 0, Allocation{0, 1}) == doctest::Approx(0.5));
  CHECK(conditional_pmf_others(block, 3, 1, 0, Allocation{0, 0}) == 0.0);

  const DesignSpec cl{DesignKind::Cluster, 0.5};
  CHECK(conditional_pmf_others(cl, 3, 2, 1, Allocation{1, 0}) == 0.0);
  CHECK(conditional_pmf_others(cl, 3, 2, 1, Allocation{1, 1}) == 1.0);
  CHECK(conditional_pmf_others(cl, 3, 2, 0, Allocation{0, 0}) == 1.0);
}

TEST_CASE("conditional_pmf_others sums to one") {
  for (DesignSpec d : {DesignSpec{DesignKind::Bernoulli, 0.21}, DesignSpec{DesignKind::Block, 0.5},
                       DesignSpec{DesignKind::Cluster, 0.5}}) {
    for (std::size_t n = 2; n <= 9; ++n) {
      for (std::size_t j : {std::size_t{0}, n - 1}) {
        for (std::uint8_t xj : {0, 1}) {
          double total = 0.0;
          for (std::size_t mask = 0; mask < (std::size_t{1} << (n - 1)); ++mask) {
            total += conditional_pmf_others(d, n, j, xj, from_mask(mask, n - 1));
          }
          CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
        }
      }
    }
  }
}

TEST_CASE("assign frequencies match allocation_pmf") {
  RandomStream rng(5);
  for (DesignSpec d : {DesignSpec{DesignKind::Bernoulli, 0.3}, DesignSpec{DesignKind::Block, 0.5},
                       DesignSpec{DesignKind::Cluster, 0.4}}) {
    const std::size_t n = 4, draws = 80'000;
    std::vector<std::size_t> counts(16, 0);
    for (std::size_t i = 0; i < draws; ++i) {
      const Allocation x = assign(d, n, rng);
      std::size_t mask = 0;
      for (std::size_t k = 0; k < n; ++k) mask |= static_cast<std::size_t>(x[k]) << k;
      ++counts[mask];
    }
    double chi2 = 0.0;
    std::size_t cells = 0;
    for (std::size_t mask = 0; mask < 16; ++mask) {
      const double expected = allocation_pmf(d, from_mask(mask, n)) * draws;
      if (expected == 0.0) {
        CHECK(counts[mask] == 0);
        continue;
      }
      ++cells;
      chi2 += (counts[mask] - expected) * (counts[mask] - expected) / expected;
    }
    // 99.9% chi-square quantile for 15 dof is 37.7.
    CHECK(chi2 < 37.7);
    CHECK(cells >= 2);
  }
}

TEST_CASE("binomial and design names") {
  CHECK(binomial(4, 2) == 6.0);
  CHECK(binomial(20, 10) == 184756.0);
  CHECK(binomial(3, 5) == 0.0);
  CHECK(design_kind_from_string("block") == DesignKind::Block);
  CHECK(to_string(DesignKind::Cluster) == "cluster");
  CHECK_THROWS_AS(design_kind_from_string("stepped"), PreconditionError);
}
