#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "epidirect/simulator.hpp"

using namespace epidirect;

namespace {

ModelParams flat(double alpha, double beta = 0.0, double gamma = 0.0) {
  ModelParams p;
  p.alpha = alpha;
  p.beta = beta;
  p.gamma = gamma;
  p.eta = {0.0, 0.0};
  p.xi = {0.0, 0.0};
  return p;
}

}  // namespace

TEST_CASE("waiting time cdf and quantile") {
  CHECK(waiting_time_cdf(1.0, 0.0) == 0.0);
  CHECK(waiting_time_cdf(2.0, std::log(2.0) / 2.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(waiting_time_cdf(0.0, 1.0), PreconditionError);
  CHECK_THROWS_AS(waiting_time_cdf(1.0, -1.0), PreconditionError);
  CHECK_THROWS_AS(waiting_time_quantile(-1.0, 0.5), PreconditionError);

  // Keep rate * w at most 2: beyond that the cdf saturates towards 1 and the
  // inverse is ill-conditioned in double precision.
  RandomStream rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double rate = std::exp(6.0 * rng.uniform01() - 3.0);
    const double w = 2.0 * rng.uniform01() / rate;
    const double back = waiting_time_quantile(rate, waiting_time_cdf(rate, w));
    CHECK(std::abs(back - w) <= 1e-12 * w);
  }
}

TEST_CASE("simulate: single individual survival") {
  // Pr(infected by 10) = 1 - exp(-0.01 * 10).
  const ModelParams p = flat(0.01);
  const Cluster c = Cluster::uniform(1, 10.0);
  RandomStream rng(11);
  const std::size_t runs = 1'000'000;
  std::size_t infected = 0;
  for (std::size_t i = 0; i < runs; ++i) infected += simulate(p, c, rng).infected_by_horizon[0];
  const double expected = 1.0 - std::exp(-0.1);
  const double se = std::sqrt(expected * (1.0 - expected) / static_cast<double>(runs));
  CHECK(std::abs(static_cast<double>(infected) / runs - expected) < 3.0 * se);
}

TEST_CASE("simulate: near-independent arrivals when infectives are inert") {
  // gamma clamped to -10 makes within-cluster transmission negligible, so
  // each individual is infected by the horizon with prob 1 - exp(-alpha e^eta T).
  ModelParams p = flat(0.02, 0.0, -std::numeric_limits<double>::infinity()).validated();
  p.xi = {0.0, 0.0};
  Cluster c = Cluster::uniform(4, 10.0);
  c.treatment = {1, 1, 1, 1};
  c.eta = {0.0, 0.3, -0.3, 0.1};
  RandomStream rng(5);
  const std::size_t runs = 200'000;
  std::vector<std::size_t> counts(4, 0);
  for (std::size_t i = 0; i < runs; ++i) {
    const auto o = simulate(p, c, rng);
    for (std::size_t k = 0; k < 4; ++k) counts[k] += o.infected_by_horizon[k];
  }
  for (std::size_t k = 0; k < 4; ++k) {
    const double q = 1.0 - std::exp(-0.02 * std::exp(c.eta[k]) * 10.0);
    const double se = std::sqrt(q * (1.0 - q) / runs);
    CHECK(std::abs(static_cast<double>(counts[k]) / runs - q) < 3.0 * se + 1e-4);
  }
}

TEST_CASE("simulate: outcome invariants") {
  ModelParams p = flat(0.05, 0.4, 1.2);
  Cluster c = Cluster::uniform(5, 7.5);
  c.treatment = {1, 0, 1, 0, 1};
  c.eta = {0.1, -0.2, 0.0, 0.3, -0.1};
  RandomStream rng(99);
  for (int i = 0; i < 2000; ++i) {
    const auto o = simulate(p, c, rng);
    REQUIRE(o.order.size() == 5);
    std::vector<std::size_t> sorted = o.order;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<std::size_t>{0, 1, 2, 3, 4});
    for (std::size_t pos = 1; pos < o.order.size(); ++pos) {
      CHECK(o.infection_time[o.order[pos]] > o.infection_time[o.order[pos - 1]]);
    }
    for (std::size_t k = 0; k < 5; ++k) {
      CHECK(std::isfinite(o.infection_time[k]));
      CHECK(o.infected_by_horizon[k] == (o.infection_time[k] < c.horizon ? 1 : 0));
    }
  }
}

TEST_CASE("simulate: same seed is bit-identical") {
  ModelParams p = flat(0.01, 0.0, -1.0);
  Cluster c = Cluster::uniform(4, 10.0);
  c.treatment = {1, 0, 0, 1};
  RandomStream a(2024), b(2024);
  for (int i = 0; i < 100; ++i) {
    const auto oa = simulate(p, c, a);
    const auto ob = simulate(p, c, b);
    CHECK(oa.infection_time == ob.infection_time);
    CHECK(oa.order == ob.order);
  }
}

TEST_CASE("simulate: initial infections and errors") {
  const ModelParams p = flat(0.01);
  Cluster c = Cluster::uniform(3, 10.0);
  c.initial_infected = {0, 1, 0};
  RandomStream rng(1);
  const auto o = simulate(p, c, rng);
  CHECK(o.infection_time[1] == 0.0);
  CHECK(o.order.front() == 1);
  CHECK(o.infected_by_horizon[1] == 1);

  c.initial_infected = {1, 1, 1};
  CHECK_THROWS_AS(simulate(p, c, rng), PreconditionError);
  CHECK_THROWS_AS(simulate(p, Cluster{}, rng), PreconditionError);

  ModelParams huge = flat(1e300);
  huge.beta = 0.0;
  Cluster big = Cluster::uniform(3, 10.0);
  big.eta = {700.0, 700.0, 700.0};
  CHECK_THROWS_AS(simulate(huge, big, rng), NonFiniteRate);
}

TEST_CASE("simulate_coupled: preconditions") {
  ModelParams p = flat(0.01, 0.5, -1.0);
  const Cluster c = Cluster::uniform(3, 10.0);
  RandomStream rng(1);
  CHECK_THROWS_AS(simulate_coupled(p, c, {1, 1, 1}, {0, 0, 0}, rng), CouplingRequiresNullBeta);
  p.beta = 0.0;
  CHECK_THROWS_AS(simulate_coupled(p, c, {1, 1}, {0, 0, 0}, rng), PreconditionError);
  CHECK_THROWS_AS(simulate_coupled(p, c, {1, 1, 1}, {0, 3, 0}, rng), PreconditionError);
}

TEST_CASE("simulate_coupled: identical arms when allocations match or gamma is zero") {
  ModelParams p = flat(0.03, 0.0, 1.5);
  Cluster c = Cluster::uniform(4, 10.0);
  c.eta = {0.2, -0.1, 0.0, 0.4};
  c.xi = {0.3, 0.0, -0.2, 0.1};
  RandomStream rng(8);
  for (int i = 0; i < 500; ++i) {
    const auto co = simulate_coupled(p, c, {1, 0, 1, 0}, {1, 0, 1, 0}, rng);
    CHECK(co.outcome_treated.infection_time == co.outcome_control.infection_time);
  }
  p.gamma = 0.0;
  for (int i = 0; i < 500; ++i) {
    const auto co = simulate_coupled(p, c, {1, 1, 1, 1}, {0, 1, 0, 0}, rng);
    CHECK(co.outcome_treated.infection_time == co.outcome_control.infection_time);
    CHECK(co.outcome_treated.infected_by_horizon == co.outcome_control.infected_by_horizon);
  }
}

TEST_CASE("simulate_coupled: shared order and pathwise delay when all treated with gamma < 0") {
  ModelParams p = flat(0.01, 0.0, -1.0);
  Cluster c = Cluster::uniform(5, 10.0);
  c.eta = {0.1, -0.1, 0.05, 0.0, 0.2};
  c.xi = {0.0, 0.1, -0.1, 0.2, 0.0};
  RandomStream rng(21);
  for (int i = 0; i < 2000; ++i) {
    const auto co = simulate_coupled(p, c, Allocation(5, 1), Allocation(5, 0), rng);
    CHECK(co.outcome_treated.order == co.outcome_control.order);
    CHECK(co.shared_order == co.outcome_treated.order);
    CHECK(co.shared_uniforms.size() == 5);
    for (std::size_t k = 0; k < 5; ++k) {
      CHECK(co.outcome_treated.infection_time[k] >= co.outcome_control.infection_time[k]);
    }
  }
}

TEST_CASE("simulate: pair of individuals matches the exact marginal") {
  // Exact value from an independent matrix-exponential computation.
  const double exact = 0.17299965426017205;
  const ModelParams p = flat(0.01);
  const Cluster c = Cluster::uniform(2, 10.0);
  RandomStream rng(404);
  const std::size_t runs = 400'000;
  std::size_t hits0 = 0, hits1 = 0;
  for (std::size_t i = 0; i < runs; ++i) {
    const auto o = simulate(p, c, rng);
    hits0 += o.infected_by_horizon[0];
    hits1 += o.infected_by_horizon[1];
  }
  const double se = std::sqrt(exact * (1.0 - exact) / runs);
  CHECK(std::abs(static_cast<double>(hits0) / runs - exact) < 3.0 * se);
  CHECK(std::abs(static_cast<double>(hits1) / runs - exact) < 3.0 * se);
}
