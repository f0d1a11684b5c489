#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstddef>
#include <vector>

#include "pmcmc/resampling.hpp"
#include "pmcmc/rng.hpp"

using namespace pmcmc;

namespace {

std::vector<std::size_t> tally(const std::vector<std::size_t>& ancestors,
                               std::size_t n_weights) {
  std::vector<std::size_t> counts(n_weights, 0);
  for (auto a : ancestors) {
    REQUIRE(a < n_weights);
    ++counts[a];
  }
  return counts;
}

}  // namespace

TEST_CASE("systematic resampling with uniform weights is the identity",
          "[resampling]") {
  const std::size_t n = 64;
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  std::vector<std::size_t> anc(n);
  RngStream rng(8);
  systematic_resample(w, anc, rng);
  const auto counts = tally(anc, n);
  for (auto c : counts) REQUIRE(c == 1);
}

TEST_CASE("degenerate weight pins every ancestor", "[resampling]") {
  std::vector<double> w = {1.0, 0.0, 0.0, 0.0, 0.0};
  std::vector<std::size_t> anc(5);
  RngStream rng(9);
  SECTION("multinomial") {
    multinomial_resample(w, anc, rng);
    for (auto a : anc) REQUIRE(a == 0);
  }
  SECTION("systematic") {
    systematic_resample(w, anc, rng);
    for (auto a : anc) REQUIRE(a == 0);
  }
}

TEST_CASE("multinomial counts match expectations", "[resampling]") {
  const std::vector<double> w = {0.5, 0.3, 0.2};
  const std::size_t n = 1000;
  const int reps = 200;
  std::vector<double> mean_counts(3, 0.0);
  RngStream rng(123);
  std::vector<std::size_t> anc(n);
  for (int r = 0; r < reps; ++r) {
    multinomial_resample(w, anc, rng);
    const auto counts = tally(anc, 3);
    for (int i = 0; i < 3; ++i) {
      mean_counts[i] += static_cast<double>(counts[i]) / reps;
    }
  }
  REQUIRE(std::abs(mean_counts[0] - 500.0) < 25.0);
  REQUIRE(std::abs(mean_counts[1] - 300.0) < 15.0);
  REQUIRE(std::abs(mean_counts[2] - 200.0) < 10.0);
}

TEST_CASE("systematic counts stay within one of their expectation",
          "[resampling]") {
  const std::vector<double> w = {0.5, 0.3, 0.2};
  const std::size_t n = 1000;
  std::vector<std::size_t> anc(n);
  RngStream rng(77);
  systematic_resample(w, anc, rng);
  const auto counts = tally(anc, 3);
  REQUIRE(std::abs(static_cast<double>(counts[0]) - 500.0) <= 1.0);
  REQUIRE(std::abs(static_cast<double>(counts[1]) - 300.0) <= 1.0);
  REQUIRE(std::abs(static_cast<double>(counts[2]) - 200.0) <= 1.0);
}

TEST_CASE("resample dispatches on the scheme and is deterministic",
          "[resampling]") {
  std::vector<double> w = {0.25, 0.25, 0.5};
  std::vector<std::size_t> a(10), b(10);
  RngStream r1(5), r2(5);
  resample(w, a, Resampling::systematic, r1);
  systematic_resample(w, b, r2);
  REQUIRE(a == b);

  RngStream r3(5), r4(5);
  resample(w, a, Resampling::multinomial, r3);
  multinomial_resample(w, b, r4);
  REQUIRE(a == b);
}

TEST_CASE("negative or vanishing weights are rejected", "[resampling]") {
  std::vector<std::size_t> anc(4);
  RngStream rng(1);
  std::vector<double> negative = {0.5, -0.1, 0.6};
  std::vector<double> zero = {0.0, 0.0, 0.0};
  REQUIRE_THROWS_AS(multinomial_resample(negative, anc, rng),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(systematic_resample(negative, anc, rng),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(multinomial_resample(zero, anc, rng),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(systematic_resample(zero, anc, rng),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(CategoricalSampler(negative), std::invalid_argument);
  REQUIRE_THROWS_AS(CategoricalSampler(zero), std::invalid_argument);
}

TEST_CASE("categorical sampler on unnormalized weights", "[resampling]") {
  std::vector<double> w = {0.0, 2.0, 0.0};
  CategoricalSampler cat(w);
  REQUIRE(cat.total() == 2.0);
  RngStream rng(44);
  for (int i = 0; i < 100; ++i) {
    REQUIRE(cat.draw(rng) == 1);
  }
}

TEST_CASE("categorical draw frequencies", "[resampling]") {
  std::vector<double> w = {1.0, 3.0};  // P(1) = 0.75
  CategoricalSampler cat(w);
  RngStream rng(2025);
  const int n = 40000;
  int ones = 0;
  for (int i = 0; i < n; ++i) ones += cat.draw(rng) == 1 ? 1 : 0;
  const double p = static_cast<double>(ones) / n;
  const double se = std::sqrt(0.75 * 0.25 / n);
  REQUIRE(std::abs(p - 0.75) < 3.0 * se);
}
