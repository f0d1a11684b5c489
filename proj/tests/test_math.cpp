#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "pmcmc/math.hpp"

using namespace pmcmc;

TEST_CASE("log_normal_pdf matches the closed form", "[math]") {
  const double v = log_normal_pdf(0.0, 0.0, 1.0);
  REQUIRE_THAT(v, Catch::Matchers::WithinAbs(
                      -0.5 * std::log(2.0 * std::numbers::pi), 1e-15));

  const double w = log_normal_pdf(1.3, 0.4, 2.0);
  const double z = (1.3 - 0.4) / 2.0;
  const double expect =
      -0.5 * z * z - std::log(2.0) - 0.5 * std::log(2.0 * std::numbers::pi);
  REQUIRE_THAT(w, Catch::Matchers::WithinAbs(expect, 1e-14));
}

TEST_CASE("normal_cdf reference values", "[math]") {
  REQUIRE_THAT(normal_cdf(0.0, 0.0, 1.0),
               Catch::Matchers::WithinAbs(0.5, 1e-15));
  REQUIRE_THAT(normal_cdf(1.959963984540054, 0.0, 1.0),
               Catch::Matchers::WithinAbs(0.975, 1e-9));
  REQUIRE_THAT(normal_cdf(-1.0, 0.0, 1.0) + normal_cdf(1.0, 0.0, 1.0),
               Catch::Matchers::WithinAbs(1.0, 1e-15));
  // location/scale reduce to the standardized argument
  REQUIRE_THAT(normal_cdf(3.0, 1.0, 2.0),
               Catch::Matchers::WithinAbs(normal_cdf(1.0, 0.0, 1.0), 1e-15));
}

TEST_CASE("logsumexp", "[math]") {
  SECTION("all -inf stays -inf") {
    std::vector<double> v = {neg_inf, neg_inf, neg_inf};
    REQUIRE(logsumexp(v) == neg_inf);
  }
  SECTION("single element is the identity") {
    std::vector<double> v = {-3.7};
    REQUIRE(logsumexp(v) == -3.7);
  }
  SECTION("small exact case") {
    std::vector<double> v = {std::log(1.0), std::log(2.0), std::log(3.0)};
    REQUIRE_THAT(logsumexp(v),
                 Catch::Matchers::WithinAbs(std::log(6.0), 1e-14));
  }
  SECTION("max subtraction survives huge inputs") {
    std::vector<double> v = {1000.0, 1000.0};
    REQUIRE_THAT(logsumexp(v),
                 Catch::Matchers::WithinAbs(1000.0 + std::log(2.0), 1e-12));
  }
  SECTION("-inf entries are ignored") {
    std::vector<double> v = {neg_inf, 0.0, neg_inf};
    REQUIRE_THAT(logsumexp(v), Catch::Matchers::WithinAbs(0.0, 1e-15));
  }
}

TEST_CASE("log_mean_exp", "[math]") {
  std::vector<double> v = {std::log(2.0), std::log(4.0)};
  REQUIRE_THAT(log_mean_exp(v),
               Catch::Matchers::WithinAbs(std::log(3.0), 1e-14));
  std::vector<double> dead = {neg_inf, neg_inf};
  REQUIRE(log_mean_exp(dead) == neg_inf);
}

TEST_CASE("normalize_log_weights", "[math]") {
  SECTION("normalizes to a probability vector") {
    std::vector<double> lw = {0.0, std::log(3.0), std::log(6.0)};
    std::vector<double> out(3);
    REQUIRE(normalize_log_weights(lw, out));
    REQUIRE_THAT(out[0], Catch::Matchers::WithinAbs(0.1, 1e-14));
    REQUIRE_THAT(out[1], Catch::Matchers::WithinAbs(0.3, 1e-14));
    REQUIRE_THAT(out[2], Catch::Matchers::WithinAbs(0.6, 1e-14));
    REQUIRE_THAT(out[0] + out[1] + out[2],
                 Catch::Matchers::WithinAbs(1.0, 1e-12));
  }
  SECTION("huge magnitudes are handled by max subtraction") {
    std::vector<double> lw = {-1000.0, -1000.0, neg_inf};
    std::vector<double> out(3);
    REQUIRE(normalize_log_weights(lw, out));
    REQUIRE_THAT(out[0], Catch::Matchers::WithinAbs(0.5, 1e-14));
    REQUIRE_THAT(out[1], Catch::Matchers::WithinAbs(0.5, 1e-14));
    REQUIRE(out[2] == 0.0);
  }
  SECTION("all -inf reports failure") {
    std::vector<double> lw = {neg_inf, neg_inf};
    std::vector<double> out(2);
    REQUIRE_FALSE(normalize_log_weights(lw, out));
  }
}

TEST_CASE("effective sample size", "[math]") {
  SECTION("uniform weights give N") {
    std::vector<double> w(10, 0.1);
    REQUIRE_THAT(effective_sample_size(w),
                 Catch::Matchers::WithinAbs(10.0, 1e-12));
  }
  SECTION("one-hot weights give 1") {
    std::vector<double> w = {0.0, 1.0, 0.0, 0.0};
    REQUIRE(effective_sample_size(w) == 1.0);
  }
  SECTION("two equal atoms give 2") {
    std::vector<double> w = {0.5, 0.5, 0.0, 0.0};
    REQUIRE_THAT(effective_sample_size(w),
                 Catch::Matchers::WithinAbs(2.0, 1e-12));
  }
}

TEST_CASE("mean and variance", "[math]") {
  std::vector<double> v = {1.0, 2.0, 3.0, 4.0};
  REQUIRE_THAT(mean(v), Catch::Matchers::WithinAbs(2.5, 1e-15));
  REQUIRE_THAT(variance(v), Catch::Matchers::WithinAbs(5.0 / 3.0, 1e-14));
}

TEST_CASE("lower_quantile order-statistic convention", "[math]") {
  SECTION("1..100 at alpha 0.1 picks the 10th smallest") {
    std::vector<double> v(100);
    for (int i = 0; i < 100; ++i) v[i] = i + 1.0;
    REQUIRE(lower_quantile(v, 0.1) == 10.0);
  }
  SECTION("alpha 0 picks the minimum") {
    std::vector<double> v = {4.0, 2.0, 9.0, 7.0};
    REQUIRE(lower_quantile(v, 0.0) == 2.0);
  }
  SECTION("all equal is that value") {
    std::vector<double> v(17, 3.25);
    REQUIRE(lower_quantile(v, 0.4) == 3.25);
  }
  SECTION("unsorted input") {
    std::vector<double> v = {5.0, 1.0, 3.0, 2.0, 4.0};
    // rank = ceil(0.5 * 5) = 3
    REQUIRE(lower_quantile(v, 0.5) == 3.0);
  }
}
