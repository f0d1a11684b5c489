#ifndef PMCMC_THETA_LOGISTIC_HPP
#define PMCMC_THETA_LOGISTIC_HPP

#include <cmath>
#include <cstddef>
#include <span>

#include "pmcmc/math.hpp"
#include "pmcmc/rng.hpp"

namespace pmcmc {

// Log-abundance population model. theta = (r, zeta, K):
//   x_1 ~ N(ln K, init_sd^2)
//   x_n | x_{n-1} ~ N(x_{n-1} + r * (1 - (exp(x_{n-1}) / K)^zeta), trans_var)
//   y_n | x_n ~ N(x_n, obs_var)
// The prior is uniform on a box; its r upper bound sits at the deterministic
// map's chaos threshold and K must stay positive.
struct ThetaLogisticConfig {
  double trans_var = 0.01;
  double obs_var = 0.04;
  double init_sd = 0.5;
  double r_min = 0.0, r_max = 2.69;
  double zeta_min = -10.0, zeta_max = 10.0;
  double k_min = 0.0, k_max = 5000.0;
};

class ThetaLogisticModel {
 public:
  static constexpr std::size_t param_dim = 3;

  ThetaLogisticModel() = default;
  explicit ThetaLogisticModel(const ThetaLogisticConfig& config)
      : cfg_(config),
        trans_sd_(std::sqrt(config.trans_var)),
        obs_sd_(std::sqrt(config.obs_var)) {}

  double transition_mean(std::span<const double> theta, double x_prev) const {
    const double r = theta[0], zeta = theta[1], k = theta[2];
    // (exp(x)/K)^zeta as exp(zeta * (x - ln K)): stable for the log-scale
    // states this model produces.
    return x_prev + r * (1.0 - std::exp(zeta * (x_prev - std::log(k))));
  }

  double initial_sample(std::span<const double> theta, RngStream& rng) const {
    return rng.normal(std::log(theta[2]), cfg_.init_sd);
  }

  double initial_logpdf(std::span<const double> theta, double x) const {
    return log_normal_pdf(x, std::log(theta[2]), cfg_.init_sd);
  }

  double transition_sample(std::span<const double> theta, double x_prev,
                           RngStream& rng) const {
    return rng.normal(transition_mean(theta, x_prev), trans_sd_);
  }

  double transition_logpdf(std::span<const double> theta, double x_prev,
                           double x) const {
    return log_normal_pdf(x, transition_mean(theta, x_prev), trans_sd_);
  }

  double observation_sample(std::span<const double> theta, double x,
                            RngStream& rng) const {
    (void)theta;
    return rng.normal(x, obs_sd_);
  }

  double observation_logpdf(std::span<const double> theta, double x,
                            double y) const {
    (void)theta;
    return log_normal_pdf(y, x, obs_sd_);
  }

  bool in_support(std::span<const double> theta) const {
    return theta[0] > cfg_.r_min && theta[0] < cfg_.r_max &&
           theta[1] > cfg_.zeta_min && theta[1] < cfg_.zeta_max &&
           theta[2] > cfg_.k_min && theta[2] < cfg_.k_max;
  }

  double log_prior(std::span<const double> theta) const {
    if (!in_support(theta)) return neg_inf;
    return -std::log(cfg_.r_max - cfg_.r_min) -
           std::log(cfg_.zeta_max - cfg_.zeta_min) -
           std::log(cfg_.k_max - cfg_.k_min);
  }

  void sample_prior(RngStream& rng, std::span<double> theta) const {
    theta[0] = rng.uniform(cfg_.r_min, cfg_.r_max);
    theta[1] = rng.uniform(cfg_.zeta_min, cfg_.zeta_max);
    theta[2] = rng.uniform(cfg_.k_min, cfg_.k_max);
  }

  const ThetaLogisticConfig& config() const { return cfg_; }

 private:
  ThetaLogisticConfig cfg_{};
  double trans_sd_ = 0.1;
  double obs_sd_ = 0.2;
};

}  // namespace pmcmc

#endif
