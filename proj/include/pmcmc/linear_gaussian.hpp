#ifndef PMCMC_LINEAR_GAUSSIAN_HPP
#define PMCMC_LINEAR_GAUSSIAN_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>

#include "pmcmc/math.hpp"
#include "pmcmc/rng.hpp"

namespace pmcmc {

// Scalar AR(1) plus noise:
//   x_1 ~ N(init_mean, init_var), x_n = phi * x_{n-1} + N(0, state_var),
//   y_n = x_n + N(0, obs_var).
// Conjugate throughout, so the Kalman recursion gives the exact marginal
// likelihood. Used as the validation oracle model.
struct LinearGaussianParams {
  double ar_coeff = 0.9;
  double state_var = 1.0;
  double obs_var = 1.0;
  double init_mean = 0.0;
  double init_var = 1.0;
};

// The unknown parameter is theta = (phi,); noise and initial-state settings
// come from the params given at construction. obs_var == 0 is tolerated so a
// degenerate y == x dataset can be simulated, but density evaluations need
// obs_var > 0.
class LinearGaussianModel {
 public:
  static constexpr std::size_t param_dim = 1;

  explicit LinearGaussianModel(const LinearGaussianParams& params)
      : p_(params) {
    if (!(p_.state_var > 0.0)) {
      throw std::invalid_argument("linear-Gaussian: state_var must be > 0");
    }
    if (!(p_.init_var > 0.0)) {
      throw std::invalid_argument("linear-Gaussian: init_var must be > 0");
    }
    if (p_.obs_var < 0.0) {
      throw std::invalid_argument("linear-Gaussian: obs_var must be >= 0");
    }
    state_sd_ = std::sqrt(p_.state_var);
    obs_sd_ = std::sqrt(p_.obs_var);
    init_sd_ = std::sqrt(p_.init_var);
  }

  double initial_sample(std::span<const double> theta, RngStream& rng) const {
    (void)theta;
    return rng.normal(p_.init_mean, init_sd_);
  }

  double initial_logpdf(std::span<const double> theta, double x) const {
    (void)theta;
    return log_normal_pdf(x, p_.init_mean, init_sd_);
  }

  double transition_sample(std::span<const double> theta, double x_prev,
                           RngStream& rng) const {
    return rng.normal(theta[0] * x_prev, state_sd_);
  }

  double transition_logpdf(std::span<const double> theta, double x_prev,
                           double x) const {
    return log_normal_pdf(x, theta[0] * x_prev, state_sd_);
  }

  double observation_sample(std::span<const double> theta, double x,
                            RngStream& rng) const {
    (void)theta;
    return obs_sd_ == 0.0 ? x : rng.normal(x, obs_sd_);
  }

  double observation_logpdf(std::span<const double> theta, double x,
                            double y) const {
    (void)theta;
    return log_normal_pdf(y, x, obs_sd_);
  }

  bool in_support(std::span<const double> theta) const {
    return theta[0] > -1.0 && theta[0] < 1.0;
  }

  double log_prior(std::span<const double> theta) const {
    return in_support(theta) ? -std::log(2.0) : neg_inf;
  }

  void sample_prior(RngStream& rng, std::span<double> theta) const {
    theta[0] = rng.uniform(-1.0, 1.0);
  }

  // Construction parameters with phi replaced, for handing to the Kalman
  // oracle alongside a filtering theta.
  LinearGaussianParams params_with(double phi) const {
    LinearGaussianParams q = p_;
    q.ar_coeff = phi;
    return q;
  }

  const LinearGaussianParams& params() const { return p_; }

 private:
  LinearGaussianParams p_;
  double state_sd_ = 1.0;
  double obs_sd_ = 1.0;
  double init_sd_ = 1.0;
};

}  // namespace pmcmc

#endif
