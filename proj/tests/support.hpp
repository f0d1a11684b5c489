#pragma once

// Test-only oracles, kept independent of the library's filtering and
// Kalman code paths.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "pmcmc/linear_gaussian.hpp"

namespace testsupport {

// Log density of the observation vector treated as one joint Gaussian:
// stack the AR(1) states, add observation noise on the diagonal, evaluate
// the multivariate normal by Cholesky. O(T^3), so small T only.
inline double lg_joint_loglik(const pmcmc::LinearGaussianParams& p,
                              std::span<const double> y) {
  const std::size_t t = y.size();
  if (t == 0) throw std::invalid_argument("joint oracle: empty observations");

  std::vector<double> mean(t), var(t);
  mean[0] = p.init_mean;
  var[0] = p.init_var;
  for (std::size_t n = 1; n < t; ++n) {
    mean[n] = p.ar_coeff * mean[n - 1];
    var[n] = p.ar_coeff * p.ar_coeff * var[n - 1] + p.state_var;
  }

  // cov(x_i, x_j) = phi^(j-i) var(x_i) for i <= j
  std::vector<double> cov(t * t);
  for (std::size_t i = 0; i < t; ++i) {
    double scale = 1.0;
    for (std::size_t j = i; j < t; ++j) {
      cov[i * t + j] = scale * var[i];
      cov[j * t + i] = cov[i * t + j];
      scale *= p.ar_coeff;
    }
    cov[i * t + i] += p.obs_var;
  }

  // lower-triangular Cholesky factor, in place
  std::vector<double> chol(t * t, 0.0);
  for (std::size_t i = 0; i < t; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = cov[i * t + j];
      for (std::size_t k = 0; k < j; ++k) s -= chol[i * t + k] * chol[j * t + k];
      if (i == j) {
        if (!(s > 0.0)) {
          throw std::runtime_error("joint oracle: covariance not PD");
        }
        chol[i * t + i] = std::sqrt(s);
      } else {
        chol[i * t + j] = s / chol[j * t + j];
      }
    }
  }

  // solve L z = y - mean, then quad = |z|^2 and logdet = 2 sum log L_ii
  std::vector<double> z(t);
  double quad = 0.0, logdet = 0.0;
  for (std::size_t i = 0; i < t; ++i) {
    double s = y[i] - mean[i];
    for (std::size_t k = 0; k < i; ++k) s -= chol[i * t + k] * z[k];
    z[i] = s / chol[i * t + i];
    quad += z[i] * z[i];
    logdet += 2.0 * std::log(chol[i * t + i]);
  }
  const double two_pi = 2.0 * std::numbers::pi;
  return -0.5 * (static_cast<double>(t) * std::log(two_pi) + logdet + quad);
}

}  // namespace testsupport
