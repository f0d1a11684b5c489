#ifndef PMCMC_KALMAN_HPP
#define PMCMC_KALMAN_HPP

#include <cmath>
#include <span>

#include "pmcmc/linear_gaussian.hpp"
#include "pmcmc/math.hpp"
#include "pmcmc/rng.hpp"

namespace pmcmc {

struct KalmanState {
  double mean = 0.0;
  double variance = 0.0;
  double log_lik = 0.0;
};

// Exact marginal likelihood of the scalar linear-Gaussian model via the
// predict/update recursion. The first predictive is N(init_mean,
// init_var + obs_var).
inline double kalman_loglik(const LinearGaussianParams& p,
                            std::span<const double> y) {
  KalmanState s{p.init_mean, p.init_var, 0.0};
  for (double obs : y) {
    const double pred_var = s.variance + p.obs_var;
    s.log_lik += log_normal_pdf(obs, s.mean, std::sqrt(pred_var));
    const double gain = s.variance / pred_var;
    s.mean += gain * (obs - s.mean);
    s.variance *= 1.0 - gain;
    s.mean *= p.ar_coeff;
    s.variance = p.ar_coeff * p.ar_coeff * s.variance + p.state_var;
  }
  return s.log_lik;
}

// Reference chain for validating pseudo-marginal samplers: plain
// Metropolis-Hastings on phi with the exact Kalman likelihood and a
// uniform(-1, 1) prior, symmetric random-walk proposal.
struct IdealMhState {
  double phi = 0.0;
  double log_lik = 0.0;
};

inline bool ideal_marginal_mh_step(IdealMhState& state,
                                   const LinearGaussianParams& base,
                                   std::span<const double> y,
                                   double proposal_sd, RngStream& rng) {
  const double phi_star = rng.normal(state.phi, proposal_sd);
  if (!(phi_star > -1.0 && phi_star < 1.0)) return false;
  LinearGaussianParams pstar = base;
  pstar.ar_coeff = phi_star;
  const double ll_star = kalman_loglik(pstar, y);
  const double log_ratio = ll_star - state.log_lik;
  if (std::log(rng.uniform()) < log_ratio) {
    state.phi = phi_star;
    state.log_lik = ll_star;
    return true;
  }
  return false;
}

}  // namespace pmcmc

#endif
