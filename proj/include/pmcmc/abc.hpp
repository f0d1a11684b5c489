#ifndef PMCMC_ABC_HPP
#define PMCMC_ABC_HPP

#include <cmath>
#include <cstddef>
#include <span>

#include "pmcmc/math.hpp"
#include "pmcmc/model.hpp"
#include "pmcmc/rng.hpp"

namespace pmcmc {

// Likelihood-free replacement for the local likelihood g(y_n | x_n):
// simulate S pseudo-observations from the observation model and compare
// them to the datum through a kernel. indicator counts hits within the
// tolerance; gaussian smooths with a N(y, epsilon^2) density. Observations
// are univariate here, so the distance is the absolute difference.
enum class AbcKernel { indicator, gaussian };

struct AbcConfig {
  double epsilon = 1.0;
  std::size_t n_pseudo = 10;  // S
  AbcKernel kernel = AbcKernel::indicator;
};

inline double abc_distance(double a, double b) { return std::abs(a - b); }

// log of (1/S) sum_s kernel(y_s, y) with y_s drawn fresh from the
// observation model at state x. The indicator kernel legitimately returns
// -inf (no pseudo-observation within epsilon). Consumes exactly S
// observation draws from rng regardless of kernel or epsilon.
template <StateSpaceModel M>
double abc_log_local_likelihood(const M& model, std::span<const double> theta,
                                double x, double y, const AbcConfig& cfg,
                                RngStream& rng) {
  const auto s_count = static_cast<double>(cfg.n_pseudo);
  if (cfg.kernel == AbcKernel::indicator) {
    std::size_t hits = 0;
    for (std::size_t s = 0; s < cfg.n_pseudo; ++s) {
      const double ys = model.observation_sample(theta, x, rng);
      if (abc_distance(ys, y) < cfg.epsilon) ++hits;
    }
    if (hits == 0) return neg_inf;
    return std::log(static_cast<double>(hits) / s_count);
  }
  // gaussian kernel, streaming log-mean-exp over the S densities
  double mx = neg_inf;
  double acc = 0.0;
  for (std::size_t s = 0; s < cfg.n_pseudo; ++s) {
    const double ys = model.observation_sample(theta, x, rng);
    const double lp = log_normal_pdf(ys, y, cfg.epsilon);
    if (lp == neg_inf) continue;
    if (lp <= mx) {
      acc += std::exp(lp - mx);
    } else {
      acc = acc * std::exp(mx - lp) + 1.0;
      mx = lp;
    }
  }
  if (mx == neg_inf) return neg_inf;
  return mx + std::log(acc / s_count);
}

}  // namespace pmcmc

#endif
