#ifndef PMCMC_ORACLE_CHECKS_HPP
#define PMCMC_ORACLE_CHECKS_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "pmcmc/diagnostics.hpp"
#include "pmcmc/filter.hpp"
#include "pmcmc/kalman.hpp"
#include "pmcmc/linear_gaussian.hpp"
#include "pmcmc/samplers.hpp"

namespace pmcmc {

// Ground-truth checks against the closed-form linear-Gaussian filter. Both
// are shared between the test suite and the oracle-check subcommand so a
// field run exercises exactly the code the suite gates on.

struct UnbiasednessResult {
  double mean_ratio = 0.0;
  double se = 0.0;
  std::size_t n_runs = 0;
  bool pass = false;
};

// Mean of exp(log p_hat - log p_true) over independent sweeps. For an
// unbiased estimator the population mean is exactly 1 whatever N, so the
// gate is |mean - 1| <= 3 standard errors.
inline UnbiasednessResult check_estimator_unbiasedness(
    const LinearGaussianModel& model, std::span<const double> y,
    const FilterConfig& fc, std::size_t n_runs, std::uint64_t seed) {
  const std::vector<double> theta = {model.params().ar_coeff};
  const double log_truth = kalman_loglik(model.params(), y);
  RngStream root(seed);
  std::vector<double> ratios;
  ratios.reserve(n_runs);
  for (std::size_t i = 0; i < n_runs; ++i) {
    RngStream run_rng = root.substream(i + 1);
    const ParticleSystem ps = run_filter(model, theta, y, fc, run_rng);
    ratios.push_back(ps.collapsed() ? 0.0 : std::exp(ps.log_ml - log_truth));
  }
  UnbiasednessResult res;
  res.n_runs = n_runs;
  res.mean_ratio = mean(ratios);
  res.se = std::sqrt(variance(ratios) / static_cast<double>(n_runs));
  res.pass = std::abs(res.mean_ratio - 1.0) <= 3.0 * res.se;
  return res;
}

struct KsCheckConfig {
  std::size_t n_iters = 50000;
  double burn_frac = 0.2;
  std::size_t thin = 10;
  double proposal_sd = 0.15;
  double init_phi = 0.0;
  double threshold = 0.05;
};

struct KsCheckResult {
  double ks = 1.0;
  std::size_t n_kept_pm = 0;
  std::size_t n_kept_ideal = 0;
  double pm_accept_rate = 0.0;
  double ideal_accept_rate = 0.0;
  bool pass = false;
};

inline std::vector<double> burn_then_thin(std::span<const double> x,
                                          double burn_frac, std::size_t thin) {
  const auto burn = static_cast<std::size_t>(
      burn_frac * static_cast<double>(x.size()));
  std::vector<double> kept;
  for (std::size_t i = burn; i < x.size(); i += thin) kept.push_back(x[i]);
  return kept;
}

// Marginal MH with the exact likelihood targets the true posterior of phi.
// A pseudo-marginal chain with ANY number of particles targets the same
// posterior, so after burn-in the two samples should be KS-close.
inline KsCheckResult check_pmmh_vs_ideal(const LinearGaussianModel& model,
                                         std::span<const double> y,
                                         const FilterConfig& fc,
                                         const KsCheckConfig& kc,
                                         std::uint64_t seed) {
  ChainConfig cc;
  cc.algorithm = Algorithm::pmmh;
  cc.n_iters = kc.n_iters;
  cc.proposal.kind = ProposalKind::random_walk;
  cc.proposal.sigma0 = {kc.proposal_sd};
  cc.init_theta = std::vector<double>{kc.init_phi};
  cc.path_thin = 0;
  RngStream root(seed);
  const ChainOutput pm =
      run_chain(model, y, fc, cc, root.substream(1).key());

  RngStream ideal_rng = root.substream(2);
  IdealMhState ideal{kc.init_phi, kalman_loglik(
      model.params_with(kc.init_phi), y)};
  std::vector<double> ideal_phis(kc.n_iters);
  std::size_t ideal_accepts = 0;
  for (std::size_t i = 0; i < kc.n_iters; ++i) {
    ideal_accepts += ideal_marginal_mh_step(ideal, model.params(), y,
                                            kc.proposal_sd, ideal_rng)
                         ? 1u
                         : 0u;
    ideal_phis[i] = ideal.phi;
  }

  const auto pm_kept = burn_then_thin(pm.thetas, kc.burn_frac, kc.thin);
  const auto ideal_kept = burn_then_thin(ideal_phis, kc.burn_frac, kc.thin);

  KsCheckResult res;
  res.ks = ks_distance(pm_kept, ideal_kept);
  res.n_kept_pm = pm_kept.size();
  res.n_kept_ideal = ideal_kept.size();
  std::size_t pm_accepts = 0;
  for (auto f : pm.accept_flags) pm_accepts += f;
  res.pm_accept_rate = static_cast<double>(pm_accepts) /
                       static_cast<double>(kc.n_iters);
  res.ideal_accept_rate = static_cast<double>(ideal_accepts) /
                          static_cast<double>(kc.n_iters);
  res.pass = res.ks < kc.threshold;
  return res;
}

}  // namespace pmcmc

#endif
