#ifndef PMCMC_SAMPLERS_HPP
#define PMCMC_SAMPLERS_HPP

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pmcmc/adaptive.hpp"
#include "pmcmc/filter.hpp"
#include "pmcmc/math.hpp"
#include "pmcmc/model.hpp"
#include "pmcmc/particle_system.hpp"
#include "pmcmc/rng.hpp"

namespace pmcmc {

// Current point of a particle MCMC chain. log_ml is the marginal-likelihood
// estimate attached to theta: the accepted filter estimate under
// Metropolis-Hastings moves, the most recent conditional-sweep estimate
// under Gibbs moves. Stored states always lie inside the prior support.
struct ChainState {
  std::vector<double> theta;
  std::vector<double> path;
  double log_ml = neg_inf;
  double log_prior = neg_inf;
};

// Everything one iteration decided, sufficient to replay the acceptance
// ratio offline. kind is 'm' for a marginal Metropolis-Hastings move, 'g'
// for a Gibbs (conditional SMC) move.
struct StepInfo {
  bool accepted = false;
  bool in_support = true;
  bool collapsed = false;
  double log_accept = neg_inf;
  double proposed_log_ml = neg_inf;
  double proposed_log_prior = neg_inf;
  std::vector<double> proposed_theta;
  char kind = 'm';
};

// Exact log density of a full trajectory and the data given theta:
// initial + transitions + observations. This is what the Gibbs theta-move
// targets (times the prior); no conjugate structure is assumed.
template <StateSpaceModel M>
double path_log_joint(const M& model, std::span<const double> theta,
                      std::span<const double> path,
                      std::span<const double> y) {
  double lp = model.initial_logpdf(theta, path[0]) +
              model.observation_logpdf(theta, path[0], y[0]);
  for (std::size_t n = 1; n < y.size(); ++n) {
    lp += model.transition_logpdf(theta, path[n - 1], path[n]) +
          model.observation_logpdf(theta, path[n], y[n]);
  }
  return lp;
}

inline void validate_pseudo_marginal_config(const FilterConfig& fc) {
  if (fc.prc && fc.prc->policy != ThresholdPolicy::disabled &&
      fc.prc->r_draws == 0) {
    throw std::invalid_argument(
        "pmmh: rejection control with r_draws == 0 biases the "
        "marginal-likelihood estimate; set r_draws >= 1 or disable it");
  }
}

// One marginal Metropolis-Hastings move: propose theta*, run a fresh filter
// sweep, draw a candidate trajectory, and accept on the estimated posterior
// ratio (the proposal is symmetric, so its ratio drops out). Proposals
// outside the prior support are rejected without running a filter, and a
// collapsed sweep is never accepted. The carried estimate for the current
// state is never recomputed.
template <StateSpaceModel M>
StepInfo pmmh_step(ChainState& state, const M& model,
                   std::span<const double> y, const FilterConfig& fc,
                   AdaptiveProposal& proposal, RngStream& rng) {
  validate_pseudo_marginal_config(fc);
  StepInfo info;
  info.kind = 'm';
  info.proposed_theta = proposal.propose(state.theta, rng);
  if (!model.in_support(info.proposed_theta)) {
    info.in_support = false;
    return info;
  }
  ParticleSystem ps = run_filter(
      model, std::span<const double>(info.proposed_theta), y, fc, rng);
  info.proposed_log_ml = ps.log_ml;
  info.proposed_log_prior = model.log_prior(info.proposed_theta);
  if (ps.collapsed()) {
    info.collapsed = true;
    return info;
  }
  std::vector<double> path_star = sample_trajectory(ps, rng);
  info.log_accept = (info.proposed_log_ml + info.proposed_log_prior) -
                    (state.log_ml + state.log_prior);
  if (std::log(rng.uniform()) < info.log_accept) {
    info.accepted = true;
    state.theta = info.proposed_theta;
    state.path = std::move(path_star);
    state.log_ml = info.proposed_log_ml;
    state.log_prior = info.proposed_log_prior;
  }
  return info;
}

// One Particle Gibbs iteration: a Metropolis-within-Gibbs theta-update
// against the exact joint density of the retained path, then a conditional
// sweep retaining that path and a fresh trajectory draw. The path refresh
// runs whether or not the theta-move accepted. accepted/log_accept describe
// the theta-move only.
template <StateSpaceModel M>
StepInfo pg_step(ChainState& state, const M& model, std::span<const double> y,
                 const FilterConfig& fc, AdaptiveProposal& proposal,
                 RngStream& rng) {
  StepInfo info;
  info.kind = 'g';
  info.proposed_theta = proposal.propose(state.theta, rng);
  if (model.in_support(info.proposed_theta)) {
    const double current = state.log_prior +
                           path_log_joint(model, state.theta, state.path, y);
    info.proposed_log_prior = model.log_prior(info.proposed_theta);
    const double proposed =
        info.proposed_log_prior +
        path_log_joint(model, info.proposed_theta, state.path, y);
    info.log_accept = proposed - current;
    if (std::log(rng.uniform()) < info.log_accept) {
      info.accepted = true;
      state.theta = info.proposed_theta;
      state.log_prior = info.proposed_log_prior;
    }
  } else {
    info.in_support = false;
  }
  ParticleSystem ps =
      run_conditional_filter(model, state.theta, y, fc, state.path, rng);
  if (ps.collapsed()) {
    // Unreachable under positive densities; keep the previous path so the
    // chain stays well-defined.
    info.collapsed = true;
    return info;
  }
  state.path = sample_trajectory(ps, rng);
  state.log_ml = ps.log_ml;
  info.proposed_log_ml = ps.log_ml;
  return info;
}

// Kernel mixture: with probability mix_prob take a marginal
// Metropolis-Hastings move (jointly refreshing theta and the whole path,
// which breaks the coalescence locks Gibbs can freeze on), otherwise a
// Gibbs move. The degenerate probabilities consume no mixing uniform, so
// mix_prob 0 and 1 reproduce the pure kernels stream-for-stream.
template <StateSpaceModel M>
StepInfo pmh_within_pg_step(ChainState& state, const M& model,
                            std::span<const double> y, const FilterConfig& fc,
                            AdaptiveProposal& proposal, double mix_prob,
                            RngStream& rng) {
  if (mix_prob >= 1.0) return pmmh_step(state, model, y, fc, proposal, rng);
  if (mix_prob <= 0.0) return pg_step(state, model, y, fc, proposal, rng);
  if (rng.uniform() < mix_prob) {
    return pmmh_step(state, model, y, fc, proposal, rng);
  }
  return pg_step(state, model, y, fc, proposal, rng);
}

enum class Algorithm { pmmh, pg, hybrid };

struct ChainConfig {
  Algorithm algorithm = Algorithm::pmmh;
  std::size_t n_iters = 1000;
  double mix_prob = 0.1;
  ProposalConfig proposal;
  std::optional<std::vector<double>> init_theta;  // default: prior draw
  std::optional<std::vector<double>> init_path;   // default: filter draw
  std::size_t init_retries = 10;
  std::size_t path_thin = 10;  // store every k-th path; 0 stores none
  bool keep_init_system = false;
};

// Full trace of one chain. Flat row-major layouts: thetas is n_iters x
// theta_dim, paths is path_iters.size() x path_len. repeat_flags[i] marks an
// iteration whose (theta, path) is bit-identical to its predecessor, the
// freezing signature, computed online so path thinning cannot hide it.
struct ChainOutput {
  std::size_t n_iters = 0;
  std::size_t theta_dim = 0;
  std::size_t path_len = 0;
  std::size_t proposal_dim = 0;  // path_len + theta_dim, proposed jointly
  std::vector<double> thetas;
  std::vector<double> log_mls;
  std::vector<double> log_priors;
  std::vector<double> log_accepts;
  std::vector<double> proposed_log_mls;
  std::vector<double> proposed_log_priors;
  std::vector<std::uint8_t> accept_flags;
  std::vector<std::uint8_t> in_support_flags;
  std::vector<std::uint8_t> collapsed_flags;
  std::vector<std::uint8_t> repeat_flags;
  std::vector<char> kinds;
  std::vector<std::size_t> path_iters;  // 1-based iteration of each row
  std::vector<double> paths;
  std::vector<double> init_theta;
  std::vector<double> init_path;
  double init_log_ml = neg_inf;
  double init_log_prior = neg_inf;
  std::optional<ParticleSystem> init_system;

  double theta_at(std::size_t iter, std::size_t i) const {
    return thetas[iter * theta_dim + i];
  }
  std::span<const double> path_row(std::size_t row) const {
    return {paths.data() + row * path_len, path_len};
  }
};

inline void validate_chain_config(const ChainConfig& cc,
                                  const FilterConfig& fc) {
  if (cc.n_iters < 1) {
    throw std::invalid_argument("chain: n_iters must be >= 1");
  }
  if (!(cc.mix_prob >= 0.0 && cc.mix_prob <= 1.0)) {
    throw std::invalid_argument("chain: mix_prob must lie in [0, 1]");
  }
  const bool uses_gibbs =
      cc.algorithm == Algorithm::pg || cc.algorithm == Algorithm::hybrid;
  if (uses_gibbs && fc.abc) {
    throw std::invalid_argument(
        "chain: Gibbs path updates need exact densities; ABC weighting is "
        "only available under pmmh");
  }
  if (uses_gibbs && fc.prc && fc.prc->policy != ThresholdPolicy::disabled) {
    throw std::invalid_argument(
        "chain: rejection control inside conditional sweeps is not "
        "supported; disable it for pg/hybrid runs");
  }
  if (cc.algorithm != Algorithm::pg) validate_pseudo_marginal_config(fc);
}

// Runs one chain of the chosen algorithm. Initialization: theta from config
// or the prior, then a plain filter sweep supplies the initial estimate; on
// collapse the sweep is retried (with a fresh prior theta when the config
// does not pin one), fatal after init_retries. The initial path comes from
// that sweep unless the config pins one. Deterministic given the seed.
template <StateSpaceModel M>
ChainOutput run_chain(const M& model, std::span<const double> y,
                      const FilterConfig& filter_cfg,
                      const ChainConfig& chain_cfg, std::uint64_t seed) {
  validate_filter_config(filter_cfg);
  validate_chain_config(chain_cfg, filter_cfg);
  const std::size_t d = M::param_dim;
  const std::size_t t_len = y.size();
  RngStream rng(seed);
  AdaptiveProposal proposal(chain_cfg.proposal, d);

  ChainState state;
  state.theta.resize(d);
  if (chain_cfg.init_theta) {
    if (chain_cfg.init_theta->size() != d) {
      throw std::invalid_argument("chain: init_theta has wrong dimension");
    }
    state.theta = *chain_cfg.init_theta;
    if (!model.in_support(state.theta)) {
      throw std::invalid_argument("chain: init_theta outside prior support");
    }
  } else {
    model.sample_prior(rng, state.theta);
  }
  state.log_prior = model.log_prior(state.theta);

  std::optional<ParticleSystem> init_ps;
  for (std::size_t attempt = 0; attempt <= chain_cfg.init_retries;
       ++attempt) {
    init_ps = run_filter(model, std::span<const double>(state.theta), y,
                         filter_cfg, rng);
    if (!init_ps->collapsed()) break;
    init_ps.reset();
    // A pinned theta keeps its value across retries (only the sweep
    // randomness changes); a prior draw is redrawn, since a collapse can be
    // a deterministic property of the theta.
    if (!chain_cfg.init_theta && attempt < chain_cfg.init_retries) {
      model.sample_prior(rng, state.theta);
      state.log_prior = model.log_prior(state.theta);
    }
  }
  if (!init_ps) {
    throw std::runtime_error(
        "chain: initialization filter collapsed on every retry");
  }
  state.log_ml = init_ps->log_ml;
  if (chain_cfg.init_path) {
    if (chain_cfg.init_path->size() != t_len) {
      throw std::invalid_argument("chain: init_path has wrong length");
    }
    state.path = *chain_cfg.init_path;
  } else {
    state.path = sample_trajectory(*init_ps, rng);
  }
  proposal.observe(state.theta);

  ChainOutput out;
  out.n_iters = chain_cfg.n_iters;
  out.theta_dim = d;
  out.path_len = t_len;
  out.proposal_dim = t_len + d;
  out.init_theta = state.theta;
  out.init_path = state.path;
  out.init_log_ml = state.log_ml;
  out.init_log_prior = state.log_prior;
  if (chain_cfg.keep_init_system) out.init_system = std::move(*init_ps);
  init_ps.reset();

  const std::size_t iters = chain_cfg.n_iters;
  out.thetas.resize(iters * d);
  out.log_mls.resize(iters);
  out.log_priors.resize(iters);
  out.log_accepts.resize(iters);
  out.proposed_log_mls.resize(iters);
  out.proposed_log_priors.resize(iters);
  out.accept_flags.resize(iters);
  out.in_support_flags.resize(iters);
  out.collapsed_flags.resize(iters);
  out.repeat_flags.resize(iters);
  out.kinds.resize(iters);

  std::vector<double> prev_theta = state.theta;
  std::vector<double> prev_path = state.path;
  for (std::size_t iter = 1; iter <= iters; ++iter) {
    StepInfo info;
    switch (chain_cfg.algorithm) {
      case Algorithm::pmmh:
        info = pmmh_step(state, model, y, filter_cfg, proposal, rng);
        break;
      case Algorithm::pg:
        info = pg_step(state, model, y, filter_cfg, proposal, rng);
        break;
      case Algorithm::hybrid:
        info = pmh_within_pg_step(state, model, y, filter_cfg, proposal,
                                  chain_cfg.mix_prob, rng);
        break;
    }
    const std::size_t row = iter - 1;
    for (std::size_t i = 0; i < d; ++i) {
      out.thetas[row * d + i] = state.theta[i];
    }
    out.log_mls[row] = state.log_ml;
    out.log_priors[row] = state.log_prior;
    out.log_accepts[row] = info.log_accept;
    out.proposed_log_mls[row] = info.proposed_log_ml;
    out.proposed_log_priors[row] = info.proposed_log_prior;
    out.accept_flags[row] = info.accepted ? 1 : 0;
    out.in_support_flags[row] = info.in_support ? 1 : 0;
    out.collapsed_flags[row] = info.collapsed ? 1 : 0;
    out.kinds[row] = info.kind;
    const bool repeat = state.theta == prev_theta && state.path == prev_path;
    out.repeat_flags[row] = repeat ? 1 : 0;
    if (!repeat) {
      prev_theta = state.theta;
      prev_path = state.path;
    }
    if (chain_cfg.path_thin > 0 && iter % chain_cfg.path_thin == 0) {
      out.path_iters.push_back(iter);
      out.paths.insert(out.paths.end(), state.path.begin(),
                       state.path.end());
    }
    proposal.observe(state.theta);
  }
  return out;
}

}  // namespace pmcmc

#endif
