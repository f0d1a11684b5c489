#ifndef PMCMC_PRC_HPP
#define PMCMC_PRC_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "pmcmc/math.hpp"
#include "pmcmc/rng.hpp"

namespace pmcmc {

// Rejection control for particle moves: a proposed move with incremental
// weight wtilde is kept with probability min{1, wtilde / c_n} and redrawn
// otherwise, which prunes low-weight particles at the cost of the correction
// factor r(c_n, x_{n-1}) entering the weights.
enum class ThresholdPolicy { disabled, fixed, quantile };

// What a rejection discards: the proposed move only, or the ancestor draw
// along with it.
enum class PrcScope { move_only, ancestor_and_move };

struct PrcConfig {
  ThresholdPolicy policy = ThresholdPolicy::disabled;
  double fixed_c = 0.0;
  double quantile_alpha = 0.1;
  PrcScope scope = PrcScope::move_only;
  std::size_t max_attempts = 1000;
  // Monte Carlo draws per r(c_n, x_{n-1}) estimate. 0 skips the correction
  // (r taken as 1), which biases the marginal-likelihood estimate except at
  // the first step, where r(c_1) is shared by every particle and cancels in
  // the normalized weights.
  std::size_t r_draws = 100;
  bool record_particles = false;
};

struct PrcAttempt {
  double x;
  double log_w;
};

struct PrcResult {
  double x;
  double log_wtilde;
  std::size_t attempts;
  bool capped;
};

// Accept/reject loop for one particle. `first`, when given, supplies an
// already-drawn first attempt whose stream continues in `rng` (the two-pass
// threshold adaptation needs this). The acceptance test is skipped when it
// cannot fail, so a zero threshold consumes no uniforms and leaves the
// stream exactly where a plain move would. Hitting max_attempts keeps the
// final draw unconditionally and flags it; that forced acceptance is the
// documented bias of the attempt cap.
template <typename ProposeFn, typename WeighFn, typename OnRejectFn>
PrcResult prc_propagate(double log_c, std::optional<PrcAttempt> first,
                        ProposeFn&& propose, WeighFn&& weigh,
                        OnRejectFn&& on_reject, std::size_t max_attempts,
                        RngStream& rng) {
  double x, lw;
  if (first) {
    x = first->x;
    lw = first->log_w;
  } else {
    x = propose(rng);
    lw = weigh(x, rng);
  }
  std::size_t attempts = 1;
  while (true) {
    bool accepted = log_c == neg_inf || lw >= log_c;
    if (!accepted) {
      accepted = std::log(rng.uniform()) < lw - log_c;
    }
    if (accepted) return {x, lw, attempts, false};
    if (attempts >= max_attempts) return {x, lw, attempts, true};
    on_reject(rng);
    x = propose(rng);
    lw = weigh(x, rng);
    ++attempts;
  }
}

// Final weight of an accepted move: wtilde * r / p with p = min{1, wtilde/c},
// which collapses algebraically to r * max(wtilde, c). The max form is used
// directly so the identity holds bit for bit on every particle. With the
// threshold at zero and no correction the input passes through untouched.
inline double corrected_log_weight(double log_wtilde, double log_c,
                                   double log_r) {
  if (log_c == neg_inf && log_r == 0.0) return log_wtilde;
  return log_r + std::max(log_wtilde, log_c);
}

inline double corrected_weight(double wtilde, double c, double r_hat) {
  return r_hat * std::max(wtilde, c);
}

// Monte Carlo estimate of r(c_n, x_{n-1}) = E_q[min{1, wtilde(X)/c_n}],
// computed in log space. c_n = 0 gives 1 exactly without consuming draws.
template <typename ProposeFn, typename WeighFn>
double estimate_log_r(double log_c, std::size_t m_draws, ProposeFn&& propose,
                      WeighFn&& weigh, RngStream& rng) {
  if (log_c == neg_inf) return 0.0;
  if (m_draws == 0) return 0.0;
  double mx = neg_inf;
  double acc = 0.0;
  for (std::size_t m = 0; m < m_draws; ++m) {
    const double x = propose(rng);
    const double lw = weigh(x, rng);
    const double diff = lw - log_c;
    const double term = diff >= 0.0 ? 0.0 : diff;
    if (term == neg_inf) continue;
    if (term <= mx) {
      acc += std::exp(term - mx);
    } else {
      acc = acc * std::exp(mx - term) + 1.0;
      mx = term;
    }
  }
  if (mx == neg_inf) return neg_inf;
  return mx + std::log(acc / static_cast<double>(m_draws));
}

// Empirical lower alpha-quantile of the pre-control incremental weights:
// the ceil(alpha * N)-th smallest (at least the minimum). Taking the
// quantile of log weights commutes with the log, so both forms share one
// order-statistic routine.
inline double adapt_threshold(std::vector<double> weights, double alpha) {
  for (double w : weights) {
    if (w < 0.0) throw std::invalid_argument("threshold: negative weight");
  }
  return lower_quantile(std::move(weights), alpha);
}

inline double adapt_log_threshold(std::vector<double> log_weights,
                                  double alpha) {
  return lower_quantile(std::move(log_weights), alpha);
}

}  // namespace pmcmc

#endif
