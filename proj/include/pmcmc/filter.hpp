#ifndef PMCMC_FILTER_HPP
#define PMCMC_FILTER_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "pmcmc/abc.hpp"
#include "pmcmc/math.hpp"
#include "pmcmc/model.hpp"
#include "pmcmc/particle_system.hpp"
#include "pmcmc/prc.hpp"
#include "pmcmc/resampling.hpp"
#include "pmcmc/rng.hpp"

namespace pmcmc {

struct FilterConfig {
  std::size_t n_particles = 100;
  Resampling resampling = Resampling::systematic;
  std::optional<PrcConfig> prc;
  std::optional<AbcConfig> abc;
};

inline void validate_filter_config(const FilterConfig& cfg) {
  if (cfg.n_particles < 1) {
    throw std::invalid_argument("filter: n_particles must be >= 1");
  }
  if (cfg.prc) {
    if (cfg.prc->max_attempts < 1) {
      throw std::invalid_argument("prc: max_attempts must be >= 1");
    }
    if (cfg.prc->fixed_c < 0.0) {
      throw std::invalid_argument("prc: fixed threshold must be >= 0");
    }
    if (!(cfg.prc->quantile_alpha >= 0.0 && cfg.prc->quantile_alpha < 1.0)) {
      throw std::invalid_argument("prc: quantile_alpha must lie in [0, 1)");
    }
  }
  if (cfg.abc) {
    if (!(cfg.abc->epsilon > 0.0)) {
      throw std::invalid_argument("abc: epsilon must be > 0");
    }
    if (cfg.abc->n_pseudo < 1) {
      throw std::invalid_argument("abc: n_pseudo must be >= 1");
    }
  }
}

namespace detail {

// Substream tags. Every particle, every resampling pass, and every
// r-estimate draws from its own keyed substream, so parallel propagation
// would reproduce the sequential results bit for bit and memoization order
// cannot matter.
inline constexpr std::uint64_t kParticleTag = 0;
inline constexpr std::uint64_t kResampleTag = 1;
inline constexpr std::uint64_t kRTag = 2;

template <StateSpaceModel M>
class FilterSweep {
 public:
  // retained == nullptr runs a plain sweep; otherwise slot N-1 is pinned to
  // the retained trajectory (conditional SMC).
  FilterSweep(const M& model, std::span<const double> theta,
              std::span<const double> y, const FilterConfig& cfg,
              const std::vector<double>* retained, RngStream& rng)
      : model_(model),
        theta_(theta),
        y_(y),
        cfg_(cfg),
        retained_(retained),
        root_(rng.next_u64()) {}

  ParticleSystem run() {
    const std::size_t t_len = y_.size();
    const std::size_t n = cfg_.n_particles;
    const bool conditional = retained_ != nullptr;
    const std::size_t ret = n - 1;
    const PrcConfig* prc = cfg_.prc ? &*cfg_.prc : nullptr;
    const bool prc_active = prc && prc->policy != ThresholdPolicy::disabled;

    ParticleSystem ps;
    ps.allocate(t_len, n);

    std::vector<RngStream> streams;
    streams.reserve(n);
    std::vector<double> first_x(n), wtilde(n), log_w(n), log_r_used(n);
    std::vector<std::size_t> anc(n, 0), attempts(n, 1);
    std::vector<std::uint8_t> capped(n, 0);
    std::vector<std::optional<double>> r_memo(n);

    for (std::size_t step = 0; step < t_len; ++step) {
      std::span<const double> prev_norm;
      std::optional<CategoricalSampler> prev_cat;
      if (step >= 1) {
        prev_norm = std::span<const double>(
            ps.norm_weights.data() + (step - 1) * n, n);
        RngStream rs = root_.substream(kResampleTag, step, 0);
        if (conditional) {
          // Multinomial draws for the free slots; the retained slot keeps
          // its own index as ancestor.
          prev_cat.emplace(prev_norm);
          for (std::size_t k = 0; k < n; ++k) {
            anc[k] = k == ret ? ret : prev_cat->draw(rs);
          }
        } else {
          resample(prev_norm, anc, cfg_.resampling, rs);
          if (prc_active && prc->scope == PrcScope::ancestor_and_move) {
            prev_cat.emplace(prev_norm);
          }
        }
      }

      // First attempts for every free slot, one keyed substream per
      // particle. Under the quantile policy these are the weights the
      // threshold is adapted on; the acceptance loops below continue the
      // same streams.
      streams.clear();
      for (std::size_t k = 0; k < n; ++k) {
        streams.push_back(root_.substream(kParticleTag, step, k));
      }
      for (std::size_t k = 0; k < n; ++k) {
        if (conditional && k == ret) {
          first_x[k] = (*retained_)[step];
          continue;
        }
        const double xa = step == 0 ? 0.0 : ps.particle(step - 1, anc[k]);
        first_x[k] = propose(step, xa, streams[k]);
        wtilde[k] = weigh(step, xa, first_x[k], streams[k]);
      }

      double log_c = neg_inf;
      if (prc_active) {
        log_c = prc->policy == ThresholdPolicy::fixed
                    ? std::log(prc->fixed_c)
                    : adapt_log_threshold(
                          std::vector<double>(wtilde.begin(), wtilde.end()),
                          prc->quantile_alpha);
      }

      // Shared correction for ancestor-and-move rejections: the rejected
      // object is the pair (ancestor, move), so the normalizing constant is
      // the weight-averaged r over all possible ancestors.
      double log_rbar = 0.0;
      bool use_rbar = false;
      std::size_t n_r_estimates = 0;
      const bool need_r = prc_active && log_c != neg_inf && prc->r_draws > 0;
      if (need_r && step >= 1 && prc->scope == PrcScope::ancestor_and_move) {
        std::vector<double> terms(n, neg_inf);
        for (std::size_t j = 0; j < n; ++j) {
          if (prev_norm[j] <= 0.0) continue;
          RngStream rrng = root_.substream(kRTag, step, j);
          const double xa = ps.particle(step - 1, j);
          terms[j] = std::log(prev_norm[j]) +
                     estimate_log_r(
                         log_c, prc->r_draws,
                         [&](RngStream& r) { return propose(step, xa, r); },
                         [&](double x, RngStream& r) {
                           return weigh(step, xa, x, r);
                         },
                         rrng);
          ++n_r_estimates;
        }
        log_rbar = logsumexp(terms);
        use_rbar = true;
      }

      std::fill(r_memo.begin(), r_memo.end(), std::nullopt);
      std::optional<double> r_init;

      for (std::size_t k = 0; k < n; ++k) {
        if (conditional && k == ret) {
          const double xa = step == 0 ? 0.0 : (*retained_)[step - 1];
          wtilde[k] = weigh(step, xa, first_x[k], streams[k]);
          log_w[k] = wtilde[k];
          log_r_used[k] = 0.0;
          attempts[k] = 1;
          capped[k] = 0;
          ps.particles[step * n + k] = first_x[k];
          continue;
        }

        std::size_t cur_anc = step >= 1 ? anc[k] : 0;
        auto propose_k = [&](RngStream& r) {
          const double xa =
              step == 0 ? 0.0 : ps.particle(step - 1, cur_anc);
          return propose(step, xa, r);
        };
        auto weigh_k = [&](double x, RngStream& r) {
          const double xa =
              step == 0 ? 0.0 : ps.particle(step - 1, cur_anc);
          return weigh(step, xa, x, r);
        };
        auto on_reject = [&](RngStream& r) {
          if (prc && prc->scope == PrcScope::ancestor_and_move && step >= 1) {
            cur_anc = prev_cat->draw(r);
          }
        };

        PrcResult res{first_x[k], wtilde[k], 1, false};
        if (prc_active) {
          res = prc_propagate(log_c, PrcAttempt{first_x[k], wtilde[k]},
                              propose_k, weigh_k, on_reject,
                              prc->max_attempts, streams[k]);
        }

        double log_r = 0.0;
        if (need_r) {
          if (step == 0) {
            // r(c_1) does not depend on any ancestor; estimate it once and
            // share it.
            if (!r_init) {
              RngStream rrng = root_.substream(kRTag, 0, 0);
              r_init = estimate_log_r(
                  log_c, prc->r_draws,
                  [&](RngStream& r) { return propose(0, 0.0, r); },
                  [&](double x, RngStream& r) { return weigh(0, 0.0, x, r); },
                  rrng);
              ++n_r_estimates;
            }
            log_r = *r_init;
          } else if (use_rbar) {
            log_r = log_rbar;
          } else {
            const std::size_t j = cur_anc;
            if (!r_memo[j]) {
              RngStream rrng = root_.substream(kRTag, step, j);
              const double xa = ps.particle(step - 1, j);
              r_memo[j] = estimate_log_r(
                  log_c, prc->r_draws,
                  [&](RngStream& r) { return propose(step, xa, r); },
                  [&](double x, RngStream& r) {
                    return weigh(step, xa, x, r);
                  },
                  rrng);
              ++n_r_estimates;
            }
            log_r = *r_memo[j];
          }
        } else if (prc_active && log_c != neg_inf && prc->r_draws == 0) {
          ps.r_skipped = true;
        }

        anc[k] = cur_anc;
        ps.particles[step * n + k] = res.x;
        wtilde[k] = res.log_wtilde;
        log_w[k] = corrected_log_weight(res.log_wtilde, log_c, log_r);
        log_r_used[k] = log_r;
        attempts[k] = res.attempts;
        capped[k] = res.capped ? 1 : 0;
        if (prc && prc->record_particles) {
          ps.prc_records.push_back({step, k, res.log_wtilde, log_c, log_r,
                                    log_w[k], res.attempts, res.capped});
        }
      }

      if (step >= 1) {
        std::copy(anc.begin(), anc.end(),
                  ps.ancestors.begin() +
                      static_cast<std::ptrdiff_t>((step - 1) * n));
      }

      write_step_log(ps.step_logs[step], log_c, prc_active, n_r_estimates,
                     wtilde, log_r_used, attempts, capped);

      std::copy(log_w.begin(), log_w.end(),
                ps.log_weights.begin() +
                    static_cast<std::ptrdiff_t>(step * n));
      std::span<double> norm_row(ps.norm_weights.data() + step * n, n);
      if (!normalize_log_weights(log_w, norm_row)) {
        ps.log_increments[step] = neg_inf;
        ps.log_ml = neg_inf;
        ps.collapsed_at = static_cast<std::ptrdiff_t>(step);
        return ps;
      }
      ps.log_increments[step] =
          logsumexp(log_w) - std::log(static_cast<double>(n));
      ps.log_ml += ps.log_increments[step];
      ps.step_logs[step].ess = effective_sample_size(norm_row);
    }
    return ps;
  }

 private:
  double propose(std::size_t step, double x_prev, RngStream& rng) const {
    if (step == 0) {
      if constexpr (HasGuidedInitialProposal<M>) {
        return model_.initial_proposal_sample(theta_, y_[0], rng);
      } else {
        return model_.initial_sample(theta_, rng);
      }
    }
    if constexpr (HasGuidedProposal<M>) {
      return model_.proposal_sample(theta_, x_prev, y_[step], rng);
    } else {
      return model_.transition_sample(theta_, x_prev, rng);
    }
  }

  // Pre-control incremental weight of a proposed x: local likelihood (or
  // its ABC estimate) times transition/proposal ratio. Equal log densities
  // cancel without arithmetic so the bootstrap path costs nothing.
  double weigh(std::size_t step, double x_prev, double x,
               RngStream& rng) const {
    double lg = cfg_.abc ? abc_log_local_likelihood(model_, theta_, x,
                                                    y_[step], *cfg_.abc, rng)
                         : model_.observation_logpdf(theta_, x, y_[step]);
    if (step == 0) {
      if constexpr (HasGuidedInitialProposal<M>) {
        const double lf = model_.initial_logpdf(theta_, x);
        const double lq = model_.initial_proposal_logpdf(theta_, y_[0], x);
        if (lf != lq) lg += lf - lq;
      }
      return lg;
    }
    if constexpr (HasGuidedProposal<M>) {
      const double lf = model_.transition_logpdf(theta_, x_prev, x);
      const double lq = model_.proposal_logpdf(theta_, x_prev, y_[step], x);
      if (lf != lq) lg += lf - lq;
    }
    return lg;
  }

  static void write_step_log(StepLog& sl, double log_c, bool prc_active,
                             std::size_t n_r_estimates,
                             const std::vector<double>& wtilde,
                             const std::vector<double>& log_r_used,
                             const std::vector<std::size_t>& attempts,
                             const std::vector<std::uint8_t>& capped) {
    const auto n = wtilde.size();
    sl.log_c = log_c;
    sl.n_r_estimates = n_r_estimates;
    std::size_t zero_count = 0, finite_count = 0, total_attempts = 0;
    double sum_finite = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (wtilde[k] == neg_inf) {
        ++zero_count;
      } else {
        ++finite_count;
        sum_finite += wtilde[k];
      }
      total_attempts += attempts[k];
      sl.cap_hits += capped[k];
    }
    sl.frac_zero_incr =
        static_cast<double>(zero_count) / static_cast<double>(n);
    sl.mean_log_incr =
        finite_count > 0 ? sum_finite / static_cast<double>(finite_count)
                         : neg_inf;
    sl.mean_attempts =
        static_cast<double>(total_attempts) / static_cast<double>(n);
    if (prc_active && log_c != neg_inf) {
      double mn = log_r_used[0], mx = log_r_used[0], sum = 0.0;
      for (double lr : log_r_used) {
        mn = std::min(mn, lr);
        mx = std::max(mx, lr);
        sum += lr;
      }
      sl.log_r_min = mn;
      sl.log_r_max = mx;
      sl.log_r_mean = sum / static_cast<double>(n);
    }
  }

  const M& model_;
  std::span<const double> theta_;
  std::span<const double> y_;
  const FilterConfig& cfg_;
  const std::vector<double>* retained_;
  RngStream root_;
};

}  // namespace detail

// Sequential importance resampling over y with per-step resampling. The
// marginal-likelihood estimate is the product over steps of the mean
// unnormalized (corrected) weight, accumulated in log space in step order.
// All incremental weights zero at some step yields a collapsed system with
// log_ml == -inf rather than an exception, so a pseudo-marginal consumer
// can treat it as a rejected proposal. Consumes exactly one value from rng
// as the sweep's stream key.
template <StateSpaceModel M>
ParticleSystem run_filter(const M& model, std::span<const double> theta,
                          std::span<const double> y, const FilterConfig& cfg,
                          RngStream& rng) {
  validate_filter_config(cfg);
  if (y.empty()) throw std::invalid_argument("filter: empty observations");
  if (!model.in_support(theta)) {
    throw std::invalid_argument("filter: theta outside prior support");
  }
  detail::FilterSweep<M> sweep(model, theta, y, cfg, nullptr, rng);
  return sweep.run();
}

// Conditional sweep for Particle Gibbs: slot N-1 carries retained_path with
// its ancestor pinned, everything else is propagated and resampled
// normally (multinomial draws for the free slots regardless of the
// configured scheme). Rejection control and ABC weighting are not defined
// for the pinned slot and are rejected here.
template <StateSpaceModel M>
ParticleSystem run_conditional_filter(const M& model,
                                      std::span<const double> theta,
                                      std::span<const double> y,
                                      const FilterConfig& cfg,
                                      const std::vector<double>& retained_path,
                                      RngStream& rng) {
  validate_filter_config(cfg);
  if (y.empty()) throw std::invalid_argument("filter: empty observations");
  if (retained_path.size() != y.size()) {
    throw std::invalid_argument(
        "conditional filter: retained path length differs from data length");
  }
  if (cfg.prc && cfg.prc->policy != ThresholdPolicy::disabled) {
    throw std::invalid_argument(
        "conditional filter: rejection control is not supported");
  }
  if (cfg.abc) {
    throw std::invalid_argument(
        "conditional filter: ABC weighting is not supported");
  }
  if (!model.in_support(theta)) {
    throw std::invalid_argument("filter: theta outside prior support");
  }
  detail::FilterSweep<M> sweep(model, theta, y, cfg, &retained_path, rng);
  return sweep.run();
}

// Likelihood-free sweep of the combined ABC + rejection-control algorithm:
// plain SIR structure with the local likelihood replaced by its
// pseudo-observation estimate and moves passed through rejection control.
template <StateSpaceModel M>
ParticleSystem run_abc_prc_filter(const M& model, std::span<const double> theta,
                                  std::span<const double> y,
                                  const FilterConfig& filter_cfg,
                                  const AbcConfig& abc_cfg,
                                  const PrcConfig& prc_cfg, RngStream& rng) {
  FilterConfig cfg = filter_cfg;
  cfg.abc = abc_cfg;
  cfg.prc = prc_cfg;
  return run_filter(model, theta, y, cfg, rng);
}

inline double abc_marginal_likelihood(const ParticleSystem& ps) {
  return ps.log_ml;
}

// Draws one genealogical trajectory: terminal index from the final weights,
// then ancestor backtracing.
inline std::vector<double> sample_trajectory(const ParticleSystem& ps,
                                             RngStream& rng) {
  if (ps.collapsed()) {
    throw std::logic_error("sample_trajectory: collapsed particle system");
  }
  const std::size_t t_len = ps.n_steps;
  const std::size_t n = ps.n_particles;
  CategoricalSampler cat(std::span<const double>(
      ps.norm_weights.data() + (t_len - 1) * n, n));
  std::size_t k = cat.draw(rng);
  std::vector<double> path(t_len);
  for (std::size_t step = t_len; step-- > 0;) {
    path[step] = ps.particle(step, k);
    if (step > 0) k = ps.ancestor(step, k);
  }
  return path;
}

}  // namespace pmcmc

#endif
