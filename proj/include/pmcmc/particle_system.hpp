#ifndef PMCMC_PARTICLE_SYSTEM_HPP
#define PMCMC_PARTICLE_SYSTEM_HPP

#include <cstddef>
#include <vector>

#include "pmcmc/math.hpp"

namespace pmcmc {

// Per-step filter summary. The threshold/attempt/r fields are only
// meaningful when rejection control ran; frac_zero_incr and mean_log_incr
// describe the pre-correction incremental weights (equal to the local
// likelihood estimate under a bootstrap proposal).
struct StepLog {
  double ess = 0.0;
  double log_c = neg_inf;
  double mean_attempts = 1.0;
  std::size_t cap_hits = 0;
  std::size_t n_r_estimates = 0;
  double log_r_mean = 0.0;
  double log_r_min = 0.0;
  double log_r_max = 0.0;
  double frac_zero_incr = 0.0;
  double mean_log_incr = neg_inf;
};

// One accepted particle move under rejection control, kept only when
// PrcConfig::record_particles is set. log_w is the corrected weight actually
// stored by the filter.
struct PrcParticleRecord {
  std::size_t n = 0;
  std::size_t k = 0;
  double log_wtilde = neg_inf;
  double log_c = neg_inf;
  double log_r = 0.0;
  double log_w = neg_inf;
  std::size_t attempts = 1;
  bool capped = false;
};

// Output of one filter sweep over n_steps observations with n_particles
// particles. Row-major layout: entry (n, k) sits at n * n_particles + k.
// log_weights holds the unnormalized (corrected) incremental log weights;
// log_ml is the in-order sum of log_increments, so recomputing that sum
// reproduces it bit for bit. A collapse (every weight zero at some step)
// leaves collapsed_at >= 0 and log_ml == -inf, with rows past the collapse
// untouched.
struct ParticleSystem {
  std::size_t n_steps = 0;
  std::size_t n_particles = 0;
  std::vector<double> particles;
  std::vector<double> log_weights;
  std::vector<double> norm_weights;
  std::vector<std::size_t> ancestors;  // (n_steps - 1) x n_particles
  std::vector<double> log_increments;
  double log_ml = 0.0;
  std::ptrdiff_t collapsed_at = -1;
  std::vector<StepLog> step_logs;
  std::vector<PrcParticleRecord> prc_records;
  bool r_skipped = false;  // rejection control ran with r_draws == 0

  bool collapsed() const { return collapsed_at >= 0; }

  double particle(std::size_t n, std::size_t k) const {
    return particles[n * n_particles + k];
  }
  double log_weight(std::size_t n, std::size_t k) const {
    return log_weights[n * n_particles + k];
  }
  double norm_weight(std::size_t n, std::size_t k) const {
    return norm_weights[n * n_particles + k];
  }
  // Ancestor of particle (n, k) for n >= 1.
  std::size_t ancestor(std::size_t n, std::size_t k) const {
    return ancestors[(n - 1) * n_particles + k];
  }

  void allocate(std::size_t t, std::size_t n) {
    n_steps = t;
    n_particles = n;
    particles.assign(t * n, 0.0);
    log_weights.assign(t * n, neg_inf);
    norm_weights.assign(t * n, 0.0);
    ancestors.assign(t > 0 ? (t - 1) * n : 0, 0);
    log_increments.assign(t, 0.0);
    step_logs.assign(t, StepLog{});
    log_ml = 0.0;
    collapsed_at = -1;
    prc_records.clear();
    r_skipped = false;
  }
};

}  // namespace pmcmc

#endif
