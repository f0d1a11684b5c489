#ifndef PMCMC_ADAPTIVE_HPP
#define PMCMC_ADAPTIVE_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "pmcmc/rng.hpp"

namespace pmcmc {

enum class ProposalKind { random_walk, adaptive_metropolis };

struct ProposalConfig {
  ProposalKind kind = ProposalKind::random_walk;
  std::vector<double> sigma0;  // diagonal standard deviations
  std::size_t am_start = 5000;
  double am_beta = 0.05;
  double am_scale = 2.38 * 2.38;       // divided by dim at use
  double am_safety_scale = 0.1 * 0.1;  // divided by dim at use
};

inline void validate_proposal_config(const ProposalConfig& cfg,
                                     std::size_t dim) {
  if (cfg.sigma0.size() != dim) {
    throw std::invalid_argument(
        "proposal: sigma0 length differs from parameter dimension");
  }
  if (cfg.am_start < 1) {
    throw std::invalid_argument("proposal: am_start must be >= 1");
  }
  if (!(cfg.am_beta > 0.0 && cfg.am_beta < 1.0)) {
    throw std::invalid_argument("proposal: am_beta must lie in (0, 1)");
  }
}

// Random-walk parameter proposal with optional covariance adaptation.
// Before am_start states have been observed the kernel is N(theta,
// diag(sigma0^2)); afterwards it mixes the scaled running empirical
// covariance with a small fixed safety component:
//   (1 - beta) N(theta, (2.38^2/d) Cov) + beta N(theta, (0.1^2/d) I).
// Both components are symmetric in (theta, theta*) for the covariance held
// at proposal time, so callers may take the proposal ratio as 1. A singular
// running covariance falls back to the safety component alone.
class AdaptiveProposal {
 public:
  enum class Mode { initial, adapted, safety };

  AdaptiveProposal(const ProposalConfig& cfg, std::size_t dim)
      : cfg_(cfg), dim_(dim), mean_(dim, 0.0), m2_(dim * dim, 0.0) {
    validate_proposal_config(cfg, dim);
  }

  // Feed the chain's current state after each iteration (and once at
  // initialization). Welford update of the running mean and covariance.
  void observe(std::span<const double> theta) {
    ++n_obs_;
    const double inv_n = 1.0 / static_cast<double>(n_obs_);
    std::vector<double> delta(dim_);
    for (std::size_t i = 0; i < dim_; ++i) {
      delta[i] = theta[i] - mean_[i];
      mean_[i] += delta[i] * inv_n;
    }
    for (std::size_t i = 0; i < dim_; ++i) {
      const double post_i = theta[i] - mean_[i];
      for (std::size_t j = 0; j <= i; ++j) {
        m2_[i * dim_ + j] += delta[j] * post_i;
      }
    }
  }

  bool adapting() const {
    return cfg_.kind == ProposalKind::adaptive_metropolis &&
           n_obs_ >= cfg_.am_start;
  }

  std::vector<double> propose(std::span<const double> theta, RngStream& rng) {
    std::vector<double> out(theta.begin(), theta.end());
    if (!adapting()) {
      last_mode_ = Mode::initial;
      for (std::size_t i = 0; i < dim_; ++i) {
        out[i] += cfg_.sigma0[i] * rng.normal();
      }
      return out;
    }
    const double d = static_cast<double>(dim_);
    bool safety = rng.uniform() < cfg_.am_beta;
    std::vector<double> chol;
    if (!safety) {
      chol = scaled_cholesky(cfg_.am_scale / d);
      if (chol.empty()) safety = true;  // singular history covariance
    }
    if (safety) {
      last_mode_ = Mode::safety;
      const double sd = std::sqrt(cfg_.am_safety_scale / d);
      for (std::size_t i = 0; i < dim_; ++i) {
        out[i] += sd * rng.normal();
      }
      return out;
    }
    last_mode_ = Mode::adapted;
    std::vector<double> z(dim_);
    for (auto& zi : z) zi = rng.normal();
    for (std::size_t i = 0; i < dim_; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j <= i; ++j) {
        s += chol[i * dim_ + j] * z[j];
      }
      out[i] += s;
    }
    return out;
  }

  // Running covariance (sample form, n-1 denominator), for tests against a
  // batch recomputation.
  std::vector<double> covariance() const {
    std::vector<double> cov(dim_ * dim_, 0.0);
    if (n_obs_ < 2) return cov;
    const double denom = static_cast<double>(n_obs_ - 1);
    for (std::size_t i = 0; i < dim_; ++i) {
      for (std::size_t j = 0; j <= i; ++j) {
        cov[i * dim_ + j] = m2_[i * dim_ + j] / denom;
        cov[j * dim_ + i] = cov[i * dim_ + j];
      }
    }
    return cov;
  }

  std::size_t n_observed() const { return n_obs_; }
  Mode last_mode() const { return last_mode_; }

 private:
  // Lower Cholesky factor of scale * covariance, empty on failure.
  std::vector<double> scaled_cholesky(double scale) const {
    if (n_obs_ < 2) return {};
    std::vector<double> l(dim_ * dim_, 0.0);
    const double denom = static_cast<double>(n_obs_ - 1);
    for (std::size_t i = 0; i < dim_; ++i) {
      for (std::size_t j = 0; j <= i; ++j) {
        double s = scale * m2_[i * dim_ + j] / denom;
        for (std::size_t k = 0; k < j; ++k) {
          s -= l[i * dim_ + k] * l[j * dim_ + k];
        }
        if (i == j) {
          if (!(s > 1e-300) || !std::isfinite(s)) return {};
          l[i * dim_ + i] = std::sqrt(s);
        } else {
          l[i * dim_ + j] = s / l[j * dim_ + j];
        }
      }
    }
    return l;
  }

  ProposalConfig cfg_;
  std::size_t dim_;
  std::size_t n_obs_ = 0;
  std::vector<double> mean_;
  std::vector<double> m2_;  // lower triangle of sum of outer products
  Mode last_mode_ = Mode::initial;
};

}  // namespace pmcmc

#endif
