#ifndef PMCMC_MODEL_HPP
#define PMCMC_MODEL_HPP

#include <concepts>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "pmcmc/rng.hpp"

namespace pmcmc {

// Scalar-state, scalar-observation state-space model. Densities are returned
// in log space and must be -inf (never NaN) outside the distribution's
// support. theta outside prior support gives log_prior == -inf; samplers and
// density evaluations are only called with theta in support.
template <typename M>
concept StateSpaceModel =
    requires(const M m, std::span<const double> theta, double x, double xp,
             double y, RngStream& rng, std::span<double> out) {
      { M::param_dim } -> std::convertible_to<std::size_t>;
      { m.initial_sample(theta, rng) } -> std::same_as<double>;
      { m.initial_logpdf(theta, x) } -> std::same_as<double>;
      { m.transition_sample(theta, xp, rng) } -> std::same_as<double>;
      { m.transition_logpdf(theta, xp, x) } -> std::same_as<double>;
      { m.observation_sample(theta, x, rng) } -> std::same_as<double>;
      { m.observation_logpdf(theta, x, y) } -> std::same_as<double>;
      { m.log_prior(theta) } -> std::same_as<double>;
      { m.in_support(theta) } -> std::same_as<bool>;
      { m.sample_prior(rng, out) } -> std::same_as<void>;
    };

// Optional guided proposal q(x_n | y_n, x_{n-1}). Models without these
// methods get the bootstrap default (propose from the transition), in which
// case the f/q weight factor cancels exactly rather than numerically.
template <typename M>
concept HasGuidedProposal =
    requires(const M m, std::span<const double> theta, double xp, double x,
             double y, RngStream& rng) {
      { m.proposal_sample(theta, xp, y, rng) } -> std::same_as<double>;
      { m.proposal_logpdf(theta, xp, y, x) } -> std::same_as<double>;
    };

template <typename M>
concept HasGuidedInitialProposal =
    requires(const M m, std::span<const double> theta, double x, double y,
             RngStream& rng) {
      { m.initial_proposal_sample(theta, y, rng) } -> std::same_as<double>;
      { m.initial_proposal_logpdf(theta, y, x) } -> std::same_as<double>;
    };

struct SimulatedData {
  std::vector<double> x;
  std::vector<double> y;
};

template <StateSpaceModel M>
SimulatedData simulate(const M& model, std::span<const double> theta,
                       std::size_t n_steps, std::uint64_t seed) {
  if (n_steps < 1) throw std::invalid_argument("simulate: n_steps < 1");
  if (!model.in_support(theta)) {
    throw std::invalid_argument("simulate: theta outside prior support");
  }
  RngStream rng(seed);
  SimulatedData data;
  data.x.resize(n_steps);
  data.y.resize(n_steps);
  data.x[0] = model.initial_sample(theta, rng);
  data.y[0] = model.observation_sample(theta, data.x[0], rng);
  for (std::size_t n = 1; n < n_steps; ++n) {
    data.x[n] = model.transition_sample(theta, data.x[n - 1], rng);
    data.y[n] = model.observation_sample(theta, data.x[n], rng);
  }
  return data;
}

}  // namespace pmcmc

#endif
