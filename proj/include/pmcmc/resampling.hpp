#ifndef PMCMC_RESAMPLING_HPP
#define PMCMC_RESAMPLING_HPP

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "pmcmc/rng.hpp"

namespace pmcmc {

enum class Resampling { multinomial, systematic };

// Cumulative-sum categorical sampler over nonnegative weights. Weights need
// not be normalized; a zero total is an error.
class CategoricalSampler {
 public:
  explicit CategoricalSampler(std::span<const double> weights)
      : cum_(weights.size()) {
    double total = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (weights[i] < 0.0) {
        throw std::invalid_argument("categorical: negative weight");
      }
      total += weights[i];
      cum_[i] = total;
    }
    if (!(total > 0.0)) {
      throw std::invalid_argument("categorical: total weight is zero");
    }
  }

  std::size_t draw(RngStream& rng) const {
    const double u = rng.uniform() * cum_.back();
    auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
    if (it == cum_.end()) return cum_.size() - 1;
    return static_cast<std::size_t>(it - cum_.begin());
  }

  double total() const { return cum_.back(); }

 private:
  std::vector<double> cum_;
};

// i.i.d. categorical draws, one uniform per slot, in slot order.
inline void multinomial_resample(std::span<const double> weights,
                                 std::span<std::size_t> ancestors,
                                 RngStream& rng) {
  CategoricalSampler sampler(weights);
  for (auto& a : ancestors) {
    a = sampler.draw(rng);
  }
}

// Stratified positions (k + u) / N sharing a single uniform u; output comes
// out sorted. Equal weights map every slot to its own index.
inline void systematic_resample(std::span<const double> weights,
                                std::span<std::size_t> ancestors,
                                RngStream& rng) {
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw std::invalid_argument("systematic: negative weight");
    total += w;
  }
  if (!(total > 0.0)) {
    throw std::invalid_argument("systematic: total weight is zero");
  }
  const double u = rng.uniform();
  const auto n = static_cast<double>(ancestors.size());
  std::size_t j = 0;
  double cum = weights[0];
  for (std::size_t k = 0; k < ancestors.size(); ++k) {
    const double pos = (static_cast<double>(k) + u) / n * total;
    while (cum < pos && j + 1 < weights.size()) {
      ++j;
      cum += weights[j];
    }
    ancestors[k] = j;
  }
}

inline void resample(std::span<const double> weights,
                     std::span<std::size_t> ancestors, Resampling scheme,
                     RngStream& rng) {
  if (scheme == Resampling::multinomial) {
    multinomial_resample(weights, ancestors, rng);
  } else {
    systematic_resample(weights, ancestors, rng);
  }
}

}  // namespace pmcmc

#endif
