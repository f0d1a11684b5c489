#ifndef PMCMC_DIAGNOSTICS_HPP
#define PMCMC_DIAGNOSTICS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "pmcmc/math.hpp"

namespace pmcmc {

// Posterior-mean trajectory from stored path samples (row-major n_paths x
// path_len), skipping the first burn_in rows. Order of the remaining rows
// is irrelevant to the result.
inline std::vector<double> mmse_path(std::span<const double> paths,
                                     std::size_t n_paths,
                                     std::size_t path_len,
                                     std::size_t burn_in) {
  if (burn_in >= n_paths) {
    throw std::invalid_argument("mmse_path: burn_in leaves no samples");
  }
  std::vector<double> est(path_len, 0.0);
  const std::size_t used = n_paths - burn_in;
  for (std::size_t row = burn_in; row < n_paths; ++row) {
    for (std::size_t n = 0; n < path_len; ++n) {
      est[n] += paths[row * path_len + n];
    }
  }
  for (auto& v : est) v /= static_cast<double>(used);
  return est;
}

inline double rmse(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(a.size()));
}

// Mean acceptance per window of `window` iterations; the final window may
// be partial.
inline std::vector<double> acceptance_rate(
    std::span<const std::uint8_t> accept_flags, std::size_t window) {
  if (window < 1) {
    throw std::invalid_argument("acceptance_rate: window must be >= 1");
  }
  std::vector<double> rates;
  std::size_t i = 0;
  while (i < accept_flags.size()) {
    const std::size_t end = std::min(i + window, accept_flags.size());
    double s = 0.0;
    for (std::size_t j = i; j < end; ++j) s += accept_flags[j];
    rates.push_back(s / static_cast<double>(end - i));
    i = end;
  }
  return rates;
}

// Biased-normalized autocorrelation (1/n sums, lag-0 variance in the
// denominator). A constant series is defined as 1 at lag 0 and 0 beyond.
inline std::vector<double> autocorrelation(std::span<const double> series,
                                           std::size_t max_lag) {
  const std::size_t n = series.size();
  if (n <= max_lag) {
    throw std::invalid_argument("autocorrelation: series shorter than lags");
  }
  const double m = mean(series);
  double c0 = 0.0;
  for (double x : series) c0 += (x - m) * (x - m);
  std::vector<double> acf(max_lag + 1, 0.0);
  acf[0] = 1.0;
  if (c0 == 0.0) return acf;
  for (std::size_t lag = 1; lag <= max_lag; ++lag) {
    double c = 0.0;
    for (std::size_t t = 0; t + lag < n; ++t) {
      c += (series[t] - m) * (series[t + lag] - m);
    }
    acf[lag] = c / c0;
  }
  return acf;
}

// Lengths of maximal runs of consecutive identical states, from the
// per-iteration repeat flags a chain records (flag[i] set when state i
// equals state i-1 bit for bit). Lengths sum to the chain length.
inline std::vector<std::size_t> freeze_runs_from_flags(
    std::span<const std::uint8_t> repeat_flags) {
  std::vector<std::size_t> runs;
  for (std::size_t i = 0; i < repeat_flags.size(); ++i) {
    if (i > 0 && repeat_flags[i]) {
      ++runs.back();
    } else {
      runs.push_back(1);
    }
  }
  return runs;
}

// Same, from full (unthinned) theta and path matrices. Identity means bit
// equality of the joint state, which is exactly what a rejected move
// produces.
inline std::vector<std::size_t> freeze_runs(std::span<const double> thetas,
                                            std::span<const double> paths,
                                            std::size_t n_iters,
                                            std::size_t theta_dim,
                                            std::size_t path_len) {
  std::vector<std::size_t> runs;
  for (std::size_t i = 0; i < n_iters; ++i) {
    bool repeat = i > 0;
    if (repeat) {
      for (std::size_t j = 0; j < theta_dim && repeat; ++j) {
        repeat = thetas[i * theta_dim + j] == thetas[(i - 1) * theta_dim + j];
      }
      for (std::size_t j = 0; j < path_len && repeat; ++j) {
        repeat = paths[i * path_len + j] == paths[(i - 1) * path_len + j];
      }
    }
    if (repeat) {
      ++runs.back();
    } else {
      runs.push_back(1);
    }
  }
  return runs;
}

inline std::map<std::size_t, std::size_t> freeze_histogram(
    std::span<const std::size_t> runs) {
  std::map<std::size_t, std::size_t> hist;
  for (auto r : runs) ++hist[r];
  return hist;
}

// Two-sample Kolmogorov-Smirnov distance sup_x |F_a(x) - F_b(x)|.
inline double ks_distance(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) {
    throw std::invalid_argument("ks_distance: empty sample");
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na -
                             static_cast<double>(j) / nb));
  }
  return d;
}

// Markov-chain effective sample size via Geyer's initial positive sequence:
// n / (1 + 2 sum of paired autocorrelations while the pair sums stay
// positive).
inline double ess_mcmc(std::span<const double> series) {
  const std::size_t n = series.size();
  if (n < 4) return static_cast<double>(n);
  const std::size_t max_lag = std::min<std::size_t>(n - 1, 1000);
  const auto acf = autocorrelation(series, max_lag);
  double s = 0.0;
  for (std::size_t lag = 1; lag + 1 <= max_lag; lag += 2) {
    const double pair = acf[lag] + acf[lag + 1];
    if (pair <= 0.0) break;
    s += pair;
  }
  const double denom = 1.0 + 2.0 * s;
  return static_cast<double>(n) / std::max(denom, 1.0e-12);
}

}  // namespace pmcmc

#endif
