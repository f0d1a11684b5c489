#ifndef PMCMC_MATH_HPP
#define PMCMC_MATH_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

namespace pmcmc {

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

inline double log_normal_pdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) -
         0.5 * std::log(2.0 * std::numbers::pi);
}

inline double normal_cdf(double x, double mean, double sd) {
  return 0.5 * std::erfc(-(x - mean) / (sd * std::numbers::sqrt2));
}

// log(sum_i exp(v_i)) with the max subtracted first. All -inf gives -inf.
inline double logsumexp(std::span<const double> v) {
  double mx = neg_inf;
  for (double x : v) {
    if (x > mx) mx = x;
  }
  if (mx == neg_inf) return neg_inf;
  double sum = 0.0;
  for (double x : v) {
    sum += std::exp(x - mx);
  }
  return mx + std::log(sum);
}

inline double log_mean_exp(std::span<const double> v) {
  if (v.empty()) return neg_inf;
  const double lse = logsumexp(v);
  return lse == neg_inf ? neg_inf
                        : lse - std::log(static_cast<double>(v.size()));
}

// Exponentiates log weights in place into normalized weights. Returns false
// when every entry is -inf (nothing to normalize).
inline bool normalize_log_weights(std::span<const double> log_w,
                                  std::span<double> out) {
  double mx = neg_inf;
  for (double x : log_w) {
    if (x > mx) mx = x;
  }
  if (mx == neg_inf) return false;
  double sum = 0.0;
  for (std::size_t i = 0; i < log_w.size(); ++i) {
    out[i] = std::exp(log_w[i] - mx);
    sum += out[i];
  }
  for (auto& w : out) {
    w /= sum;
  }
  return true;
}

inline double effective_sample_size(std::span<const double> norm_w) {
  double sum_sq = 0.0;
  for (double w : norm_w) {
    sum_sq += w * w;
  }
  return sum_sq > 0.0 ? 1.0 / sum_sq : 0.0;
}

inline double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double variance(std::span<const double> v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

// Order statistic for the empirical lower quantile: the ceil(alpha*n)-th
// smallest value, with a small slack so alpha*n that is integral up to
// rounding does not land one slot high.
inline double lower_quantile(std::vector<double> v, double alpha) {
  const auto n = static_cast<double>(v.size());
  auto rank = static_cast<std::size_t>(std::ceil(alpha * n - 1e-9));
  if (rank < 1) rank = 1;
  if (rank > v.size()) rank = v.size();
  auto nth = v.begin() + static_cast<std::ptrdiff_t>(rank - 1);
  std::nth_element(v.begin(), nth, v.end());
  return *nth;
}

}  // namespace pmcmc

#endif
