#include "domar/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "domar/error.hpp"

namespace domar::stats {

void Sum::add(double x) {
  double t = sum_ + x;
  if (std::fabs(sum_) >= std::fabs(x)) {
    comp_ += (sum_ - t) + x;
  } else {
    comp_ += (x - t) + sum_;
  }
  sum_ = t;
}

double sum(std::span<const double> xs) {
  Sum s;
  for (double x : xs) s.add(x);
  return s.value();
}

double mean(std::span<const double> xs) {
  if (xs.empty()) fail(ErrorKind::kDegenerate, "mean of empty sample");
  return sum(xs) / static_cast<double>(xs.size());
}

double sample_sd(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  double m = mean(xs);
  Sum ss;
  for (double x : xs) ss.add((x - m) * (x - m));
  return std::sqrt(ss.value() / static_cast<double>(xs.size() - 1));
}

double nearest_rank(std::span<const double> xs, double p) {
  if (xs.empty()) fail(ErrorKind::kDegenerate, "percentile of empty sample");
  if (!(p >= 0.0 && p <= 1.0)) {
    fail(ErrorKind::kParameter, fmt::format("percentile level {} outside [0, 1]", p));
  }
  std::vector<double> sorted(xs.begin(), xs.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  // Guard against p * n landing a hair above an integer through rounding.
  double rank = std::ceil(p * n - 1e-9);
  auto idx = static_cast<std::size_t>(std::clamp(rank, 1.0, n)) - 1;
  return sorted[idx];
}

double weighted_nearest_rank(std::span<const double> xs, std::span<const double> weights,
                             double p) {
  if (xs.empty() || xs.size() != weights.size()) {
    fail(ErrorKind::kDegenerate, "weighted percentile needs matching nonempty inputs");
  }
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  double total = sum(weights);
  if (!(total > 0.0)) fail(ErrorKind::kDegenerate, "weighted percentile with zero total weight");
  Sum cum;
  for (std::size_t i : order) {
    cum.add(weights[i]);
    if (cum.value() / total >= p - 1e-12) return xs[i];
  }
  return xs[order.back()];
}

}  // namespace domar::stats
