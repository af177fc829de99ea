#pragma once

#include <span>
#include <vector>

namespace domar::stats {

/// Neumaier-compensated accumulator; summation order is the caller's order,
/// so results are reproducible run to run.
class Sum {
 public:
  void add(double x);
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

double sum(std::span<const double> xs);
double mean(std::span<const double> xs);
/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double sample_sd(std::span<const double> xs);

/// Nearest-rank percentile: the ceil(p * n)-th smallest value (1-based),
/// clamped to [1, n]. `p` in [0, 1].
double nearest_rank(std::span<const double> xs, double p);

/// Weighted nearest-rank: smallest x whose cumulative weight share >= p.
double weighted_nearest_rank(std::span<const double> xs, std::span<const double> weights,
                             double p);

}  // namespace domar::stats
