#pragma once

#include <functional>
#include <span>
#include <vector>

namespace domar::simplex {

struct Options {
  double initial_step = 0.05;  // edge length of the starting simplex per coordinate
  int max_iterations = 5000;
  double x_tolerance = 1e-10;  // stop once the simplex diameter falls below this...
  double f_tolerance = 1e-16;  // ...and the spread of vertex values below this
  int restarts = 2;            // fresh simplices around the incumbent after stalling
};

struct Result {
  std::vector<double> x;
  double value = 0.0;
  double diameter = 0.0;  // max distance of any vertex from the best one
  int iterations = 0;
  int evaluations = 0;
};

using Objective = std::function<double(std::span<const double>)>;

/// Nelder-Mead downhill simplex (reflection 1, expansion 2, contraction 1/2,
/// shrink 1/2). Non-finite objective values are treated as +inf.
Result minimize(const Objective& f, std::span<const double> start, const Options& options = {});

}  // namespace domar::simplex
