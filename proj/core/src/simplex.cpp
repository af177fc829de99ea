#include "domar/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "domar/error.hpp"

namespace domar::simplex {

namespace {

using Point = std::vector<double>;

struct Vertex {
  Point x;
  double f;
};

double distance(const Point& a, const Point& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::fabs(a[i] - b[i]));
  return d;
}

class Search {
 public:
  Search(const Objective& f, const Options& opt, Result& stats) : f_(f), opt_(opt), stats_(stats) {}

  double eval(const Point& x) {
    ++stats_.evaluations;
    double v = f_(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  }

  // One Nelder-Mead run from a fresh simplex around `start`.
  Vertex run(const Point& start, double step) {
    const std::size_t n = start.size();
    std::vector<Vertex> s;
    s.push_back({start, eval(start)});
    for (std::size_t i = 0; i < n; ++i) {
      Point x = start;
      x[i] += step;
      s.push_back({x, eval(x)});
    }
    auto by_f = [](const Vertex& a, const Vertex& b) { return a.f < b.f; };

    while (stats_.iterations < opt_.max_iterations) {
      std::stable_sort(s.begin(), s.end(), by_f);
      double diam = 0.0;
      for (std::size_t j = 1; j <= n; ++j) diam = std::max(diam, distance(s[j].x, s[0].x));
      stats_.diameter = diam;
      if (diam < opt_.x_tolerance && std::fabs(s[n].f - s[0].f) <= opt_.f_tolerance) break;
      ++stats_.iterations;

      Point c(n, 0.0);
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) c[i] += s[j].x[i] / static_cast<double>(n);
      }
      auto along = [&](double t) {
        Point p(n);
        for (std::size_t i = 0; i < n; ++i) p[i] = c[i] + t * (s[n].x[i] - c[i]);
        return p;
      };

      Point xr = along(-1.0);
      double fr = eval(xr);
      if (fr < s[0].f) {
        Point xe = along(-2.0);
        double fe = eval(xe);
        s[n] = fe < fr ? Vertex{xe, fe} : Vertex{xr, fr};
      } else if (fr < s[n - 1].f) {
        s[n] = {xr, fr};
      } else {
        const bool outside = fr < s[n].f;
        Point xc = along(outside ? -0.5 : 0.5);
        double fc = eval(xc);
        if (fc < (outside ? fr : s[n].f)) {
          s[n] = {xc, fc};
        } else {
          for (std::size_t j = 1; j <= n; ++j) {
            for (std::size_t i = 0; i < n; ++i) {
              s[j].x[i] = s[0].x[i] + 0.5 * (s[j].x[i] - s[0].x[i]);
            }
            s[j].f = eval(s[j].x);
          }
        }
      }
    }
    std::stable_sort(s.begin(), s.end(), by_f);
    return s[0];
  }

 private:
  const Objective& f_;
  const Options& opt_;
  Result& stats_;
};

}  // namespace

Result minimize(const Objective& f, std::span<const double> start, const Options& options) {
  if (start.empty()) fail(ErrorKind::kParameter, "simplex search needs at least one dimension");
  Result result;
  Search search(f, options, result);
  Vertex best = search.run(Point(start.begin(), start.end()), options.initial_step);
  // Restart around the incumbent until a fresh simplex stops improving.
  for (int r = 0; r < options.restarts; ++r) {
    const double step = std::max(options.initial_step * 0.1, 100.0 * options.x_tolerance);
    Vertex again = search.run(best.x, step);
    const bool improved = again.f < best.f;
    if (again.f <= best.f) best = again;
    if (!improved) break;
  }
  result.x = best.x;
  result.value = best.f;
  return result;
}

}  // namespace domar::simplex
