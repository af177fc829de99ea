#include "domar/pfe.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "domar/csv.hpp"
#include "domar/error.hpp"
#include "domar/stats.hpp"

namespace domar::pfe {

namespace {

// Monomial exponent triples (a, b, c) with a + b + c <= degree.
std::vector<std::array<int, 3>> monomials(int degree) {
  std::vector<std::array<int, 3>> out;
  for (int total = 0; total <= degree; ++total) {
    for (int a = total; a >= 0; --a) {
      for (int b = total - a; b >= 0; --b) out.push_back({a, b, total - a - b});
    }
  }
  return out;
}

double standardized(double x, double mean, double sd) { return sd > 0.0 ? (x - mean) / sd : 0.0; }

}  // namespace

FirstStage first_stage(std::span<const Observation> obs, std::size_t min_obs, int degree) {
  if (obs.size() < min_obs) {
    fail(ErrorKind::kEstimation,
         fmt::format("first stage needs at least {} observations, have {}", min_obs, obs.size()));
  }
  const auto n = static_cast<Eigen::Index>(obs.size());

  // Standardizing the regressors leaves fitted values unchanged and keeps the
  // cubic design well conditioned.
  std::array<std::vector<double>, 3> cols;
  for (const auto& o : obs) {
    cols[0].push_back(o.log_v);
    cols[1].push_back(o.log_k);
    cols[2].push_back(o.log_proxy);
  }
  std::array<std::vector<double>, 3> z;
  for (int j = 0; j < 3; ++j) {
    const double m = stats::mean(cols[j]);
    const double s = stats::sample_sd(cols[j]);
    for (double x : cols[j]) z[j].push_back(standardized(x, m, s));
  }
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = obs[static_cast<std::size_t>(i)].log_y;

  for (int d = degree; d >= 1; --d) {
    const auto terms = monomials(d);
    const auto p = static_cast<Eigen::Index>(terms.size());
    if (n <= p) continue;
    Eigen::MatrixXd x(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto r = static_cast<std::size_t>(i);
      for (Eigen::Index t = 0; t < p; ++t) {
        const auto& e = terms[static_cast<std::size_t>(t)];
        x(i, t) = std::pow(z[0][r], e[0]) * std::pow(z[1][r], e[1]) * std::pow(z[2][r], e[2]);
      }
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    qr.setThreshold(1e-10);
    if (qr.rank() < p) continue;
    Eigen::VectorXd beta = qr.solve(y);
    Eigen::VectorXd fitted = x * beta;
    FirstStage out;
    out.degree = d;
    out.fell_back = d < degree;
    out.phi.assign(fitted.data(), fitted.data() + n);
    out.residuals.resize(obs.size());
    for (std::size_t i = 0; i < obs.size(); ++i) out.residuals[i] = obs[i].log_y - out.phi[i];
    return out;
  }
  fail(ErrorKind::kEstimation, "first stage design is rank deficient at every degree");
}

void link_lags(std::span<const Observation> obs, std::vector<std::size_t>& current,
               std::vector<std::size_t>& lagged) {
  current.clear();
  lagged.clear();
  for (std::size_t i = 1; i < obs.size(); ++i) {
    if (obs[i].firm_id == obs[i - 1].firm_id && obs[i].year == obs[i - 1].year + 1) {
      current.push_back(i);
      lagged.push_back(i - 1);
    }
  }
}

double gmm_criterion(std::span<const double> phi, std::span<const Observation> obs,
                     std::span<const std::size_t> current, std::span<const std::size_t> lagged,
                     double theta_v, double theta_k, ProductivityState* state) {
  const std::size_t links = current.size();
  if (links == 0) fail(ErrorKind::kEstimation, "panel too short for dynamic moments");
  auto omega = [&](std::size_t i) {
    return phi[i] - theta_v * obs[i].log_v - theta_k * obs[i].log_k;
  };
  stats::Sum sxy, sxx;
  for (std::size_t l = 0; l < links; ++l) {
    const double w0 = omega(lagged[l]);
    sxy.add(omega(current[l]) * w0);
    sxx.add(w0 * w0);
  }
  const double rho = sxx.value() > 0.0 ? sxy.value() / sxx.value() : 0.0;
  stats::Sum gv, gk;
  if (state) {
    state->omega.resize(obs.size());
    for (std::size_t i = 0; i < obs.size(); ++i) state->omega[i] = omega(i);
    state->current.assign(current.begin(), current.end());
    state->lagged.assign(lagged.begin(), lagged.end());
    state->xi.resize(links);
    state->rho = rho;
  }
  for (std::size_t l = 0; l < links; ++l) {
    const double xi = omega(current[l]) - rho * omega(lagged[l]);
    gv.add(xi * obs[lagged[l]].log_v);
    gk.add(xi * obs[current[l]].log_k);
    if (state) state->xi[l] = xi;
  }
  const double mv = gv.value() / static_cast<double>(links);
  const double mk = gk.value() / static_cast<double>(links);
  if (state) {
    state->moment_v = mv;
    state->moment_k = mk;
  }
  return mv * mv + mk * mk;
}

std::pair<double, double> ols_elasticities(std::span<const Observation> obs) {
  const auto n = static_cast<Eigen::Index>(obs.size());
  if (n < 3) fail(ErrorKind::kEstimation, "OLS needs at least three observations");
  Eigen::MatrixXd x(n, 3);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& o = obs[static_cast<std::size_t>(i)];
    x(i, 0) = 1.0;
    x(i, 1) = o.log_v;
    x(i, 2) = o.log_k;
    y(i) = o.log_y;
  }
  Eigen::VectorXd beta = x.colPivHouseholderQr().solve(y);
  return {beta(1), beta(2)};
}

ElasticityEstimate second_stage_gmm(std::span<const double> phi, std::span<const Observation> obs,
                                    const EstimationConfig& config) {
  if (phi.size() != obs.size()) {
    fail(ErrorKind::kEstimation, "first-stage fit does not match the slice");
  }
  std::vector<std::size_t> current, lagged;
  link_lags(obs, current, lagged);
  if (current.empty()) fail(ErrorKind::kEstimation, "panel too short for dynamic moments");

  const auto [ols_v, ols_k] = ols_elasticities(obs);
  auto objective = [&](std::span<const double> t) {
    return gmm_criterion(phi, obs, current, lagged, t[0], t[1]);
  };

  ElasticityEstimate est;
  est.n_obs = obs.size();
  est.ols_objective = gmm_criterion(phi, obs, current, lagged, ols_v, ols_k);

  // 3x3 grid of starts around the OLS point. The criterion can have several
  // exact zeros; among converged runs the root nearest the OLS point wins,
  // otherwise the lowest criterion.
  const double h = config.start_offset;
  bool have = false;
  simplex::Result best;
  bool best_converged = false;
  auto distance = [&](const std::vector<double>& x) {
    return std::hypot(x[0] - ols_v, x[1] - ols_k);
  };
  for (double dv : {0.0, -h, h}) {
    for (double dk : {0.0, -h, h}) {
      const std::array<double, 2> start{ols_v + dv, ols_k + dk};
      auto r = simplex::minimize(objective, start, config.simplex);
      const bool conv = r.value < config.converged_criterion &&
                        r.diameter < config.converged_diameter && std::isfinite(r.x[0]) &&
                        std::isfinite(r.x[1]);
      bool better = !have || (conv && !best_converged);
      if (have && conv == best_converged) {
        better = conv ? distance(r.x) < distance(best.x) : r.value < best.value;
      }
      if (better) {
        best = std::move(r);
        best_converged = conv;
        have = true;
      }
    }
  }
  est.raw_theta_v = best.x[0];
  est.raw_theta_k = best.x[1];
  est.theta_v = best.x[0];
  est.theta_k = best.x[1];
  est.objective = best.value;
  est.converged = best_converged;
  return est;
}

ElasticityEstimate estimate_slice(std::span<const Observation> obs, const EstimationConfig& config) {
  auto fs = first_stage(obs, config.min_obs, config.polynomial_degree);
  auto est = second_stage_gmm(fs.phi, obs, config);
  est.first_stage_degree = fs.degree;
  if (!obs.empty()) {
    auto [lo, hi] = std::minmax_element(obs.begin(), obs.end(), [](const auto& a, const auto& b) {
      return a.year < b.year;
    });
    est.window_start = lo->year;
    est.window_end = hi->year;
  }
  return est;
}

std::vector<Observation> build_observations(const panel::PanelDataset& data,
                                            const EstimationConfig& config,
                                            std::optional<panel::IndustryCode> industry,
                                            int first_year, int last_year) {
  if (!data.provenance.lags_attached) {
    fail(ErrorKind::kState, "estimation needs prior-period capital; attach capital lags first");
  }
  std::vector<Observation> out;
  for (const auto& o : data.observations) {
    if (o.year < first_year || o.year > last_year) continue;
    if (industry && o.industry != industry) continue;
    const double sale = o.sale.value_or(0.0);
    double v = o.cogs.value_or(0.0);
    if (config.variable_input == VariableInput::kOpex) v += o.sga.value_or(0.0);
    if (!o.ppegt_lag) continue;
    double k = *o.ppegt_lag;
    if (config.capital == CapitalMeasure::kTotal) k += o.k_int_lag.value_or(0.0);
    const auto& proxy_field = config.proxy == ProxyVariable::kIcapt ? o.proxy : o.capx;
    const double x = proxy_field.value_or(0.0);
    if (!(sale > 0.0 && v > 0.0 && k > 0.0 && x > 0.0)) continue;
    out.push_back({o.firm_id, o.year, std::log(sale), std::log(v), std::log(k), std::log(x)});
  }
  return out;
}

std::vector<ElasticityEstimate> estimate_rolling(const panel::PanelDataset& data,
                                                 const EstimationConfig& config) {
  if (config.window < 1 || config.window % 2 == 0) {
    fail(ErrorKind::kParameter, "rolling window length must be a positive odd number");
  }
  const int half = config.window / 2;
  std::map<panel::IndustryCode, std::set<int>> industry_years;
  for (const auto& o : data.observations) {
    if (o.industry) industry_years[*o.industry].insert(o.year);
  }

  std::vector<ElasticityEstimate> out;
  for (const auto& [industry, years] : industry_years) {
    const int y0 = *years.begin();
    const int y1 = *years.rbegin();
    auto all = build_observations(data, config, industry, y0, y1);

    auto estimate_window = [&](int center, int a, int b) {
      std::vector<Observation> slice;
      for (const auto& o : all) {
        if (o.year >= a && o.year <= b) slice.push_back(o);
      }
      ElasticityEstimate est;
      try {
        est = estimate_slice(slice, config);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kEstimation) throw;
        est = {};
        est.n_obs = slice.size();
      }
      est.industry = industry;
      est.year = center;
      est.source_year = center;
      est.window_start = a;
      est.window_end = b;
      return est;
    };

    std::map<int, ElasticityEstimate> by_center;
    int first_center = 0;
    int last_center = 0;
    if (y1 - y0 + 1 >= config.window) {
      first_center = y0 + half;
      last_center = y1 - half;
      for (int c = first_center; c <= last_center; ++c) {
        by_center.emplace(c, estimate_window(c, c - half, c + half));
      }
    } else {
      first_center = last_center = y0 + (y1 - y0) / 2;
      by_center.emplace(first_center, estimate_window(first_center, y0, y1));
    }
    for (int year : years) {
      if (auto it = by_center.find(year); it != by_center.end()) {
        out.push_back(it->second);
        continue;
      }
      const int src = year < first_center ? first_center : last_center;
      ElasticityEstimate est = by_center.at(src);
      est.year = year;
      est.source_year = src;
      est.carried_forward = true;
      out.push_back(std::move(est));
    }
  }
  return out;
}

namespace {

// Marks values beyond mean +/- 1 sd as missing, then fills gaps by linear
// interpolation in year with nearest-value extension at the ends.
std::vector<double> clean_series(const std::vector<int>& years,
                                 const std::vector<std::optional<double>>& raw, bool& any_filled,
                                 std::vector<bool>& filled) {
  std::vector<double> present;
  for (const auto& v : raw) {
    if (v) present.push_back(*v);
  }
  std::vector<std::optional<double>> kept = raw;
  if (present.size() >= 2) {
    const double m = stats::mean(present);
    const double sd = stats::sample_sd(present);
    for (auto& v : kept) {
      if (v && std::fabs(*v - m) > sd) v.reset();
    }
  }
  std::vector<std::size_t> known;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (kept[i]) known.push_back(i);
  }
  std::vector<double> out(kept.size());
  filled.assign(kept.size(), false);
  any_filled = false;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (kept[i]) {
      out[i] = *kept[i];
      continue;
    }
    filled[i] = true;
    any_filled = true;
    auto hi = std::lower_bound(known.begin(), known.end(), i);
    if (hi == known.begin()) {
      out[i] = *kept[*hi];
    } else if (hi == known.end()) {
      out[i] = *kept[known.back()];
    } else {
      const std::size_t a = *(hi - 1), b = *hi;
      const double t = static_cast<double>(years[i] - years[a]) /
                       static_cast<double>(years[b] - years[a]);
      out[i] = *kept[a] + t * (*kept[b] - *kept[a]);
    }
  }
  return out;
}

}  // namespace

std::vector<ElasticityEstimate> postprocess_elasticities(std::vector<ElasticityEstimate> estimates,
                                                         const PostprocessOptions& options) {
  if (!(options.winsor_low >= 0.0 && options.winsor_low <= options.winsor_high &&
        options.winsor_high <= 1.0)) {
    fail(ErrorKind::kParameter, "winsorization percentiles must satisfy 0 <= low <= high <= 1");
  }
  std::sort(estimates.begin(), estimates.end(), [](const auto& a, const auto& b) {
    return std::tie(a.industry, a.year) < std::tie(b.industry, b.year);
  });

  // Group indices of directly estimated entries per industry.
  std::map<panel::IndustryCode, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    if (!estimates[i].carried_forward) groups[estimates[i].industry].push_back(i);
  }

  for (const auto& [industry, idx] : groups) {
    std::vector<int> years;
    std::vector<std::optional<double>> rv, rk;
    bool any = false;
    for (std::size_t i : idx) {
      years.push_back(estimates[i].year);
      rv.push_back(estimates[i].raw_theta_v);
      rk.push_back(estimates[i].raw_theta_k);
      any = any || (estimates[i].raw_theta_v && estimates[i].raw_theta_k);
    }
    if (!any) {
      fail(ErrorKind::kEstimation,
           fmt::format("industry {} has no usable elasticity estimate", industry));
    }
    // A year missing either elasticity is missing both.
    for (std::size_t j = 0; j < rv.size(); ++j) {
      if (!rv[j] || !rk[j]) rv[j].reset(), rk[j].reset();
    }
    bool fv = false, fk = false;
    std::vector<bool> filled_v, filled_k;
    auto cv = clean_series(years, rv, fv, filled_v);
    auto ck = clean_series(years, rk, fk, filled_k);
    for (std::size_t j = 0; j < idx.size(); ++j) {
      auto& e = estimates[idx[j]];
      e.theta_v = cv[j];
      e.theta_k = ck[j];
      e.interpolated = filled_v[j] || filled_k[j];
    }
  }

  auto winsorize = [&](const std::vector<std::size_t>& idx) {
    std::vector<double> vs, ks;
    for (std::size_t i : idx) {
      vs.push_back(*estimates[i].theta_v);
      ks.push_back(*estimates[i].theta_k);
    }
    if (vs.empty()) return;
    const double v_lo = stats::nearest_rank(vs, options.winsor_low);
    const double v_hi = stats::nearest_rank(vs, options.winsor_high);
    const double k_lo = stats::nearest_rank(ks, options.winsor_low);
    const double k_hi = stats::nearest_rank(ks, options.winsor_high);
    for (std::size_t i : idx) {
      estimates[i].theta_v = std::clamp(*estimates[i].theta_v, v_lo, v_hi);
      estimates[i].theta_k = std::clamp(*estimates[i].theta_k, k_lo, k_hi);
    }
  };
  if (options.winsor_by_industry) {
    for (const auto& [industry, idx] : groups) winsorize(idx);
  } else {
    std::vector<std::size_t> pooled;
    for (const auto& [industry, idx] : groups) pooled.insert(pooled.end(), idx.begin(), idx.end());
    winsorize(pooled);
  }

  // Carried-forward years mirror their source year's processed values.
  for (auto& e : estimates) {
    if (!e.carried_forward) continue;
    const auto* src = find_estimate(estimates, e.industry, e.source_year);
    if (!src || src->carried_forward) {
      fail(ErrorKind::kEstimation, fmt::format("industry {} year {}: carried-forward source {} "
                                               "missing",
                                               e.industry, e.year, e.source_year));
    }
    e.theta_v = src->theta_v;
    e.theta_k = src->theta_k;
    e.interpolated = src->interpolated;
  }
  return estimates;
}

const ElasticityEstimate* find_estimate(const std::vector<ElasticityEstimate>& estimates,
                                        panel::IndustryCode industry, int year) {
  for (const auto& e : estimates) {
    if (e.industry == industry && e.year == year) return &e;
  }
  return nullptr;
}

std::string format_elasticity_table(const std::vector<ElasticityEstimate>& estimates) {
  csv::Writer w({"industry", "year", "theta_v", "theta_k", "rs", "n_obs", "converged",
                 "carried_forward", "theta_v_raw", "theta_k_raw", "window_start", "window_end",
                 "objective", "interpolated"});
  for (const auto& e : estimates) {
    w.cell(e.industry).cell(e.year).cell(e.theta_v).cell(e.theta_k);
    if (e.missing()) {
      w.cell(std::string_view{});
    } else {
      w.cell(e.rs());
    }
    w.cell(static_cast<long long>(e.n_obs)).cell(e.converged).cell(e.carried_forward)
        .cell(e.raw_theta_v).cell(e.raw_theta_k).cell(e.window_start).cell(e.window_end)
        .cell(e.objective).cell(e.interpolated);
    w.end_row();
  }
  return w.str();
}

}  // namespace domar::pfe
