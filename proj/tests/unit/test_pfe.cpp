#include <cmath>
#include <random>

#include "doctest.h"
#include "domar/oracle.hpp"
#include "domar/panel.hpp"
#include "domar/pfe.hpp"
#include "domar/simplex.hpp"
#include "helpers.hpp"

using namespace domar;

namespace {

panel::PanelDataset prepared(const oracle::PanelSpec& spec) {
  auto g = oracle::gen_cobb_douglas_panel(spec);
  return panel::attach_capital_lags(panel::apply_deflators(g.data));
}

std::vector<pfe::Observation> slice(const oracle::PanelSpec& spec) {
  const auto d = prepared(spec);
  return pfe::build_observations(d, {}, std::nullopt, spec.first_year,
                                 spec.first_year + spec.n_years - 1);
}

pfe::ElasticityEstimate entry(panel::IndustryCode industry, int year, double v, double k) {
  pfe::ElasticityEstimate e;
  e.industry = industry;
  e.year = year;
  e.raw_theta_v = v;
  e.raw_theta_k = k;
  e.theta_v = v;
  e.theta_k = k;
  e.converged = true;
  return e;
}

}  // namespace

TEST_SUITE("pfe") {

TEST_CASE("simplex minimizes a shifted quadratic") {
  auto f = [](std::span<const double> x) {
    return (x[0] - 1.5) * (x[0] - 1.5) + 10 * (x[1] + 0.25) * (x[1] + 0.25);
  };
  const std::vector<double> start{0.0, 0.0};
  const auto r = simplex::minimize(f, start);
  CHECK(r.x[0] == doctest::Approx(1.5).epsilon(1e-8));
  CHECK(r.x[1] == doctest::Approx(-0.25).epsilon(1e-8));
  CHECK(r.value < 1e-14);
}

TEST_CASE("first stage") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n01;
  std::vector<pfe::Observation> obs;
  for (int i = 0; i < 300; ++i) {
    pfe::Observation o;
    o.firm_id = "F" + std::to_string(i / 3);
    o.year = 2000 + i % 3;
    o.log_v = n01(rng);
    o.log_k = n01(rng);
    o.log_proxy = n01(rng);
    obs.push_back(o);
  }

  SUBCASE("cubic data are interpolated exactly") {
    for (auto& o : obs) {
      o.log_y = 0.5 + o.log_v - 0.3 * o.log_k * o.log_proxy + 0.1 * std::pow(o.log_v, 3) -
                0.05 * o.log_k * o.log_k * o.log_v;
    }
    const auto fs = pfe::first_stage(obs);
    CHECK(fs.degree == 3);
    for (double r : fs.residuals) CHECK(std::abs(r) <= 1e-9);
  }
  SUBCASE("constant output fits its mean") {
    for (auto& o : obs) o.log_y = 2.25;
    const auto fs = pfe::first_stage(obs);
    for (double p : fs.phi) CHECK(p == doctest::Approx(2.25).epsilon(1e-10));
  }
  SUBCASE("a three-valued proxy falls back to degree 2") {
    for (std::size_t i = 0; i < obs.size(); ++i) {
      obs[i].log_proxy = static_cast<double>(i % 3) - 1.0;
      obs[i].log_y = obs[i].log_v + obs[i].log_proxy * obs[i].log_proxy;
    }
    const auto fs = pfe::first_stage(obs);
    CHECK(fs.fell_back);
    CHECK(fs.degree == 2);
    for (double r : fs.residuals) CHECK(std::abs(r) <= 1e-9);
  }
  SUBCASE("identical regressors are deficient at every degree") {
    for (auto& o : obs) {
      o.log_k = o.log_v;
      o.log_proxy = o.log_v;
      o.log_y = o.log_v;
    }
    CHECK_ERROR_KIND(pfe::first_stage(obs), ErrorKind::kEstimation);
  }
  SUBCASE("too few observations") {
    CHECK_ERROR_KIND(pfe::first_stage(std::span(obs).first(10)), ErrorKind::kEstimation);
  }
}

TEST_CASE("first-stage residual variance matches measurement noise") {
  oracle::PanelSpec spec;
  spec.noise_sd = 0.1;
  spec.seed = 4;
  const auto obs = slice(spec);
  const auto fs = pfe::first_stage(obs);
  double ss = 0.0;
  for (double r : fs.residuals) ss += r * r;
  const double var = ss / static_cast<double>(fs.residuals.size());
  CHECK(std::abs(var / 0.01 - 1.0) < 0.10);
}

TEST_CASE("second stage recovers the generator's elasticities") {
  oracle::PanelSpec spec;
  spec.seed = 21;
  const auto e = pfe::estimate_slice(slice(spec));
  CHECK(e.converged);
  CHECK(std::abs(*e.theta_v - 0.7) < 1e-3);
  CHECK(std::abs(*e.theta_k - 0.3) < 1e-3);
  CHECK(e.objective <= e.ols_objective);
}

TEST_CASE("GMM corrects the OLS bias under strong endogeneity") {
  oracle::PanelSpec spec;
  spec.seed = 31;
  spec.innovation_sd = 0.1;
  const auto obs = slice(spec);
  const auto [ov, ok] = pfe::ols_elasticities(obs);
  CHECK(std::max(std::abs(ov - 0.7), std::abs(ok - 0.3)) > 0.02);
  const auto e = pfe::estimate_slice(obs);
  CHECK(e.converged);
  CHECK(std::abs(*e.theta_v - 0.7) < 5e-3);
  CHECK(std::abs(*e.theta_k - 0.3) < 5e-3);
}

TEST_CASE("without productivity GMM reproduces OLS") {
  oracle::PanelSpec spec;
  spec.seed = 2;
  spec.innovation_sd = 0.0;
  spec.proxy_noise_sd = 0.1;  // otherwise the proxy is an exact function of v and k
  const auto obs = slice(spec);
  const auto [ov, ok] = pfe::ols_elasticities(obs);
  CHECK(std::abs(ov - 0.7) < 1e-9);
  CHECK(std::abs(ok - 0.3) < 1e-9);
  const auto e = pfe::estimate_slice(obs);
  CHECK(std::abs(*e.theta_v - ov) < 1e-6);
  CHECK(std::abs(*e.theta_k - ok) < 1e-6);
}

TEST_CASE("zero capital elasticity is recovered near zero") {
  oracle::PanelSpec spec;
  spec.seed = 5;
  spec.industries = {{31, 0.8, 0.0}};
  const auto e = pfe::estimate_slice(slice(spec));
  CHECK(std::abs(*e.theta_k) < 0.02);
  CHECK(std::abs(*e.theta_v - 0.8) < 0.02);
}

TEST_CASE("a single year has no lag links") {
  oracle::PanelSpec spec;
  spec.n_years = 2;
  const auto obs = slice(spec);
  std::vector<pfe::Observation> one_year;
  for (const auto& o : obs) {
    if (o.year == obs.front().year) one_year.push_back(o);
  }
  CHECK_ERROR_TEXT(pfe::estimate_slice(one_year), ErrorKind::kEstimation,
                   "panel too short for dynamic moments");
}

TEST_CASE("rolling windows") {
  auto spec = oracle::fixture_spec(7);
  spec.noise_sd = 0.0;
  spec.churn = 0.0;
  const auto d = prepared(spec);
  pfe::EstimationConfig cfg;
  const auto est = pfe::postprocess_elasticities(pfe::estimate_rolling(d, cfg));
  REQUIRE(est.size() == 2u * 12u);
  for (const auto& e : est) {
    const auto& truth = e.industry == 31 ? spec.industries[0] : spec.industries[1];
    CHECK(std::abs(*e.theta_v - truth.theta_v) < 0.02);
    CHECK(std::abs(*e.theta_k - truth.theta_k) < 0.02);
    CHECK(e.window_end - e.window_start + 1 <= 9);
  }
  // Years past the last full window reuse it.
  const auto* last_full = pfe::find_estimate(est, 31, 2005 + 11 - 4);
  REQUIRE(last_full);
  CHECK_FALSE(last_full->carried_forward);
  for (int y = 2005 + 11 - 3; y <= 2005 + 11; ++y) {
    const auto* e = pfe::find_estimate(est, 31, y);
    REQUIRE(e);
    CHECK(e->carried_forward);
    CHECK(e->source_year == last_full->year);
    CHECK(*e->theta_v == *last_full->theta_v);
    CHECK(*e->theta_k == *last_full->theta_k);
  }
}

TEST_CASE("short panel uses one clipped window for all years") {
  oracle::PanelSpec spec;
  spec.n_years = 6;
  spec.seed = 8;
  const auto est = pfe::estimate_rolling(prepared(spec), {});
  REQUIRE(est.size() == 6);
  const auto* ref = &est.front();
  for (const auto& e : est) {
    if (!e.carried_forward) ref = &e;
  }
  for (const auto& e : est) {
    CHECK(e.window_start == 2000);
    CHECK(e.window_end == 2005);
    CHECK(*e.raw_theta_v == *ref->raw_theta_v);
  }
}

TEST_CASE("post-processing") {
  SUBCASE("constant series is unchanged") {
    std::vector<pfe::ElasticityEstimate> est;
    for (int y = 2000; y < 2010; ++y) est.push_back(entry(31, y, 0.7, 0.3));
    const auto out = pfe::postprocess_elasticities(est);
    for (const auto& e : out) {
      CHECK(*e.theta_v == 0.7);
      CHECK(*e.theta_k == 0.3);
      CHECK_FALSE(e.interpolated);
    }
  }
  SUBCASE("outlier is replaced by interpolation") {
    std::vector<pfe::ElasticityEstimate> est{entry(31, 2000, 0.8, 0.2), entry(31, 2001, 0.8, 0.2),
                                             entry(31, 2002, 3.0, 0.2), entry(31, 2003, 0.8, 0.2)};
    const auto out = pfe::postprocess_elasticities(est, {0.0, 1.0, false});
    CHECK(*out[2].theta_v == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(out[2].interpolated);
    CHECK(*out[2].raw_theta_v == 3.0);
    CHECK(*out[0].theta_v == 0.8);
  }
  SUBCASE("values below pooled P5 are raised to P5") {
    std::vector<pfe::ElasticityEstimate> est{entry(11, 2000, 0.1, 0.3), entry(21, 2000, 0.2, 0.3)};
    for (int y = 2000; y < 2038; ++y) est.push_back(entry(31, y, 0.5, 0.3));
    const auto out = pfe::postprocess_elasticities(est);
    CHECK(*pfe::find_estimate(out, 11, 2000)->theta_v == 0.2);
    CHECK(*pfe::find_estimate(out, 21, 2000)->theta_v == 0.2);
    CHECK(*pfe::find_estimate(out, 31, 2010)->theta_v == 0.5);
  }
  SUBCASE("post-processing is idempotent") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.7, 0.1);
    std::vector<pfe::ElasticityEstimate> est;
    for (int y = 2000; y < 2020; ++y) est.push_back(entry(31, y, n(rng), 0.3 + 0.01 * (y % 3)));
    const auto once = pfe::postprocess_elasticities(est);
    const auto twice = pfe::postprocess_elasticities(once);
    for (std::size_t i = 0; i < once.size(); ++i) {
      CHECK(*once[i].theta_v == *twice[i].theta_v);
      CHECK(*once[i].theta_k == *twice[i].theta_k);
    }
  }
  SUBCASE("an industry with nothing usable is named") {
    auto e = entry(54, 2000, 0.7, 0.3);
    e.raw_theta_v.reset();
    e.theta_v.reset();
    CHECK_ERROR_TEXT(pfe::postprocess_elasticities({e}), ErrorKind::kEstimation, "54");
  }
}

TEST_CASE("carried-forward years never alter earlier estimates") {
  oracle::PanelSpec spec;
  spec.n_years = 12;
  spec.seed = 12;
  const auto raw = pfe::estimate_rolling(prepared(spec), {});
  std::vector<pfe::ElasticityEstimate> direct;
  for (const auto& e : raw) {
    if (!e.carried_forward) direct.push_back(e);
  }
  REQUIRE(direct.size() < raw.size());
  const auto with = pfe::postprocess_elasticities(raw);
  const auto without = pfe::postprocess_elasticities(direct);
  for (const auto& e : without) {
    const auto* w = pfe::find_estimate(with, e.industry, e.year);
    REQUIRE(w);
    CHECK(*w->theta_v == *e.theta_v);
    CHECK(*w->theta_k == *e.theta_k);
  }
}

}  // TEST_SUITE
