#include <cmath>
#include <random>

#include "doctest.h"
#include "domar/config.hpp"
#include "domar/csv.hpp"
#include "domar/oracle.hpp"
#include "domar/panel.hpp"
#include "domar/stats.hpp"
#include "helpers.hpp"

using namespace domar;
using testing::kHeader;

namespace {

std::map<int, panel::MacroYear> flat_macro(int y0, int y1, double deflator = 1.0) {
  std::map<int, panel::MacroYear> m;
  for (int y = y0; y <= y1; ++y) {
    panel::MacroYear row;
    row.year = y;
    row.gdp = 1000;
    row.total_sales = 1800;
    row.deflator = deflator;
    row.labor_comp = 550;
    m[y] = row;
  }
  return m;
}

}  // namespace

TEST_SUITE("panel") {

TEST_CASE("three well-formed rows load as three observations") {
  std::string text = kHeader;
  text += "A,2000,31,100,60,10,2,50,5,4,8\n";
  text += "A,2001,31,110,65,11,2,52,5,4,8\n";
  text += "B,2000,54,90,50,9,1,40,4,3,7\n";
  const auto d = panel::parse_firm_panel(text);
  REQUIRE(d.observations.size() == 3);
  CHECK(d.observations[0].firm_id == "A");
  CHECK(d.observations[2].industry == 54);
  CHECK(*d.observations[1].sale == 110.0);
}

TEST_CASE("duplicate firm-year is an integrity error") {
  std::string text = kHeader;
  text += "A,2000,31,100,60,10,2,50,5,4,8\n";
  text += "A,2000,31,101,60,10,2,50,5,4,8\n";
  CHECK_ERROR_TEXT(panel::parse_firm_panel(text), ErrorKind::kIntegrity, "A");
}

TEST_CASE("missing mapped column names the column") {
  const std::string text = "gvkey,fyear,naics2,sale,cogs,xsga,ppegt,k_int,capx,icapt\nA,2000,31,1,1,1,1,1,1,1\n";
  CHECK_ERROR_TEXT(panel::parse_firm_panel(text), ErrorKind::kSchema, "xrd");
}

TEST_CASE("column mapping comes from config") {
  Config cfg;
  cfg.set("column.firm_id", "id");
  const auto schema = panel::SchemaMap::from_config(cfg);
  CHECK(schema.firm_id == "id");
  const std::string text = "id,fyear,naics2,sale,cogs,xsga,xrd,ppegt,k_int,capx,icapt\nZ,2000,31,1,1,1,1,1,1,1,1\n";
  CHECK(panel::parse_firm_panel(text, schema).observations.at(0).firm_id == "Z");
}

TEST_CASE("blank R&D survives a write/read round trip as missing") {
  std::string text = kHeader;
  text += "A,2000,31,100,60,10,,50,5,4,8\n";
  text += "B,2001,44,90.5,50.25,9,1,40,,3,7\n";
  const auto d = panel::parse_firm_panel(text);
  CHECK_FALSE(d.observations[0].rd.has_value());
  const auto again = panel::parse_firm_panel(panel::format_firm_panel(d));
  REQUIRE(again.observations.size() == d.observations.size());
  for (std::size_t i = 0; i < d.observations.size(); ++i) {
    const auto& a = d.observations[i];
    const auto& b = again.observations[i];
    CHECK(a.firm_id == b.firm_id);
    CHECK(a.year == b.year);
    CHECK(a.industry == b.industry);
    CHECK(a.sale == b.sale);
    CHECK(a.cogs == b.cogs);
    CHECK(a.sga == b.sga);
    CHECK(a.rd == b.rd);
    CHECK(a.ppegt == b.ppegt);
    CHECK(a.k_int == b.k_int);
    CHECK(a.capx == b.capx);
    CHECK(a.proxy == b.proxy);
  }
}

TEST_CASE("industry grouping") {
  CHECK(panel::normalize_industry(32) == 31);
  CHECK(panel::normalize_industry(45) == 44);
  CHECK(panel::normalize_industry(49) == 48);
  CHECK_FALSE(panel::normalize_industry(99).has_value());
}

TEST_CASE("deflation") {
  std::string text = kHeader;
  text += "A,2000,31,110,66,11,2.2,55,5.5,4.4,8.8\n";
  auto d = panel::parse_firm_panel(text);

  SUBCASE("unit deflator leaves values unchanged") {
    d.macro = flat_macro(2000, 2000, 1.0);
    const auto out = panel::apply_deflators(d);
    CHECK(*out.observations[0].sale == 110.0);
    CHECK(*out.observations[0].cogs == 66.0);
  }
  SUBCASE("sale 110 at deflator 1.10 becomes 100") {
    d.macro = flat_macro(2000, 2000, 1.10);
    const auto out = panel::apply_deflators(d);
    CHECK(*out.observations[0].sale == doctest::Approx(100.0).epsilon(1e-14));
    CHECK(out.provenance.deflated);
    CHECK_ERROR_KIND(panel::apply_deflators(out), ErrorKind::kState);
  }
  SUBCASE("missing deflator year is named") {
    d.macro = flat_macro(2001, 2002);
    CHECK_ERROR_TEXT(panel::apply_deflators(d), ErrorKind::kDomain, "2000");
  }
}

TEST_CASE("deflation matches row-wise division and re-nominalization inverts it") {
  oracle::PanelSpec spec;
  spec.firms_per_industry = 30;
  spec.n_years = 6;
  spec.deflator_growth = 0.03;
  spec.seed = 3;
  const auto g = oracle::gen_cobb_douglas_panel(spec);
  const auto real = panel::apply_deflators(g.data);
  REQUIRE(real.observations.size() == g.data.observations.size());
  for (std::size_t i = 0; i < real.observations.size(); ++i) {
    const auto& n = g.data.observations[i];
    const auto& r = real.observations[i];
    const double p = g.data.macro.at(n.year).deflator;
    CHECK(*r.sale == *n.sale / p);
    CHECK(*r.cogs == *n.cogs / p);
    CHECK(*r.ppegt == *n.ppegt / p);
  }
  const auto back = panel::renominalize(real);
  for (std::size_t i = 0; i < back.observations.size(); ++i) {
    const auto& n = g.data.observations[i];
    const auto& b = back.observations[i];
    CHECK(std::abs(*b.sale - *n.sale) <= 1e-12 * *n.sale);
    CHECK(std::abs(*b.sga - *n.sga) <= 1e-12 * *n.sga);
  }
}

TEST_CASE("cleaning") {
  SUBCASE("one negative cogs row is dropped") {
    std::string text = kHeader;
    for (int f = 0; f < 20; ++f) {
      for (int y = 2000; y < 2003; ++y) {
        text += "F" + std::to_string(f) + "," + std::to_string(y) + ",31," +
                std::to_string(100 + f) + ",50,10,1,40,4,3,6\n";
      }
    }
    text += "Z,2000,31,100,-5,10,1,40,4,3,6\n";
    auto d = panel::parse_firm_panel(text);
    d.macro = flat_macro(2000, 2002);
    panel::CleaningRules rules;
    rules.trim_low = 0.0;
    rules.trim_high = 1.0;
    const auto out = panel::clean_sample(d, rules);
    CHECK(out.report.dropped_values == 1);
    CHECK(out.report.rows_out == 60);
  }

  SUBCASE("clean sample is a fixed point with zero counts and cleaning is idempotent") {
    auto g = oracle::gen_dirty_panel(11, 1000, {});
    const auto once = panel::clean_sample(g.data, {});
    const auto twice = panel::clean_sample(once.data, {});
    CHECK(twice.report.dropped_industry == 0);
    CHECK(twice.report.dropped_values == 0);
    CHECK(twice.report.dropped_missing_year == 0);
    CHECK(panel::format_firm_panel(once.data) == panel::format_firm_panel(twice.data));
  }

  SUBCASE("planted violations are counted exactly") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const panel::CleaningRules rules;
      const auto g = oracle::gen_dirty_panel(seed, 1000, rules);
      const auto out = panel::clean_sample(g.data, rules);
      CHECK(out.report.dropped_industry == g.planted.industry);
      CHECK(out.report.dropped_values == g.planted.values);
      CHECK(out.report.dropped_trim == g.planted.trim);
      CHECK(out.report.dropped_missing_year == g.planted.missing_year);
      CHECK(out.report.rows_out == g.planted.rows_out);
    }
  }

  SUBCASE("empty result is an error") {
    std::string text = kHeader;
    text += "Z,2000,31,100,-5,10,1,40,4,3,6\n";
    auto d = panel::parse_firm_panel(text);
    d.macro = flat_macro(2000, 2000);
    CHECK_ERROR_TEXT(panel::clean_sample(d, {}), ErrorKind::kDegenerate,
                     "no observations survive cleaning");
  }
}

TEST_CASE("intangible stock") {
  auto make = [](std::vector<double> rd, std::vector<double> sga) {
    std::string text = kHeader;
    for (std::size_t t = 0; t < rd.size(); ++t) {
      text += "A," + std::to_string(2000 + t) + ",31,100,50," + csv::format_double(sga[t]) +
              "," + csv::format_double(rd[t]) + ",40,,3,6\n";
    }
    return panel::parse_firm_panel(text);
  };

  SUBCASE("zero flows give a zero stock") {
    const auto out = panel::build_intangible_stock(make({0, 0, 0}, {5, 5, 5}), 0.15, 0.0);
    for (const auto& o : out.observations) CHECK(*o.k_int == 0.0);
  }
  SUBCASE("five-year spell at delta 0.2 stays at 50") {
    const auto out = panel::build_intangible_stock(make({10, 10, 10, 10, 10}, {0, 0, 0, 0, 0}),
                                                   0.2, 0.3);
    for (const auto& o : out.observations) CHECK(*o.k_int == doctest::Approx(50.0).epsilon(1e-12));
  }
  SUBCASE("constant flow converges to flow over delta") {
    const std::vector<double> flows(80, 6.0);
    const auto out = panel::build_intangible_stock(make(flows, std::vector<double>(80, 0.0)),
                                                   0.15, 0.3);
    CHECK(*out.observations.back().k_int == doctest::Approx(40.0).epsilon(1e-9));
  }
  SUBCASE("full depreciation gives the flow itself") {
    const auto out = panel::build_intangible_stock(make({3, 7, 2, 9}, {10, 10, 10, 10}), 1.0, 0.5);
    for (std::size_t t = 1; t < out.observations.size(); ++t) {
      const auto& o = out.observations[t];
      CHECK(*o.k_int == doctest::Approx(*o.rd + 0.5 * *o.sga).epsilon(1e-14));
    }
  }
  SUBCASE("depreciation outside (0, 1] is a parameter error") {
    CHECK_ERROR_KIND(panel::build_intangible_stock(make({1}, {1}), 0.0, 0.3), ErrorKind::kParameter);
    CHECK_ERROR_KIND(panel::build_intangible_stock(make({1}, {1}), 1.5, 0.3), ErrorKind::kParameter);
  }
}

TEST_CASE("weights") {
  SUBCASE("vertical economy sales give Domar 1 and 0.9") {
    std::string text = kHeader;
    text += "P1,2000,31,100,60,10,2,50,5,4,8\n";
    text += "P2,2000,31,90,50,9,1,40,4,3,7\n";
    auto d = panel::parse_firm_panel(text);
    d.macro = flat_macro(2000, 2000);
    d.macro[2000].gdp = 100;
    const auto w = panel::compute_weights(d, 2000);
    REQUIRE(w.rows.size() == 2);
    CHECK(w.rows[0].domar == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(w.rows[1].domar == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(w.rows[0].omega == doctest::Approx(10.0 / 19).epsilon(1e-15));
    CHECK(w.rows[1].omega == doctest::Approx(9.0 / 19).epsilon(1e-15));
  }
  SUBCASE("single firm with sales equal to GDP") {
    std::string text = kHeader;
    text += "P1,2000,31,1000,60,10,2,50,5,4,8\n";
    auto d = panel::parse_firm_panel(text);
    d.macro = flat_macro(2000, 2000);
    const auto w = panel::compute_weights(d, 2000);
    CHECK(w.rows[0].domar == 1.0);
    CHECK(w.rows[0].omega == 1.0);
  }
  SUBCASE("random 50-firm panel") {
    std::mt19937_64 rng(5);
    std::lognormal_distribution<double> sale(3.0, 1.5);
    std::string text = kHeader;
    stats::Sum total;
    for (int f = 0; f < 50; ++f) {
      const double s = sale(rng);
      total.add(s);
      text += "F" + std::to_string(f) + ",2000,31," + csv::format_double(s) + ",1,1,1,1,1,1,1\n";
    }
    auto d = panel::parse_firm_panel(text);
    d.macro = flat_macro(2000, 2000);
    const auto w = panel::compute_weights(d, 2000);
    stats::Sum omega, domar;
    for (const auto& r : w.rows) {
      omega.add(r.omega);
      domar.add(r.domar);
    }
    CHECK(std::abs(omega.value() - 1.0) <= 1e-12);
    CHECK(std::abs(domar.value() - total.value() / 1000.0) <= 1e-12);
    CHECK(w.chi_sample == doctest::Approx(domar.value()).epsilon(1e-14));
  }
  SUBCASE("zero total sales is degenerate") {
    std::string text = kHeader;
    text += "P1,2000,31,0,60,10,2,50,5,4,8\n";
    auto d = panel::parse_firm_panel(text);
    d.macro = flat_macro(2000, 2000);
    CHECK_ERROR_KIND(panel::compute_weights(d, 2000), ErrorKind::kDegenerate);
  }
}

TEST_CASE("capital lags") {
  std::string text = kHeader;
  text += "A,2000,31,100,60,10,2,50,5,4,8\n";
  text += "A,2001,31,100,60,10,2,70,6,4,8\n";
  text += "A,2003,31,100,60,10,2,90,7,4,8\n";
  const auto d = panel::attach_capital_lags(panel::parse_firm_panel(text));
  CHECK(d.provenance.lags_attached);
  CHECK_FALSE(d.observations[0].ppegt_lag.has_value());
  CHECK(*d.observations[1].ppegt_lag == 50.0);
  CHECK_FALSE(d.observations[2].ppegt_lag.has_value());
}

}  // TEST_SUITE

TEST_SUITE("support") {

TEST_CASE("config parsing") {
  const auto c = Config::parse("# comment\nclean.trim_low = 0.02\n  name = a b  \n");
  CHECK(c.get_double("clean.trim_low", 0) == 0.02);
  CHECK(c.get_string("name", "") == "a b");
  CHECK(c.get_int("missing", 7) == 7);
  CHECK_ERROR_KIND(Config::parse("no equals sign\n"), ErrorKind::kConfig);
}

TEST_CASE("csv doubles round trip exactly") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(rng) / 7.0;
    CHECK(*csv::parse_double(csv::format_double(x)) == x);
  }
  CHECK(csv::split_line("a,\"b,c\",d").size() == 3);
}

TEST_CASE("nearest-rank percentiles") {
  std::vector<double> xs;
  for (int i = 1; i <= 100; ++i) xs.push_back(i);
  CHECK(stats::nearest_rank(xs, 0.5) == 50);
  CHECK(stats::nearest_rank(xs, 0.95) == 95);
  CHECK(stats::nearest_rank(xs, 0.0) == 1);
  CHECK(stats::sample_sd(std::vector<double>{2, 4, 4, 4, 5, 5, 7, 9}) ==
        doctest::Approx(std::sqrt(32.0 / 7.0)));
}

TEST_CASE("compensated summation") {
  stats::Sum s;
  s.add(1.0);
  for (int i = 0; i < 1000; ++i) s.add(1e-16);
  CHECK(s.value() == doctest::Approx(1.0 + 1e-13).epsilon(1e-15));
}

}  // TEST_SUITE
