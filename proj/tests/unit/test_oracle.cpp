#include <cmath>

#include "doctest.h"
#include "domar/agg.hpp"
#include "domar/mpower.hpp"
#include "domar/oracle.hpp"
#include "domar/panel.hpp"
#include "helpers.hpp"

using namespace domar;
using doctest::Approx;

TEST_SUITE("oracle") {

TEST_CASE("vertical economy accounts") {
  const auto e = oracle::gen_vertical_economy();
  REQUIRE(e.nodes.size() == 2);
  CHECK(e.nodes[0].sale == Approx(100).epsilon(1e-15));
  CHECK(e.nodes[1].sale == Approx(90).epsilon(1e-15));
  CHECK(e.nodes[0].profit == Approx(10).epsilon(1e-14));
  CHECK(e.nodes[1].profit == Approx(9).epsilon(1e-14));
  CHECK(e.gdp == Approx(100).epsilon(1e-15));
  CHECK(e.chi == Approx(1.9).epsilon(1e-15));
  CHECK(std::abs(e.total_profit / e.gdp - 0.19) <= 1e-12);
}

TEST_CASE("random networks close their accounts") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    oracle::NetworkSpec spec;
    spec.seed = seed;
    spec.nodes = 1 + static_cast<int>(seed % 12);
    const auto e = oracle::gen_network_economy(spec);
    CHECK(e.closure_residual <= 1e-10);
    CHECK(oracle::closure_residual(e) <= 1e-10);
    double va = 0.0;
    for (const auto& n : e.nodes) va += n.value_added;
    CHECK(std::abs(va - e.gdp) <= 1e-10 * e.gdp);
    CHECK(std::abs(e.labor_comp + e.capital_payments + e.total_profit - e.gdp) <= 1e-10 * e.gdp);
  }
}

TEST_CASE("network generator is deterministic and rejects cycles") {
  oracle::NetworkSpec spec;
  spec.seed = 42;
  CHECK(oracle::format_network_truth(oracle::gen_network_economy(spec)) ==
        oracle::format_network_truth(oracle::gen_network_economy(spec)));
  spec.topology = oracle::Topology::kCyclic;
  CHECK_ERROR_KIND(oracle::gen_network_economy(spec), ErrorKind::kParameter);
  spec.topology = oracle::Topology::kRandomAcyclic;
  spec.nodes = 13;
  CHECK_ERROR_KIND(oracle::gen_network_economy(spec), ErrorKind::kParameter);
}

TEST_CASE("theorem terms from a network reproduce its profit share") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    oracle::NetworkSpec spec;
    spec.seed = seed;
    const auto e = oracle::gen_network_economy(spec);
    const auto terms = oracle::firm_terms(e);
    const double thm = agg::profit_share_theorem(e.chi, terms, agg::TheoremMode::kFull).profit_share;
    CHECK(std::abs(thm - e.total_profit / e.gdp) <= 1e-10);
  }
}

TEST_CASE("supplied firms: profit rate from primitives equals accounting") {
  const auto firms = oracle::gen_supplied_firms(5, 2000);
  for (const auto& f : firms) {
    double tc = f.fixed_cost, rs = 0.0;
    std::vector<mpower::InputWedge> wedges;
    for (const auto& in : f.inputs) {
      tc += in.expenditure;
      rs += in.theta;
      wedges.push_back({in.theta, in.markdown()});
    }
    const double fc_adj = mpower::fixed_cost_adjustment(tc, f.fixed_cost);
    const double m = mpower::monopsony_term(fc_adj, wedges);
    const double eq = mpower::profit_rate(f.markup, rs * fc_adj, m);
    CHECK(std::abs(eq - f.profit / f.sale) <= 1e-12);
    CHECK(f.price == Approx(f.markup * f.marginal_cost).epsilon(1e-13));
  }
}

TEST_CASE("fixed labor requirement") {
  std::vector<double> grid;
  for (int i = 0; i < 21; ++i) grid.push_back(2.0 - 5e-4 + 5e-5 * i);
  const auto pts = oracle::gen_fixed_cost_firm(0.8, 1.0, grid);
  const double predicted = oracle::predicted_elasticity(0.8, 1.0, 2.0);
  CHECK(predicted == Approx(1.6).epsilon(1e-15));
  CHECK(std::abs(oracle::loglog_slope(pts) / predicted - 1.0) < 0.02);

  const auto plain = oracle::gen_fixed_cost_firm(0.65, 0.0, grid);
  CHECK(std::abs(oracle::loglog_slope(plain) - 0.65) <= 1e-6);

  const std::vector<double> below{0.5, 1.5};
  CHECK_ERROR_KIND(oracle::gen_fixed_cost_firm(0.8, 1.0, below), ErrorKind::kDomain);
}

TEST_CASE("panel generator") {
  oracle::PanelSpec spec;
  spec.firms_per_industry = 20;
  spec.n_years = 4;
  const auto a = oracle::gen_cobb_douglas_panel(spec);
  const auto b = oracle::gen_cobb_douglas_panel(spec);
  CHECK(panel::format_firm_panel(a.data) == panel::format_firm_panel(b.data));
  CHECK(a.data.observations.size() == 80);
  CHECK(a.truth.size() == 80);
  spec.seed = 2;
  CHECK(panel::format_firm_panel(oracle::gen_cobb_douglas_panel(spec).data) !=
        panel::format_firm_panel(a.data));

  // Macro totals are consistent with the sample.
  for (const auto& [year, m] : a.data.macro) {
    double sales = 0.0;
    for (const auto& o : a.data.observations) {
      if (o.year == year) sales += *o.sale;
    }
    CHECK(m.total_sales / m.gdp == Approx(spec.chi).epsilon(1e-12));
    CHECK(sales / m.total_sales == Approx(spec.sample_coverage).epsilon(1e-12));
  }
}

}  // TEST_SUITE
