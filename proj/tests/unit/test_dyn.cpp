#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "domar/dyn.hpp"
#include "domar/oracle.hpp"
#include "helpers.hpp"

using namespace domar;
using doctest::Approx;

namespace {

std::vector<dyn::FirmPoint> random_year(std::mt19937_64& rng, int first, int last) {
  std::uniform_real_distribution<double> mu(0.7, 2.0), sale(0.5, 50.0);
  std::vector<dyn::FirmPoint> out;
  for (int i = first; i < last; ++i) out.push_back({"F" + std::to_string(i), sale(rng), mu(rng)});
  return out;
}

double hsw(const std::vector<dyn::FirmPoint>& pts) {
  double s = 0.0, inv = 0.0;
  for (const auto& p : pts) s += p.sale;
  for (const auto& p : pts) inv += p.sale / s / p.markup;
  return 1.0 / inv;
}

}  // namespace

TEST_SUITE("dyn") {

TEST_CASE("entry and exit classification") {
  const std::vector<std::string> a{"A", "B", "C"}, b{"A", "B", "D"};
  const auto same = dyn::classify_firms(a, a);
  CHECK(same.entrants.empty());
  CHECK(same.exiters.empty());
  CHECK(same.incumbents.size() == 3);
  const auto one = dyn::classify_firms(a, b);
  CHECK(one.entrants == std::vector<std::string>{"D"});
  CHECK(one.exiters == std::vector<std::string>{"C"});
}

TEST_CASE("classification partitions a churning panel") {
  auto spec = oracle::fixture_spec(3);
  const auto g = oracle::gen_cobb_douglas_panel(spec);
  const auto years = g.data.years();
  CHECK_ERROR_TEXT(dyn::classify_firms(g.data, years.front()), ErrorKind::kState, "no prior year");
  for (std::size_t k = 1; k < years.size(); ++k) {
    std::set<std::string> prev, cur;
    for (const auto& o : g.data.observations) {
      if (o.year == years[k - 1]) prev.insert(o.firm_id);
      if (o.year == years[k]) cur.insert(o.firm_id);
    }
    const auto c = dyn::classify_firms(g.data, years[k]);
    std::set<std::string> inc(c.incumbents.begin(), c.incumbents.end());
    std::set<std::string> ent(c.entrants.begin(), c.entrants.end());
    std::set<std::string> ext(c.exiters.begin(), c.exiters.end());
    std::set<std::string> u1 = inc, u2 = inc;
    u1.insert(ent.begin(), ent.end());
    u2.insert(ext.begin(), ext.end());
    CHECK(u1 == cur);
    CHECK(u2 == prev);
    CHECK(inc.size() + ent.size() == cur.size());
    CHECK(inc.size() + ext.size() == prev.size());
  }
}

TEST_CASE("decomposition worked examples") {
  SUBCASE("identical periods") {
    const std::vector<dyn::FirmPoint> p{{"A", 3, 1.2}, {"B", 1, 1.5}};
    const auto t = dyn::markup_change_decomposition(p, p);
    CHECK(t.delta_mu == 0.0);
    CHECK(t.within == 0.0);
    CHECK(t.between == 0.0);
    CHECK(t.net_entry == 0.0);
  }
  SUBCASE("single incumbent") {
    const std::vector<dyn::FirmPoint> a{{"A", 1, 1.0}}, b{{"A", 1, 1.25}};
    const auto t = dyn::markup_change_decomposition(a, b);
    CHECK(t.delta_mu == Approx(0.25).epsilon(1e-15));
    CHECK(t.within == Approx(0.25).epsilon(1e-15));
    CHECK(t.between == 0.0);
    CHECK(t.net_entry == 0.0);
  }
  SUBCASE("entrant joins an incumbent") {
    const std::vector<dyn::FirmPoint> a{{"A", 1, 1.0}}, b{{"A", 1, 1.0}, {"B", 1, 2.0}};
    const auto t = dyn::markup_change_decomposition(a, b);
    CHECK(t.c == 0.875);
    CHECK(t.delta_mu == Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(std::abs(t.within) <= 1e-15);
    CHECK(t.between == Approx(1.0 / 12.0).epsilon(1e-15));
    CHECK(t.net_entry == Approx(0.25).epsilon(1e-15));
    CHECK(std::abs(t.residual) <= 1e-15);
  }
  SUBCASE("empty year is an error") {
    const std::vector<dyn::FirmPoint> a{{"A", 1, 1.0}}, none;
    CHECK_ERROR_KIND(dyn::markup_change_decomposition(a, none), ErrorKind::kDegenerate);
  }
}

TEST_CASE("decomposition additivity on random churning pairs") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> n(1, 40), shift(0, 10);
  for (int i = 0; i < 500; ++i) {
    const int size = n(rng), lag = shift(rng);
    const auto prev = random_year(rng, 0, size);
    const auto cur = random_year(rng, lag, lag + n(rng));
    const auto mid = dyn::markup_change_decomposition(prev, cur);
    const double delta = hsw(cur) - hsw(prev);
    CHECK(std::abs(mid.delta_mu - delta) <= 1e-12);
    CHECK(std::abs(mid.within + mid.between + mid.net_entry - delta) <= 1e-12);

    const auto shifted = dyn::markup_change_decomposition(prev, cur, dyn::Reference::kCustom, 0.3);
    CHECK(shifted.within == mid.within);
    CHECK(std::abs(shifted.between + shifted.net_entry - mid.between - mid.net_entry) <= 1e-12);
  }
}

TEST_CASE("no churn means no net entry") {
  std::mt19937_64 rng(5);
  const auto prev = random_year(rng, 0, 20);
  const auto cur = random_year(rng, 0, 20);
  CHECK(dyn::markup_change_decomposition(prev, cur).net_entry == 0.0);
}

TEST_CASE("literal reference reports its residual") {
  const std::vector<dyn::FirmPoint> a{{"A", 1, 1.0}}, b{{"A", 1, 1.0}, {"B", 1, 2.0}};
  const auto t = dyn::markup_change_decomposition(a, b, dyn::Reference::kLiteral);
  CHECK(t.delta_mu == Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(std::abs(t.residual) > 1e-3);
  CHECK(t.residual == Approx(t.delta_mu - t.within - t.between - t.net_entry).epsilon(1e-15));
}

TEST_CASE("decompose_years stops before the last year") {
  std::vector<mpower::FirmMeasures> rows;
  for (int y = 2000; y < 2004; ++y) {
    for (int f = 0; f < 3; ++f) {
      mpower::FirmMeasures m;
      m.firm_id = "F" + std::to_string(f);
      m.year = y;
      m.sale = 10.0 + f + y % 3;
      m.markup = 1.0 + 0.1 * f + 0.01 * (y - 2000);
      rows.push_back(m);
    }
  }
  const auto t = dyn::decompose_years(rows, dyn::Reference::kMidpoint);
  REQUIRE(t.size() == 2);
  CHECK(t.front().year == 2001);
  CHECK(t.back().year == 2002);
  const auto back = dyn::parse_decomposition(dyn::format_decomposition(t));
  REQUIRE(back.size() == t.size());
  CHECK(back[1].within == t[1].within);
  CHECK(back[1].net_entry == t[1].net_entry);
}

TEST_CASE("hhi") {
  const std::vector<double> one{5}, two{3, 3}, three{50, 30, 20};
  CHECK(dyn::hhi(one) == 1.0);
  CHECK(dyn::hhi(two) == 0.5);
  CHECK(dyn::hhi(three) == Approx(0.38).epsilon(1e-15));
  const std::vector<double> scaled{5000, 3000, 2000};
  CHECK(dyn::hhi(scaled) == Approx(dyn::hhi(three)).epsilon(1e-15));
  const std::vector<double> zero{0, 0};
  CHECK_ERROR_KIND(dyn::hhi(zero), ErrorKind::kDomain);
}

TEST_CASE("markup distribution") {
  const std::vector<double> flat(10, 1.3);
  const auto f = dyn::distribution_stats(flat);
  CHECK(f.p10 == 1.3);
  CHECK(f.p95 == 1.3);
  std::vector<double> seq;
  for (int i = 1; i <= 100; ++i) seq.push_back(i);
  CHECK(dyn::distribution_stats(seq).p50 == 50);
  const std::vector<double> mixed{0.8, 0.95, 1.1, 1.3};
  CHECK(dyn::distribution_stats(mixed).below_unity == 2);
}

}  // TEST_SUITE
