#include <algorithm>
#include <cmath>
#include <map>

#include <fmt/format.h>

#include "domar/csv.hpp"
#include "domar/error.hpp"
#include "domar/pipeline.hpp"
#include "domar/stats.hpp"
#include "json.hpp"

namespace domar::pipeline {

namespace {

constexpr double kIdentityTolerance = 1e-10;
constexpr double kExactTolerance = 1e-12;

Check make_check(std::string name, double residual, double tolerance, std::string detail = {}) {
  Check c;
  c.name = std::move(name);
  c.residual = residual;
  c.tolerance = tolerance;
  c.status = residual <= tolerance ? CheckStatus::kPass : CheckStatus::kFail;
  c.detail = std::move(detail);
  return c;
}

Check skipped(std::string name, std::string why) {
  Check c;
  c.name = std::move(name);
  c.status = CheckStatus::kSkip;
  c.detail = std::move(why);
  return c;
}

// Tracks the largest residual and where it occurred.
struct Worst {
  double value = 0.0;
  std::string where;
  void add(double r, const std::string& at) {
    if (!(r <= value)) {
      value = std::isnan(r) ? std::numeric_limits<double>::infinity() : std::max(value, r);
      where = at;
    }
  }
};

void verify_network(const std::filesystem::path& path, VerifyReport& report) {
  const auto table = csv::read(path);
  const auto c_sale = table.column("sale"), c_profit = table.column("profit"),
             c_rate = table.column("profit_rate"), c_va = table.column("value_added"),
             c_fd = table.column("final_demand"), c_mu = table.column("markup"),
             c_rs = table.column("rs"), c_fc_adj = table.column("fc_adj"),
             c_rs_adj = table.column("rs_adj"), c_m = table.column("monopsony"),
             c_id = table.column("node");
  std::vector<double> sales, rates, va, profits;
  std::vector<agg::FirmTerms> terms;
  stats::Sum gdp, total_profit, total_sales;
  for (const auto& row : table.rows) {
    auto num = [&](std::size_t c) { return csv::parse_double(row[c]).value_or(NAN); };
    sales.push_back(num(c_sale));
    rates.push_back(num(c_rate));
    va.push_back(num(c_va));
    profits.push_back(num(c_profit));
    gdp.add(num(c_fd));
    total_profit.add(num(c_profit));
    total_sales.add(num(c_sale));
    terms.push_back({row[c_id], num(c_sale), num(c_mu), num(c_rs), num(c_fc_adj), num(c_rs_adj),
                     num(c_m)});
  }
  const double direct = total_profit.value() / gdp.value();
  const double domar = agg::profit_share_domar(sales, rates, gdp.value());
  const double by_va = agg::profit_share_va(va, profits);
  const double thm =
      agg::profit_share_theorem(total_sales.value() / gdp.value(), terms, agg::TheoremMode::kFull)
          .profit_share;
  report.checks.push_back(make_check("network: Domar = profit/GDP", std::fabs(domar - direct),
                                     kIdentityTolerance));
  report.checks.push_back(make_check("network: value-added weights = Domar",
                                     std::fabs(by_va - domar), kIdentityTolerance));
  report.checks.push_back(make_check("network: theorem = Domar", std::fabs(thm - domar),
                                     kIdentityTolerance));
}

}  // namespace

bool VerifyReport::passed() const {
  return std::none_of(checks.begin(), checks.end(),
                      [](const Check& c) { return c.status == CheckStatus::kFail; });
}

std::string VerifyReport::table() const {
  std::size_t width = 8;
  for (const auto& c : checks) width = std::max(width, c.name.size());
  std::string out = fmt::format("{:<{}}  {:<6}  {:>12}  {:>9}  {}\n", "identity", width, "status",
                                "residual", "tolerance", "detail");
  for (const auto& c : checks) {
    const char* status = c.status == CheckStatus::kPass   ? "PASS"
                         : c.status == CheckStatus::kFail ? "FAIL"
                                                          : "SKIP";
    const std::string residual =
        c.status == CheckStatus::kSkip ? "-" : fmt::format("{:.3e}", c.residual);
    const std::string tolerance =
        c.status == CheckStatus::kSkip ? "-" : fmt::format("{:.0e}", c.tolerance);
    out += fmt::format("{:<{}}  {:<6}  {:>12}  {:>9}  {}\n", c.name, width, status, residual,
                       tolerance, c.detail);
  }
  return out;
}

VerifyReport verify_outputs(const std::filesystem::path& dir) {
  VerifyReport report;
  const auto network = dir / "network_truth.csv";
  const bool has_run = std::filesystem::exists(dir / "manifest.json");
  if (!has_run && !std::filesystem::exists(network)) {
    fail(ErrorKind::kIo, fmt::format("no run outputs found in {}", dir.string()));
  }
  if (std::filesystem::exists(network)) verify_network(network, report);
  if (!has_run) return report;

  const auto manifest = nlohmann::json::parse(csv::read_text(dir / "manifest.json"), nullptr,
                                              false);
  if (manifest.is_discarded()) fail(ErrorKind::kSchema, "manifest.json is not valid JSON");
  const bool exogenous_r = manifest.value("profit_rate_formula", "prop1") != "prop1";
  const bool literal = manifest.value("decomposition_reference", "midpoint") == "literal";

  const auto measures = mpower::parse_firm_measures(csv::read_text(dir / "firm_measures.csv"));
  const auto aggregates = agg::parse_aggregates(csv::read_text(dir / "aggregates.csv"));
  const auto decomposition =
      dyn::parse_decomposition(csv::read_text(dir / "decomposition.csv"));
  std::map<int, std::vector<mpower::FirmMeasures>> by_year;
  for (const auto& m : measures) by_year[m.year].push_back(m);

  Worst weights, domar_thm, stored, nesting, rents, shares;
  for (const auto& a : aggregates) {
    const std::string at = std::to_string(a.year);
    auto it = by_year.find(a.year);
    if (it == by_year.end()) {
      weights.add(std::numeric_limits<double>::infinity(), at + " has no firm rows");
      continue;
    }
    const auto& rows = it->second;
    std::vector<double> sales, rates;
    stats::Sum omega;
    for (const auto& m : rows) {
      sales.push_back(m.sale);
      rates.push_back(m.profit_rate);
      omega.add(m.omega);
    }
    weights.add(std::fabs(omega.value() - 1.0), at);

    const auto terms = agg::firm_terms(rows);
    const double domar = agg::profit_share_domar(sales, rates, a.gdp_effective);
    const auto comps = agg::theorem_components(a.chi, terms);
    const double thm = agg::theorem_formula(comps, agg::TheoremMode::kFull);
    domar_thm.add(std::fabs(domar - thm), at);
    stored.add(std::max(std::fabs(domar - a.profit_share_domar),
                        std::fabs(thm - a.profit_share_thm)),
               at);

    // Impose each restriction on the data and compare the looser and tighter forms.
    auto restricted = terms;
    for (auto& f : restricted) f.monopsony = 0.0;
    auto step = [&](agg::TheoremMode loose, agg::TheoremMode tight) {
      const auto c = agg::theorem_components(a.chi, restricted);
      nesting.add(std::fabs(agg::theorem_formula(c, loose) -
                            agg::profit_share_theorem(a.chi, restricted, tight).profit_share),
                  at);
    };
    step(agg::TheoremMode::kFull, agg::TheoremMode::kCor1);
    for (auto& f : restricted) {
      f.fc_adj = 1.0;
      f.rs_adj = f.rs;
    }
    step(agg::TheoremMode::kCor1, agg::TheoremMode::kCor2);
    for (auto& f : restricted) {
      f.rs = 1.0;
      f.rs_adj = 1.0;
    }
    step(agg::TheoremMode::kCor2, agg::TheoremMode::kCor3);

    const auto d = agg::rents_decomposition(a.chi, a.mu_hsw, a.rs_adj_bar, a.cov_rs_adj_invmu);
    rents.add(std::fabs(d.total() - a.profit_share_cor1), at);
    shares.add(std::fabs(a.labor_share + a.capital_share + a.profit_share_domar - 1.0), at);
  }

  report.checks.push_back(make_check("sales shares sum to one", weights.value, kExactTolerance,
                                     weights.where));
  if (exogenous_r) {
    report.checks.push_back(skipped("Domar = theorem",
                                    "profit rates use an exogenous user cost"));
  } else {
    report.checks.push_back(make_check("Domar = theorem", domar_thm.value, kIdentityTolerance,
                                       domar_thm.where));
    report.checks.push_back(make_check("aggregates match firm rows", stored.value,
                                       kIdentityTolerance, stored.where));
  }
  report.checks.push_back(make_check("corollary nesting", nesting.value, kExactTolerance,
                                     nesting.where));
  report.checks.push_back(make_check("rents + fixed + nonlinear = cor1", rents.value,
                                     kExactTolerance, rents.where));
  report.checks.push_back(make_check("income shares sum to one", shares.value, kExactTolerance,
                                     shares.where));

  if (literal) {
    report.checks.push_back(
        skipped("decomposition additivity", "literal reference is not additive"));
  } else {
    Worst add;
    for (const auto& t : decomposition) {
      add.add(std::fabs(t.delta_mu - (t.within + t.between + t.net_entry)),
              std::to_string(t.year));
    }
    report.checks.push_back(make_check("decomposition additivity", add.value, kExactTolerance,
                                       add.where));
  }
  return report;
}

}  // namespace domar::pipeline
