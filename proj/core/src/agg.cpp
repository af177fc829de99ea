#include "domar/agg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "domar/csv.hpp"
#include "domar/error.hpp"
#include "domar/stats.hpp"

namespace domar::agg {

namespace {

constexpr double kRestrictionTolerance = 1e-12;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double weight_total(std::span<const double> w) {
  stats::Sum s;
  for (double x : w) {
    if (!(x >= 0.0)) fail(ErrorKind::kDomain, "weights must be nonnegative");
    s.add(x);
  }
  if (!(s.value() > 0.0)) fail(ErrorKind::kDegenerate, "weights sum to zero");
  return s.value();
}

void check_sizes(std::size_t a, std::size_t b) {
  if (a != b) fail(ErrorKind::kParameter, "series lengths differ");
}

}  // namespace

double weighted_mean(std::span<const double> x, std::span<const double> w) {
  check_sizes(x.size(), w.size());
  const double total = weight_total(w);
  stats::Sum s;
  for (std::size_t i = 0; i < x.size(); ++i) s.add(w[i] * x[i]);
  return s.value() / total;
}

double harmonic_mean(std::span<const double> x, std::span<const double> w) {
  check_sizes(x.size(), w.size());
  const double total = weight_total(w);
  stats::Sum s;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0)) fail(ErrorKind::kDomain, "harmonic mean needs positive values");
    s.add(w[i] / x[i]);
  }
  return total / s.value();
}

double weighted_cov(std::span<const double> x, std::span<const double> y,
                    std::span<const double> w) {
  check_sizes(x.size(), y.size());
  const double mx = weighted_mean(x, w);
  const double my = weighted_mean(y, w);
  const double total = weight_total(w);
  stats::Sum s;
  for (std::size_t i = 0; i < x.size(); ++i) s.add(w[i] * (x[i] - mx) * (y[i] - my));
  return s.value() / total;
}

Moments weighted_moments(std::span<const double> x, std::span<const double> w,
                         std::span<const double> y) {
  Moments m;
  m.mean = weighted_mean(x, w);
  const bool positive = std::all_of(x.begin(), x.end(), [](double v) { return v > 0.0; });
  m.harmonic = positive ? harmonic_mean(x, w) : kNaN;
  m.cov = weighted_cov(x, y, w);
  return m;
}

double profit_share_domar(std::span<const double> sales, std::span<const double> profit_rates,
                          double gdp) {
  check_sizes(sales.size(), profit_rates.size());
  if (!(gdp > 0.0)) fail(ErrorKind::kDomain, "GDP must be positive");
  stats::Sum s;
  for (std::size_t i = 0; i < sales.size(); ++i) s.add(sales[i] / gdp * profit_rates[i]);
  return s.value();
}

double profit_rate_sales_weighted(std::span<const double> sales,
                                  std::span<const double> profit_rates) {
  return weighted_mean(profit_rates, sales);
}

double profit_share_va(std::span<const double> value_added, std::span<const double> profits) {
  check_sizes(value_added.size(), profits.size());
  stats::Sum g;
  for (double va : value_added) {
    if (!(va > 0.0)) fail(ErrorKind::kDomain, "value added must be positive");
    g.add(va);
  }
  const double gdp = g.value();
  stats::Sum s;
  for (std::size_t i = 0; i < profits.size(); ++i) {
    s.add(value_added[i] / gdp * (profits[i] / value_added[i]));
  }
  return s.value();
}

std::vector<FirmTerms> firm_terms(std::span<const mpower::FirmMeasures> rows) {
  std::vector<FirmTerms> out;
  out.reserve(rows.size());
  for (const auto& m : rows) {
    out.push_back({m.firm_id, m.sale, m.markup, m.rs, m.fc_adj, m.rs_adj, m.monopsony});
  }
  return out;
}

TheoremComponents theorem_components(double chi, std::span<const FirmTerms> firms) {
  if (firms.empty()) fail(ErrorKind::kDegenerate, "no firms to aggregate");
  std::vector<double> w, inv_mu, mu, rs, rs_adj, m;
  for (const auto& f : firms) {
    if (!(f.markup > 0.0)) {
      fail(ErrorKind::kDomain, fmt::format("firm {}: markup must be positive", f.firm_id));
    }
    w.push_back(f.sale);
    mu.push_back(f.markup);
    inv_mu.push_back(1.0 / f.markup);
    rs.push_back(f.rs);
    rs_adj.push_back(f.rs_adj);
    m.push_back(f.monopsony);
  }
  TheoremComponents c;
  c.chi = chi;
  c.mu_hsw = harmonic_mean(mu, w);
  c.rs_bar = weighted_mean(rs, w);
  c.rs_adj_bar = weighted_mean(rs_adj, w);
  c.m_bar = weighted_mean(m, w);
  c.cov_rs_invmu = weighted_cov(rs, inv_mu, w);
  c.cov_rs_adj_invmu = weighted_cov(rs_adj, inv_mu, w);
  c.cov_m_invmu = weighted_cov(m, inv_mu, w);
  return c;
}

double theorem_formula(const TheoremComponents& c, TheoremMode mode) {
  const double inv = 1.0 / c.mu_hsw;
  switch (mode) {
    case TheoremMode::kFull:
      return c.chi * (1.0 - c.rs_adj_bar * inv + c.m_bar * inv - c.cov_rs_adj_invmu +
                      c.cov_m_invmu);
    case TheoremMode::kCor1:
      return c.chi * (1.0 - c.rs_adj_bar * inv - c.cov_rs_adj_invmu);
    case TheoremMode::kCor2:
      return c.chi * (1.0 - c.rs_bar * inv - c.cov_rs_invmu);
    case TheoremMode::kCor3:
      return c.chi * (1.0 - inv);
  }
  return kNaN;
}

TheoremResult profit_share_theorem(double chi, std::span<const FirmTerms> firms,
                                   TheoremMode mode) {
  std::vector<std::string> offenders;
  for (const auto& f : firms) {
    bool bad = false;
    if (mode != TheoremMode::kFull) bad = std::fabs(f.monopsony) > kRestrictionTolerance;
    if (mode == TheoremMode::kCor2 || mode == TheoremMode::kCor3) {
      bad = bad || std::fabs(f.fc_adj - 1.0) > kRestrictionTolerance ||
            std::fabs(f.rs_adj - f.rs) > kRestrictionTolerance;
    }
    if (mode == TheoremMode::kCor3) bad = bad || std::fabs(f.rs - 1.0) > kRestrictionTolerance;
    if (bad) offenders.push_back(f.firm_id);
  }
  if (!offenders.empty()) {
    constexpr std::size_t kListed = 10;
    std::string list;
    for (std::size_t i = 0; i < offenders.size() && i < kListed; ++i) {
      list += (i ? ", " : "") + offenders[i];
    }
    if (offenders.size() > kListed) list += fmt::format(" (+{} more)", offenders.size() - kListed);
    static constexpr const char* kNames[] = {"full", "cor1", "cor2", "cor3"};
    fail(ErrorKind::kModeMismatch,
         fmt::format("mode {} restrictions violated by firms: {}",
                     kNames[static_cast<int>(mode)], list));
  }
  TheoremResult r;
  r.components = theorem_components(chi, firms);
  r.profit_share = theorem_formula(r.components, mode);
  return r;
}

double markup_backout(double chi, double profit_share) {
  if (!(profit_share < chi)) {
    fail(ErrorKind::kDomain, "profit share must be below the input-output multiplier");
  }
  return 1.0 / (1.0 - profit_share / chi);
}

NetworkBias network_bias_factor(double chi, double profit_share) {
  if (!(profit_share >= 0.0 && profit_share < 1.0)) {
    fail(ErrorKind::kDomain, "profit share must lie in [0, 1)");
  }
  if (!(chi >= 1.0)) fail(ErrorKind::kDomain, "input-output multiplier must be at least 1");
  NetworkBias b;
  b.factor = (chi - 1.0) * profit_share / ((1.0 - profit_share) * (chi - profit_share));
  b.naive_markup = markup_backout(1.0, profit_share);
  b.true_markup = markup_backout(chi, profit_share);
  b.relative_gap = b.factor / b.true_markup;
  b.net_markup_ratio =
      b.true_markup > 1.0 ? (b.naive_markup - 1.0) / (b.true_markup - 1.0) : kNaN;
  return b;
}

RentsDecomposition rents_decomposition(double chi, double mu_hsw, double rs_adj_bar, double cov) {
  if (!(mu_hsw > 0.0)) fail(ErrorKind::kDomain, "aggregate markup must be positive");
  const double inv = 1.0 / mu_hsw;
  RentsDecomposition d;
  d.rents = chi * (1.0 - inv);
  d.fixed_costs = chi * (1.0 - rs_adj_bar);
  d.nonlinearities = chi * ((inv - 1.0) * (1.0 - rs_adj_bar) - cov);
  return d;
}

IncomeShares income_shares(double labor_comp, double gdp, double profit_share) {
  if (!(gdp > 0.0)) fail(ErrorKind::kDomain, "GDP must be positive");
  IncomeShares s;
  s.labor = labor_comp / gdp;
  s.profit = profit_share;
  s.capital = 1.0 - s.labor - s.profit;
  s.implausible = s.capital < -0.05;
  return s;
}

AggregateYear aggregate_year(int year, std::span<const mpower::FirmMeasures> rows,
                             const panel::MacroYear& macro, const AggregateOptions& options) {
  if (rows.empty()) fail(ErrorKind::kDegenerate, fmt::format("no firms in year {}", year));
  if (!(macro.gdp > 0.0)) fail(ErrorKind::kDomain, fmt::format("GDP not positive in {}", year));
  AggregateYear a;
  a.year = year;
  a.n_firms = rows.size();

  std::vector<double> sales, rates, markups, fc_adj;
  for (const auto& m : rows) {
    sales.push_back(m.sale);
    rates.push_back(m.profit_rate);
    markups.push_back(m.markup);
    fc_adj.push_back(m.fc_adj);
  }
  const double sample_sales = stats::sum(sales);
  if (!(sample_sales > 0.0)) fail(ErrorKind::kDegenerate, "zero total sales");
  a.chi_sample = sample_sales / macro.gdp;
  a.chi_macro = macro.total_sales / macro.gdp;
  a.chi = options.chi == ChiSource::kMacro ? a.chi_macro : a.chi_sample;
  if (!(a.chi > 0.0)) fail(ErrorKind::kDegenerate, fmt::format("zero total sales in {}", year));
  // The sample stands in for the economy: its GDP is the macro GDP scaled by
  // the sample's share of total sales.
  a.gdp_effective = sample_sales / a.chi;

  const auto terms = firm_terms(rows);
  const auto c = theorem_components(a.chi, terms);
  a.mu_hsw = c.mu_hsw;
  a.mu_sw = weighted_mean(markups, sales);
  a.markup_headline = options.markup == MarkupAggregation::kHarmonic ? a.mu_hsw : a.mu_sw;
  a.rs_bar = c.rs_bar;
  a.rs_adj_bar = c.rs_adj_bar;
  a.fc_adj_bar = weighted_mean(fc_adj, sales);
  a.m_bar = c.m_bar;
  a.cov_rs_invmu = c.cov_rs_invmu;
  a.cov_rs_adj_invmu = c.cov_rs_adj_invmu;
  a.cov_m_invmu = c.cov_m_invmu;
  a.profit_share_domar = profit_share_domar(sales, rates, a.gdp_effective);
  a.profit_share_thm = theorem_formula(c, TheoremMode::kFull);
  a.profit_share_cor1 = theorem_formula(c, TheoremMode::kCor1);
  a.profit_share_cor2 = theorem_formula(c, TheoremMode::kCor2);
  a.profit_share_cor3 = theorem_formula(c, TheoremMode::kCor3);
  a.profit_rate_sw = profit_rate_sales_weighted(sales, rates);
  a.profit_share_headline = options.markup == MarkupAggregation::kHarmonic
                                ? a.profit_share_domar
                                : a.profit_rate_sw;
  a.mu_backout =
      a.profit_share_domar < a.chi ? markup_backout(a.chi, a.profit_share_domar) : kNaN;

  const auto d = rents_decomposition(a.chi, a.mu_hsw, a.rs_adj_bar, a.cov_rs_adj_invmu);
  a.rents = d.rents;
  a.fixed_costs_term = d.fixed_costs;
  a.nonlinearities = d.nonlinearities;

  const auto shares = income_shares(macro.labor_comp, macro.gdp, a.profit_share_domar);
  a.labor_share = shares.labor;
  a.capital_share = shares.capital;
  a.implausible_shares = shares.implausible;

  std::vector<double> firm_r, firm_k;
  stats::Sum capital;
  for (const auto& m : rows) {
    capital.add(m.capital);
    if (m.user_cost && m.capital > 0.0) {
      firm_r.push_back(*m.user_cost);
      firm_k.push_back(m.capital);
    }
  }
  if (capital.value() > 0.0) {
    const double k_economy = capital.value() * macro.gdp / a.gdp_effective;
    const auto uc = mpower::aggregate_user_cost(macro.gdp, k_economy, a.labor_share,
                                                a.profit_share_domar, firm_r, firm_k);
    a.user_cost_identified = uc.identified;
    a.user_cost_firm = uc.firm_weighted;
  } else {
    a.user_cost_identified = kNaN;
    a.user_cost_firm = kNaN;
  }

  auto share_at = [&](double r) {
    std::vector<double> alt;
    for (const auto& m : rows) {
      alt.push_back(
          mpower::profit_rate_exogenous_r(m.theta_v, m.markup, r, m.capital, m.sale, m.fc));
    }
    return profit_share_domar(sales, alt, a.gdp_effective);
  };
  a.profit_share_r_rule =
      share_at(mpower::user_cost_deu(macro.nominal_rate, macro.inflation, options.depreciation));
  a.profit_share_r_external =
      macro.external_user_cost ? share_at(*macro.external_user_cost) : kNaN;
  return a;
}

namespace {

struct Field {
  const char* name;
  double AggregateYear::*member;
};

const std::vector<Field>& aggregate_fields() {
  static const std::vector<Field> fields = {
      {"chi", &AggregateYear::chi},
      {"chi_sample", &AggregateYear::chi_sample},
      {"chi_macro", &AggregateYear::chi_macro},
      {"mu_hsw", &AggregateYear::mu_hsw},
      {"mu_sw", &AggregateYear::mu_sw},
      {"markup_headline", &AggregateYear::markup_headline},
      {"rs_bar", &AggregateYear::rs_bar},
      {"rs_adj_bar", &AggregateYear::rs_adj_bar},
      {"fc_adj_bar", &AggregateYear::fc_adj_bar},
      {"m_bar", &AggregateYear::m_bar},
      {"cov_rs_invmu", &AggregateYear::cov_rs_invmu},
      {"cov_rs_adj_invmu", &AggregateYear::cov_rs_adj_invmu},
      {"cov_m_invmu", &AggregateYear::cov_m_invmu},
      {"profit_share_domar", &AggregateYear::profit_share_domar},
      {"profit_share_thm", &AggregateYear::profit_share_thm},
      {"profit_share_cor1", &AggregateYear::profit_share_cor1},
      {"profit_share_cor2", &AggregateYear::profit_share_cor2},
      {"profit_share_cor3", &AggregateYear::profit_share_cor3},
      {"profit_rate_sw", &AggregateYear::profit_rate_sw},
      {"profit_share_headline", &AggregateYear::profit_share_headline},
      {"mu_backout", &AggregateYear::mu_backout},
      {"rents", &AggregateYear::rents},
      {"fixed_costs_term", &AggregateYear::fixed_costs_term},
      {"nonlinearities", &AggregateYear::nonlinearities},
      {"labor_share", &AggregateYear::labor_share},
      {"capital_share", &AggregateYear::capital_share},
      {"user_cost_identified", &AggregateYear::user_cost_identified},
      {"user_cost_firm", &AggregateYear::user_cost_firm},
      {"profit_share_r_rule", &AggregateYear::profit_share_r_rule},
      {"profit_share_r_external", &AggregateYear::profit_share_r_external},
      {"gdp_effective", &AggregateYear::gdp_effective},
  };
  return fields;
}

std::string format_columns(const std::vector<AggregateYear>& years,
                           const std::vector<std::string>& names) {
  std::vector<std::string> header{"year"};
  header.insert(header.end(), names.begin(), names.end());
  csv::Writer w(header);
  for (const auto& a : years) {
    w.cell(a.year);
    for (const auto& n : names) {
      for (const auto& f : aggregate_fields()) {
        if (n == f.name) w.cell(a.*(f.member));
      }
    }
    w.end_row();
  }
  return w.str();
}

}  // namespace

std::string format_aggregates(const std::vector<AggregateYear>& years) {
  std::vector<std::string> header{"year", "n_firms"};
  for (const auto& f : aggregate_fields()) header.emplace_back(f.name);
  header.emplace_back("implausible_shares");
  csv::Writer w(header);
  for (const auto& a : years) {
    w.cell(a.year).cell(static_cast<long long>(a.n_firms));
    for (const auto& f : aggregate_fields()) w.cell(a.*(f.member));
    w.cell(a.implausible_shares);
    w.end_row();
  }
  return w.str();
}

std::vector<AggregateYear> parse_aggregates(std::string_view csv_text) {
  const auto table = csv::parse(csv_text);
  const auto year_col = table.column("year");
  const auto n_col = table.column("n_firms");
  const auto flag_col = table.column("implausible_shares");
  std::vector<std::pair<std::size_t, double AggregateYear::*>> cols;
  for (const auto& f : aggregate_fields()) cols.emplace_back(table.column(f.name), f.member);
  std::vector<AggregateYear> out;
  for (const auto& row : table.rows) {
    AggregateYear a;
    a.year = static_cast<int>(csv::parse_int(row[year_col]).value_or(0));
    a.n_firms = static_cast<std::size_t>(csv::parse_int(row[n_col]).value_or(0));
    a.implausible_shares = csv::parse_int(row[flag_col]).value_or(0) != 0;
    for (const auto& [c, member] : cols) a.*member = csv::parse_double(row[c]).value_or(kNaN);
    out.push_back(a);
  }
  return out;
}

std::string format_income_shares(const std::vector<AggregateYear>& years) {
  csv::Writer w({"year", "labor_share", "capital_share", "profit_share", "implausible"});
  for (const auto& a : years) {
    w.cell(a.year).cell(a.labor_share).cell(a.capital_share).cell(a.profit_share_domar)
        .cell(a.implausible_shares);
    w.end_row();
  }
  return w.str();
}

std::string format_fig_markup_rs(const std::vector<AggregateYear>& years) {
  return format_columns(years, {"mu_hsw", "mu_sw", "markup_headline", "rs_bar", "rs_adj_bar",
                                "fc_adj_bar"});
}

std::string format_fig_profit_share(const std::vector<AggregateYear>& years) {
  return format_columns(years, {"profit_share_domar", "profit_share_thm", "profit_share_cor1",
                                "profit_share_cor2", "profit_share_cor3", "profit_rate_sw",
                                "chi"});
}

std::string format_fig_decomposition(const std::vector<AggregateYear>& years) {
  return format_columns(years, {"rents", "fixed_costs_term", "nonlinearities",
                                "profit_share_cor1"});
}

std::string format_fig_user_costs(const std::vector<AggregateYear>& years) {
  return format_columns(years, {"user_cost_identified", "user_cost_firm"});
}

std::string format_fig_profit_shares_by_r(const std::vector<AggregateYear>& years) {
  return format_columns(years, {"profit_share_domar", "profit_share_r_rule",
                                "profit_share_r_external"});
}

}  // namespace domar::agg
