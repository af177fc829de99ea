#include "domar/mpower.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include <fmt/format.h>

#include "domar/csv.hpp"
#include "domar/error.hpp"
#include "domar/stats.hpp"

namespace domar::mpower {

double markup(double theta_v, double sale, double variable_cost) {
  if (!(variable_cost > 0.0)) fail(ErrorKind::kDomain, "undefined markup: variable cost is zero");
  if (!(sale > 0.0)) fail(ErrorKind::kDomain, "undefined markup: sales must be positive");
  if (!(theta_v > 0.0)) fail(ErrorKind::kDomain, "undefined markup: elasticity must be positive");
  return theta_v * sale / variable_cost;
}

double fixed_cost_adjustment(double tc, double fc) {
  if (fc < 0.0) fail(ErrorKind::kDomain, "fixed costs must be nonnegative");
  if (fc >= tc) fail(ErrorKind::kDomain, "fixed costs exhaust total costs");
  return tc / (tc - fc);
}

double monopsony_term(double fc_adj, std::span<const InputWedge> inputs) {
  stats::Sum s;
  for (const auto& in : inputs) {
    if (!(in.markdown > 0.0 && in.markdown <= 1.0)) {
      fail(ErrorKind::kDomain, fmt::format("markdown {} outside (0, 1]", in.markdown));
    }
    if (in.theta < 0.0) fail(ErrorKind::kDomain, "input elasticity must be nonnegative");
    s.add(in.theta * (1.0 - in.markdown));
  }
  return fc_adj * s.value();
}

double profit_rate(double mu, double rs_adj, double monopsony) {
  if (!(mu > 0.0)) fail(ErrorKind::kDomain, "markup must be positive");
  return 1.0 - rs_adj / mu + monopsony / mu;
}

double profit_rate_exogenous_r(double theta_v, double mu, double r, double k, double sale,
                               double fc) {
  if (!(mu > 0.0)) fail(ErrorKind::kDomain, "markup must be positive");
  if (!(sale > 0.0)) fail(ErrorKind::kDomain, "sales must be positive");
  return 1.0 - theta_v / mu - r * k / sale - fc / sale;
}

double user_cost_foc(double theta_k, double mu, double sale, double k) {
  if (!(k > 0.0)) fail(ErrorKind::kDomain, "undefined user cost: capital is not positive");
  if (!(mu > 0.0)) fail(ErrorKind::kDomain, "undefined user cost: markup is not positive");
  return theta_k / mu * sale / k;
}

double user_cost_deu(double nominal_rate, double inflation, double depreciation) {
  return nominal_rate - inflation + depreciation;
}

AggregateUserCost aggregate_user_cost(double gdp, double capital, double labor_share,
                                      double profit_share, std::span<const double> firm_r,
                                      std::span<const double> firm_k) {
  if (!(capital > 0.0)) fail(ErrorKind::kDegenerate, "aggregate capital stock is zero");
  if (firm_r.size() != firm_k.size()) {
    fail(ErrorKind::kParameter, "user-cost and capital series differ in length");
  }
  AggregateUserCost out;
  out.capital = capital;
  out.identified = gdp / capital * (1.0 - labor_share - profit_share);
  stats::Sum rk, kk;
  for (std::size_t i = 0; i < firm_r.size(); ++i) {
    rk.add(firm_r[i] * firm_k[i]);
    kk.add(firm_k[i]);
  }
  out.firms_used = firm_r.size();
  out.firm_weighted = kk.value() > 0.0 ? rk.value() / kk.value() : 0.0;
  return out;
}

namespace {

double capital_stock(const panel::FirmYear& o, pfe::CapitalMeasure measure, bool& fallback) {
  fallback = false;
  std::optional<double> phys = o.ppegt_lag;
  std::optional<double> intang = o.k_int_lag;
  if (!phys) {
    fallback = true;
    phys = o.ppegt;
    intang = o.k_int;
  }
  double k = phys.value_or(0.0);
  if (measure == pfe::CapitalMeasure::kTotal) k += intang.value_or(0.0);
  return k;
}

}  // namespace

MeasuresResult compute_firm_measures(const panel::PanelDataset& data,
                                     const std::vector<pfe::ElasticityEstimate>& elasticities,
                                     const MeasureOptions& options) {
  MeasuresResult out;
  for (const auto& o : data.observations) {
    if (!o.industry) continue;
    const auto* est = pfe::find_estimate(elasticities, *o.industry, o.year);
    if (!est || est->missing()) {
      ++out.skipped_no_elasticity;
      continue;
    }
    const double sale = o.sale.value_or(0.0);
    double v = o.cogs.value_or(0.0);
    if (options.variable_input == pfe::VariableInput::kOpex) v += o.sga.value_or(0.0);
    if (!(sale > 0.0 && v > 0.0)) {
      ++out.skipped_nonpositive;
      continue;
    }
    FirmMeasures m;
    m.firm_id = o.firm_id;
    m.year = o.year;
    m.industry = *o.industry;
    m.sale = sale;
    m.variable_cost = v;
    m.theta_v = *est->theta_v;
    m.theta_k = *est->theta_k;
    m.capital = capital_stock(o, options.capital, m.capital_fallback);
    if (m.capital_fallback) ++out.capital_fallbacks;
    if (!(m.theta_v > 0.0)) {
      ++out.skipped_nonpositive;
      continue;
    }
    m.markup = markup(m.theta_v, sale, v);
    m.alpha_v = v / sale;
    m.rs = m.theta_v + m.theta_k;
    m.fc = o.rd.value_or(0.0);
    if (options.fixed == FixedCost::kSgaRd) m.fc += o.sga.value_or(0.0);

    double r = 0.0;
    double capital_charge = 0.0;
    switch (options.user_cost) {
      case UserCostMethod::kFoc:
        capital_charge = m.theta_k * sale / m.markup;
        if (m.capital > 0.0) {
          r = user_cost_foc(m.theta_k, m.markup, sale, m.capital);
          m.user_cost = r;
        } else {
          ++out.undefined_user_cost;
        }
        break;
      case UserCostMethod::kDeu: {
        const auto& macro = data.macro_for(o.year);
        r = user_cost_deu(macro.nominal_rate, macro.inflation, options.depreciation);
        m.user_cost = r;
        capital_charge = r * m.capital;
        break;
      }
      case UserCostMethod::kExternal: {
        const auto& macro = data.macro_for(o.year);
        if (!macro.external_user_cost) {
          fail(ErrorKind::kDomain, fmt::format("no external user cost for year {}", o.year));
        }
        r = *macro.external_user_cost;
        m.user_cost = r;
        capital_charge = r * m.capital;
        break;
      }
    }
    m.tc = v + m.fc + (options.include_capital ? capital_charge : 0.0);
    m.fc_adj = fixed_cost_adjustment(m.tc, m.fc);
    m.rs_adj = m.rs * m.fc_adj;
    m.monopsony = 0.0;
    if (options.user_cost == UserCostMethod::kFoc) {
      m.profit_rate = profit_rate(m.markup, m.rs_adj, m.monopsony);
    } else {
      m.profit_rate = profit_rate_exogenous_r(m.theta_v, m.markup, r, m.capital, sale, m.fc);
    }
    out.rows.push_back(std::move(m));
  }

  std::sort(out.rows.begin(), out.rows.end(), [](const auto& a, const auto& b) {
    return std::tie(a.year, a.firm_id) < std::tie(b.year, b.firm_id);
  });
  std::map<int, double> year_sales;
  for (const auto& m : out.rows) year_sales[m.year] += m.sale;
  for (auto& m : out.rows) {
    m.omega = m.sale / year_sales[m.year];
    m.domar_weight = m.sale / data.macro_for(m.year).gdp;
  }
  if (out.undefined_user_cost > 0) {
    out.warnings.push_back(fmt::format(
        "{} firm-years have nonpositive capital; excluded from user-cost aggregates",
        out.undefined_user_cost));
  }
  if (out.capital_fallbacks > 0) {
    out.warnings.push_back(fmt::format(
        "{} firm-years lack a prior-year capital stock; current stock used",
        out.capital_fallbacks));
  }
  return out;
}

namespace {

const std::vector<std::string> kMeasureColumns = {
    "firm_id", "year",     "industry",  "markup",        "rs",           "fc_adj",
    "rs_adj",  "monopsony", "profit_rate", "user_cost",  "omega",        "domar_weight",
    "sale",    "variable_cost", "capital", "theta_v",    "theta_k",      "fc",
    "tc",      "alpha_v",  "capital_fallback"};

}  // namespace

std::string format_firm_measures(const std::vector<FirmMeasures>& rows) {
  csv::Writer w(kMeasureColumns);
  for (const auto& m : rows) {
    w.cell(m.firm_id).cell(m.year).cell(m.industry).cell(m.markup).cell(m.rs).cell(m.fc_adj)
        .cell(m.rs_adj).cell(m.monopsony).cell(m.profit_rate).cell(m.user_cost).cell(m.omega)
        .cell(m.domar_weight).cell(m.sale).cell(m.variable_cost).cell(m.capital)
        .cell(m.theta_v).cell(m.theta_k).cell(m.fc).cell(m.tc).cell(m.alpha_v)
        .cell(m.capital_fallback);
    w.end_row();
  }
  return w.str();
}

std::vector<FirmMeasures> parse_firm_measures(std::string_view csv_text) {
  const auto table = csv::parse(csv_text);
  std::vector<std::size_t> idx;
  for (const auto& name : kMeasureColumns) idx.push_back(table.column(name));
  auto num = [](const std::string& cell, const char* name) {
    auto v = csv::parse_double(cell);
    if (!v) fail(ErrorKind::kSchema, fmt::format("blank value in column '{}'", name));
    return *v;
  };
  std::vector<FirmMeasures> out;
  for (const auto& row : table.rows) {
    FirmMeasures m;
    m.firm_id = row[idx[0]];
    m.year = static_cast<int>(num(row[idx[1]], "year"));
    m.industry = static_cast<int>(num(row[idx[2]], "industry"));
    m.markup = num(row[idx[3]], "markup");
    m.rs = num(row[idx[4]], "rs");
    m.fc_adj = num(row[idx[5]], "fc_adj");
    m.rs_adj = num(row[idx[6]], "rs_adj");
    m.monopsony = num(row[idx[7]], "monopsony");
    m.profit_rate = num(row[idx[8]], "profit_rate");
    m.user_cost = csv::parse_double(row[idx[9]]);
    m.omega = num(row[idx[10]], "omega");
    m.domar_weight = num(row[idx[11]], "domar_weight");
    m.sale = num(row[idx[12]], "sale");
    m.variable_cost = num(row[idx[13]], "variable_cost");
    m.capital = num(row[idx[14]], "capital");
    m.theta_v = num(row[idx[15]], "theta_v");
    m.theta_k = num(row[idx[16]], "theta_k");
    m.fc = num(row[idx[17]], "fc");
    m.tc = num(row[idx[18]], "tc");
    m.alpha_v = num(row[idx[19]], "alpha_v");
    m.capital_fallback = num(row[idx[20]], "capital_fallback") != 0.0;
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace domar::mpower
