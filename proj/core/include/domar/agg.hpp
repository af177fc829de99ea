#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "domar/mpower.hpp"
#include "domar/panel.hpp"

namespace domar::agg {

struct Moments {
  double mean = 0.0;      // sum w x / sum w
  double harmonic = 0.0;  // (sum w / x / sum w)^-1
  double cov = 0.0;       // weighted covariance of x with the second series
};

double weighted_mean(std::span<const double> x, std::span<const double> w);
double harmonic_mean(std::span<const double> x, std::span<const double> w);
double weighted_cov(std::span<const double> x, std::span<const double> y,
                    std::span<const double> w);
/// Harmonic mean is only evaluated (and only required to be positive) when
/// every x is positive; otherwise it is NaN.
Moments weighted_moments(std::span<const double> x, std::span<const double> w,
                         std::span<const double> y);

/// sum (sale_i / gdp) * profit_rate_i.
double profit_share_domar(std::span<const double> sales, std::span<const double> profit_rates,
                          double gdp);
/// Sales-share weighted mean of profit rates.
double profit_rate_sales_weighted(std::span<const double> sales,
                                  std::span<const double> profit_rates);
/// sum (va_i / gdp) * (profit_i / va_i) with gdp = sum va.
double profit_share_va(std::span<const double> value_added, std::span<const double> profits);

enum class TheoremMode { kFull, kCor1, kCor2, kCor3 };

/// Per-firm inputs to the aggregation formula.
struct FirmTerms {
  std::string firm_id;
  double sale = 0.0;
  double markup = 1.0;
  double rs = 1.0;
  double fc_adj = 1.0;
  double rs_adj = 1.0;
  double monopsony = 0.0;
};

std::vector<FirmTerms> firm_terms(std::span<const mpower::FirmMeasures> rows);

struct TheoremComponents {
  double chi = 0.0;
  double mu_hsw = 0.0;
  double rs_bar = 0.0;
  double rs_adj_bar = 0.0;
  double m_bar = 0.0;
  double cov_rs_invmu = 0.0;
  double cov_rs_adj_invmu = 0.0;
  double cov_m_invmu = 0.0;
};

TheoremComponents theorem_components(double chi, std::span<const FirmTerms> firms);

/// Evaluates the aggregation formula for `mode` without checking that the
/// firm data satisfy the mode's restrictions.
double theorem_formula(const TheoremComponents& c, TheoremMode mode);

struct TheoremResult {
  double profit_share = 0.0;
  TheoremComponents components;
};

/// Checks mode restrictions (cor1: no monopsony; cor2: also fc_adj = 1;
/// cor3: also rs = 1) and evaluates. Violations raise a mode-mismatch error
/// listing the offending firms.
TheoremResult profit_share_theorem(double chi, std::span<const FirmTerms> firms,
                                   TheoremMode mode);

/// (1 - share / chi)^-1.
double markup_backout(double chi, double profit_share);

struct NetworkBias {
  double factor = 0.0;            // (chi - 1) L / ((1 - L)(chi - L))
  double naive_markup = 0.0;      // backout with chi = 1
  double true_markup = 0.0;       // backout with the actual chi
  double relative_gap = 0.0;      // factor / true markup
  double net_markup_ratio = 0.0;  // (naive - 1) / (true - 1)
};

NetworkBias network_bias_factor(double chi, double profit_share);

struct RentsDecomposition {
  double rents = 0.0;
  double fixed_costs = 0.0;
  double nonlinearities = 0.0;
  double total() const { return rents + fixed_costs + nonlinearities; }
};

/// `cov` is the sales-weighted covariance of adjusted returns to scale with
/// inverse markups.
RentsDecomposition rents_decomposition(double chi, double mu_hsw, double rs_adj_bar, double cov);

struct IncomeShares {
  double labor = 0.0;
  double capital = 0.0;
  double profit = 0.0;
  bool implausible = false;  // capital share below -0.05
};

IncomeShares income_shares(double labor_comp, double gdp, double profit_share);

enum class MarkupAggregation { kHarmonic, kSalesWeighted };
enum class ChiSource { kMacro, kSample };

struct AggregateOptions {
  MarkupAggregation markup = MarkupAggregation::kHarmonic;
  ChiSource chi = ChiSource::kMacro;
  double depreciation = 0.12;  // for the alternative profit share under the rate rule
};

struct AggregateYear {
  int year = 0;
  std::size_t n_firms = 0;
  double chi = 0.0;
  double chi_sample = 0.0;
  double chi_macro = 0.0;
  double mu_hsw = 0.0;
  double mu_sw = 0.0;  // sales-weighted arithmetic markup
  double markup_headline = 0.0;
  double rs_bar = 0.0;
  double rs_adj_bar = 0.0;
  double fc_adj_bar = 0.0;
  double m_bar = 0.0;
  double cov_rs_invmu = 0.0;
  double cov_rs_adj_invmu = 0.0;
  double cov_m_invmu = 0.0;
  double profit_share_domar = 0.0;
  double profit_share_thm = 0.0;
  double profit_share_cor1 = 0.0;
  double profit_share_cor2 = 0.0;
  double profit_share_cor3 = 0.0;
  double profit_rate_sw = 0.0;
  double profit_share_headline = 0.0;
  double mu_backout = 0.0;
  double rents = 0.0;
  double fixed_costs_term = 0.0;
  double nonlinearities = 0.0;
  double labor_share = 0.0;
  double capital_share = 0.0;
  bool implausible_shares = false;
  double user_cost_identified = 0.0;
  double user_cost_firm = 0.0;
  double profit_share_r_rule = 0.0;      // profit rates recomputed with i - inflation + depreciation
  double profit_share_r_external = 0.0;  // ... with the external series; NaN when absent
  double gdp_effective = 0.0;  // GDP scaled to the sample's share of sales
};

/// Aggregates for one year. `rows` holds that year's firm measures.
AggregateYear aggregate_year(int year, std::span<const mpower::FirmMeasures> rows,
                             const panel::MacroYear& macro, const AggregateOptions& options);

std::string format_aggregates(const std::vector<AggregateYear>& years);
std::vector<AggregateYear> parse_aggregates(std::string_view csv_text);

std::string format_income_shares(const std::vector<AggregateYear>& years);
std::string format_fig_markup_rs(const std::vector<AggregateYear>& years);
std::string format_fig_profit_share(const std::vector<AggregateYear>& years);
std::string format_fig_decomposition(const std::vector<AggregateYear>& years);
std::string format_fig_user_costs(const std::vector<AggregateYear>& years);
/// Profit shares under each available user-cost measure, with the share
/// implied by the identified aggregate user cost.
std::string format_fig_profit_shares_by_r(const std::vector<AggregateYear>& years);

}  // namespace domar::agg
