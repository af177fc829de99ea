#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "domar/panel.hpp"
#include "domar/pfe.hpp"

namespace domar::mpower {

/// theta_v * sale / variable_cost.
double markup(double theta_v, double sale, double variable_cost);

/// tc / (tc - fc).
double fixed_cost_adjustment(double tc, double fc);

struct InputWedge {
  double theta = 0.0;     // output elasticity of the input
  double markdown = 1.0;  // rental rate over marginal revenue product, in (0, 1]
};

/// fc_adj * sum theta_j (1 - nu_j).
double monopsony_term(double fc_adj, std::span<const InputWedge> inputs);

/// 1 - rs_adj/mu + m/mu.
double profit_rate(double mu, double rs_adj, double monopsony);

/// 1 - theta_v/mu - r k / sale - fc / sale, for a user cost set outside the firm.
double profit_rate_exogenous_r(double theta_v, double mu, double r, double k, double sale,
                               double fc);

enum class UserCostMethod { kFoc, kDeu, kExternal };
enum class FixedCost { kRd, kSgaRd };

/// Capital first-order condition: theta_k / mu * sale / k.
double user_cost_foc(double theta_k, double mu, double sale, double k);
/// i - inflation + depreciation.
double user_cost_deu(double nominal_rate, double inflation, double depreciation = 0.12);

struct AggregateUserCost {
  double identified = 0.0;      // GDP / K * (1 - labor share - profit share)
  double firm_weighted = 0.0;   // capital-weighted mean of firm-level user costs
  double capital = 0.0;         // K used by the identity
  std::size_t firms_used = 0;
};

/// `firm_r` and `firm_k` hold firms with a defined user cost; `capital` is the
/// economy-wide stock.
AggregateUserCost aggregate_user_cost(double gdp, double capital, double labor_share,
                                      double profit_share, std::span<const double> firm_r,
                                      std::span<const double> firm_k);

struct FirmMeasures {
  std::string firm_id;
  int year = 0;
  panel::IndustryCode industry = 0;
  double sale = 0.0;
  double variable_cost = 0.0;
  double capital = 0.0;  // stock entering the user-cost charge
  double theta_v = 0.0;
  double theta_k = 0.0;
  double markup = 0.0;
  double alpha_v = 0.0;
  double rs = 0.0;
  double fc = 0.0;
  double tc = 0.0;
  double fc_adj = 1.0;
  double rs_adj = 0.0;
  double monopsony = 0.0;
  double profit_rate = 0.0;
  std::optional<double> user_cost;  // nullopt when undefined (k <= 0 under foc)
  double omega = 0.0;
  double domar_weight = 0.0;
  bool capital_fallback = false;  // current stock used for lack of a prior-year stock
};

struct MeasureOptions {
  pfe::VariableInput variable_input = pfe::VariableInput::kOpex;
  pfe::CapitalMeasure capital = pfe::CapitalMeasure::kTotal;
  FixedCost fixed = FixedCost::kRd;
  bool include_capital = true;
  UserCostMethod user_cost = UserCostMethod::kFoc;
  double depreciation = 0.12;
};

struct MeasuresResult {
  std::vector<FirmMeasures> rows;  // sorted by (year, firm_id)
  std::size_t skipped_no_elasticity = 0;
  std::size_t skipped_nonpositive = 0;  // zero sales or variable cost
  std::size_t undefined_user_cost = 0;
  std::size_t capital_fallbacks = 0;
  std::vector<std::string> warnings;
};

/// Firm-year measures from a cleaned panel and post-processed elasticities.
MeasuresResult compute_firm_measures(const panel::PanelDataset& data,
                                     const std::vector<pfe::ElasticityEstimate>& elasticities,
                                     const MeasureOptions& options);

std::string format_firm_measures(const std::vector<FirmMeasures>& rows);
std::vector<FirmMeasures> parse_firm_measures(std::string_view csv_text);

}  // namespace domar::mpower
