#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "domar/agg.hpp"
#include "domar/panel.hpp"

namespace domar::oracle {

// ---------------------------------------------------------------------------
// Cobb-Douglas firm panel

struct IndustrySpec {
  panel::IndustryCode code = 31;
  double theta_v = 0.7;
  double theta_k = 0.3;
};

struct PanelSpec {
  std::uint64_t seed = 1;
  std::size_t firms_per_industry = 200;
  int n_years = 20;
  int first_year = 2000;
  std::vector<IndustrySpec> industries{IndustrySpec{}};

  double rho = 0.8;              // productivity persistence
  double innovation_sd = 0.01;   // productivity innovations; 0 switches productivity off
  double noise_sd = 0.0;         // multiplicative measurement error on sales

  double markup_median = 1.2;    // lognormal, iid across firm-years
  double markup_log_sd = 0.3;
  double capital_mean = 4.0;     // firm-level mean of log capital
  double capital_firm_sd = 1.0;
  double capital_persistence = 0.8;
  double capital_response = 0.5;   // loading of next-period capital on productivity
  double capital_noise_sd = 0.5;
  double proxy_omega = 1.0;        // log proxy loadings
  double proxy_capital = 0.5;
  double proxy_input = 0.2;
  double proxy_noise_sd = 0.0;

  double sga_share = 0.3;          // SG&A share of variable-input spending
  double intangible_share = 0.2;   // intangible share of the capital stock
  double fixed_cost_ratio = 0.02;  // R&D over sales
  double churn = 0.0;              // probability a firm has a shortened spell
  double deflator_growth = 0.0;    // annual growth of the price index
  double sample_coverage = 0.5;    // sample sales over economy-wide sales
  double chi = 1.8;                // economy-wide sales over GDP
  double labor_share = 0.55;
  double nominal_rate = 0.05;
  double inflation = 0.02;
  double external_user_cost = 0.15;
};

/// Primitives of one generated firm-year.
struct FirmTruth {
  std::string firm_id;
  int year = 0;
  panel::IndustryCode industry = 0;
  double theta_v = 0.0;
  double theta_k = 0.0;
  double markup = 0.0;
  double omega = 0.0;
  double noise = 0.0;
  double sale = 0.0;           // real
  double variable_cost = 0.0;  // real
  double capital = 0.0;        // real, beginning-of-year
  double fixed_cost = 0.0;
  double profit_rate = 0.0;    // 1 - (variable + capital charge + fixed) / sale
};

struct GeneratedPanel {
  panel::PanelDataset data;  // nominal, not deflated
  std::vector<FirmTruth> truth;
  PanelSpec spec;
};

GeneratedPanel gen_cobb_douglas_panel(const PanelSpec& spec);
/// Two-industry panel with churn, price drift and measurement noise; the
/// bundled fixture is this spec at seed 7.
PanelSpec fixture_spec(std::uint64_t seed = 7);
std::string format_panel_truth(const std::vector<FirmTruth>& truth);

// ---------------------------------------------------------------------------
// Production networks

struct InputUse {
  int supplier = -1;  // node index; -1 labor, -2 capital
  double theta = 0.0;
  double markdown = 1.0;
};

struct NodeSpec {
  double markup = 1.0;
  double final_demand = 0.0;
  double fixed_cost_ratio = 0.0;  // fixed cost over sales, paid to labor
  std::vector<InputUse> inputs;
};

enum class Topology { kNone, kVertical, kRandomAcyclic, kCyclic };

struct NetworkSpec {
  std::uint64_t seed = 1;
  int nodes = 10;
  Topology topology = Topology::kRandomAcyclic;
  double link_probability = 0.4;
  double user_cost = 0.1;  // uniform rental rate of capital
};

struct NodeTruth {
  std::string id;
  double sale = 0.0;
  double markup = 0.0;
  double rs = 0.0;
  double fc = 0.0;
  double tc = 0.0;
  double fc_adj = 1.0;
  double rs_adj = 0.0;
  double monopsony = 0.0;
  double profit = 0.0;
  double profit_rate = 0.0;
  double value_added = 0.0;
  double intermediates = 0.0;
  double labor_payment = 0.0;
  double capital_payment = 0.0;
  double capital_stock = 0.0;
};

struct NetworkEconomy {
  std::vector<NodeSpec> spec;
  std::vector<NodeTruth> nodes;
  double gdp = 0.0;
  double total_sales = 0.0;
  double total_profit = 0.0;
  double chi = 0.0;
  double labor_comp = 0.0;
  double capital_payments = 0.0;
  double user_cost = 0.0;
  double closure_residual = 0.0;  // largest accounting residual found
};

/// Solves flows downstream to upstream; node i may only buy from j > i.
NetworkEconomy solve_network(const std::vector<NodeSpec>& nodes, double user_cost = 0.1);
NetworkEconomy gen_network_economy(const NetworkSpec& spec);
/// Chain of `length` producers, each earning `profit_rate` on sales, with
/// final spending `gdp` on the most downstream one.
NetworkEconomy gen_vertical_chain(int length, double profit_rate, double gdp);
/// Two-producer chain: consumer spend 100, profit rates 0.10, labor 81.
NetworkEconomy gen_vertical_economy();

std::vector<agg::FirmTerms> firm_terms(const NetworkEconomy& economy);
std::string format_network_truth(const NetworkEconomy& economy);
std::string format_network_flows(const NetworkEconomy& economy);
/// Re-checks closure: sales = costs + profit, GDP = final demand = sum VA,
/// profit = sum of node profits. Returns the largest residual.
double closure_residual(const NetworkEconomy& economy);

// ---------------------------------------------------------------------------
// Cost-minimizing firm with upward-sloping input supply

struct SuppliedInput {
  double theta = 0.0;
  double wage_level = 1.0;  // w = wage_level * x^eta
  double eta = 0.0;         // inverse supply elasticity; markdown = 1 / (1 + eta)
  double quantity = 0.0;
  double expenditure = 0.0;
  double markdown() const { return 1.0 / (1.0 + eta); }
};

struct SuppliedFirm {
  double productivity = 1.0;
  double output = 1.0;
  double markup = 1.0;
  double fixed_cost = 0.0;
  std::vector<SuppliedInput> inputs;
  double marginal_cost = 0.0;
  double price = 0.0;
  double sale = 0.0;
  double profit = 0.0;  // sale - input spending - fixed cost
};

/// Solves cost minimization for the given primitives and fills quantities,
/// expenditures, marginal cost, price and profit.
void solve_supplied_firm(SuppliedFirm& firm);
std::vector<SuppliedFirm> gen_supplied_firms(std::uint64_t seed, std::size_t n);

// ---------------------------------------------------------------------------
// Fixed labor requirement: y = A (l - l_bar)^alpha

struct FixedCostPoint {
  double labor = 0.0;
  double output = 0.0;
};

std::vector<FixedCostPoint> gen_fixed_cost_firm(double alpha, double l_bar,
                                                const std::vector<double>& grid,
                                                double productivity = 1.0);
/// alpha * l / (l - l_bar).
double predicted_elasticity(double alpha, double l_bar, double labor);
/// OLS slope of log output on log labor.
double loglog_slope(const std::vector<FixedCostPoint>& points);

// ---------------------------------------------------------------------------
// Panels with planted cleaning violations

struct PlantedViolations {
  std::size_t industry = 0;
  std::size_t values = 0;
  std::size_t trim = 0;
  std::size_t missing_year = 0;  // undated rows plus rows cut off by gaps
  std::size_t rows_in = 0;
  std::size_t rows_out = 0;
};

struct DirtyPanel {
  panel::PanelDataset data;
  PlantedViolations planted;
};

/// Clean panel of roughly `rows` firm-years with planted violations whose
/// effect under `rules` is known in advance.
DirtyPanel gen_dirty_panel(std::uint64_t seed, std::size_t rows,
                           const panel::CleaningRules& rules);

}  // namespace domar::oracle
