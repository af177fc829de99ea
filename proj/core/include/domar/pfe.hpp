#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "domar/panel.hpp"
#include "domar/simplex.hpp"

namespace domar::pfe {

enum class VariableInput { kOpex, kCogs };      // OPEX = COGS + SG&A
enum class CapitalMeasure { kTotal, kPhysical };  // PPEGT + K_INT, or PPEGT only
enum class ProxyVariable { kIcapt, kCapx };

/// One log-transformed estimation row. Capital is the prior-period stock.
struct Observation {
  std::string firm_id;
  int year = 0;
  double log_y = 0.0;
  double log_v = 0.0;
  double log_k = 0.0;
  double log_proxy = 0.0;
};

struct EstimationConfig {
  VariableInput variable_input = VariableInput::kOpex;
  CapitalMeasure capital = CapitalMeasure::kTotal;
  ProxyVariable proxy = ProxyVariable::kIcapt;
  int window = 9;
  std::size_t min_obs = 50;
  int polynomial_degree = 3;
  double start_offset = 0.1;           // spacing of the 3x3 multi-start grid
  double converged_criterion = 1e-8;
  double converged_diameter = 1e-6;
  simplex::Options simplex;
};

struct FirstStage {
  std::vector<double> phi;        // fitted expected log output
  std::vector<double> residuals;  // log y - phi
  int degree = 0;                 // polynomial degree actually used
  bool fell_back = false;
};

/// Least-squares fit of log y on all monomials of degree <= `degree` in
/// (log v, log k, log proxy). Rank deficiency lowers the degree one step at a
/// time; still deficient at degree 1 is an estimation error.
FirstStage first_stage(std::span<const Observation> obs, std::size_t min_obs = 50,
                       int degree = 3);

struct ProductivityState {
  std::vector<double> omega;               // per observation
  std::vector<std::size_t> current;        // indices with an in-slice lag...
  std::vector<std::size_t> lagged;         // ...and the index of that lag
  std::vector<double> xi;                  // AR(1) innovations per link
  double rho = 0.0;
  double moment_v = 0.0;  // mean of xi * lagged log v
  double moment_k = 0.0;  // mean of xi * log k
};

/// Links each observation to the same firm's previous year within `obs`
/// (sorted by firm, year).
void link_lags(std::span<const Observation> obs, std::vector<std::size_t>& current,
               std::vector<std::size_t>& lagged);

/// Identity-weighted GMM criterion at (theta_v, theta_k); fills `state` when given.
double gmm_criterion(std::span<const double> phi, std::span<const Observation> obs,
                     std::span<const std::size_t> current, std::span<const std::size_t> lagged,
                     double theta_v, double theta_k, ProductivityState* state = nullptr);

struct ElasticityEstimate {
  panel::IndustryCode industry = 0;
  int year = 0;
  std::optional<double> raw_theta_v;  // as estimated
  std::optional<double> raw_theta_k;
  std::optional<double> theta_v;      // after post-processing
  std::optional<double> theta_k;
  int window_start = 0;
  int window_end = 0;
  std::size_t n_obs = 0;
  bool converged = false;
  double objective = 0.0;
  int first_stage_degree = 0;
  bool carried_forward = false;
  int source_year = 0;  // estimate reused by carried-forward years
  bool interpolated = false;
  double ols_objective = 0.0;  // criterion at the OLS starting point

  bool missing() const { return !theta_v || !theta_k; }
  double rs() const { return theta_v.value_or(0.0) + theta_k.value_or(0.0); }
};

/// Ordinary least squares of log y on (1, log v, log k).
std::pair<double, double> ols_elasticities(std::span<const Observation> obs);

ElasticityEstimate second_stage_gmm(std::span<const double> phi, std::span<const Observation> obs,
                                    const EstimationConfig& config = {});

/// First and second stage on one slice.
ElasticityEstimate estimate_slice(std::span<const Observation> obs,
                                  const EstimationConfig& config = {});

/// Estimation rows for one industry (all industries when nullopt), years in
/// [first, last]. Requires attached capital lags.
std::vector<Observation> build_observations(const panel::PanelDataset& data,
                                            const EstimationConfig& config,
                                            std::optional<panel::IndustryCode> industry,
                                            int first_year, int last_year);

/// Rolling-window estimates for every industry and every year it appears.
std::vector<ElasticityEstimate> estimate_rolling(const panel::PanelDataset& data,
                                                 const EstimationConfig& config);

struct PostprocessOptions {
  double winsor_low = 0.05;
  double winsor_high = 0.95;
  bool winsor_by_industry = false;
};

/// Outlier removal (beyond group mean +/- 1 sd), linear interpolation within
/// industry, then winsorization. Reads only the raw thetas.
std::vector<ElasticityEstimate> postprocess_elasticities(std::vector<ElasticityEstimate> estimates,
                                                         const PostprocessOptions& options = {});

std::string format_elasticity_table(const std::vector<ElasticityEstimate>& estimates);

/// Looks up the estimate for (industry, year).
const ElasticityEstimate* find_estimate(const std::vector<ElasticityEstimate>& estimates,
                                        panel::IndustryCode industry, int year);

}  // namespace domar::pfe
