#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "domar/mpower.hpp"
#include "domar/panel.hpp"

namespace domar::dyn {

struct Classification {
  std::vector<std::string> incumbents;  // present in both years
  std::vector<std::string> entrants;    // present at t only
  std::vector<std::string> exiters;     // present at t-1 only
};

Classification classify_firms(std::span<const std::string> previous,
                              std::span<const std::string> current);
/// Firm sets of years t-1 and t in the panel; t must not be the first year.
Classification classify_firms(const panel::PanelDataset& data, int year);

struct FirmPoint {
  std::string firm_id;
  double sale = 0.0;
  double markup = 1.0;
};

enum class Reference { kMidpoint, kCustom, kLiteral };

struct DecompositionTerms {
  int year_prev = 0;
  int year = 0;
  double mu_prev = 0.0;
  double mu = 0.0;
  double delta_mu = 0.0;
  double within = 0.0;
  double between = 0.0;
  double net_entry = 0.0;
  double c = 0.0;         // reference constant
  double residual = 0.0;  // delta_mu - (within + between + net_entry)
};

/// Splits the change in the harmonic sales-weighted markup between two
/// periods. Midpoint and custom references scale by mu_t * mu_{t-1} and are
/// exactly additive; the literal form divides by that product, centers net
/// entry at the average markup level, and reports its residual.
DecompositionTerms markup_change_decomposition(std::span<const FirmPoint> previous,
                                               std::span<const FirmPoint> current,
                                               Reference reference = Reference::kMidpoint,
                                               std::optional<double> custom_c = std::nullopt);

/// Decompositions for consecutive year pairs in the measures, stopping at
/// the second-to-last year so that the final year's exits are unobserved.
std::vector<DecompositionTerms> decompose_years(std::span<const mpower::FirmMeasures> rows,
                                                Reference reference,
                                                std::optional<double> custom_c = std::nullopt);

std::string format_decomposition(const std::vector<DecompositionTerms>& terms);
std::vector<DecompositionTerms> parse_decomposition(std::string_view csv_text);

struct ConcentrationRecord {
  int year = 0;
  std::string scope;  // "national" or the industry code
  double hhi = 0.0;
  std::size_t n_firms = 0;
};

double hhi(std::span<const double> sales);
/// National scope when `industry` is nullopt.
ConcentrationRecord hhi(const panel::PanelDataset& data, int year,
                        std::optional<panel::IndustryCode> industry);
std::vector<ConcentrationRecord> hhi_table(const panel::PanelDataset& data);
std::string format_hhi(const std::vector<ConcentrationRecord>& records);

struct DistributionStats {
  int year = 0;
  std::size_t n = 0;
  double p10 = 0.0;
  double p25 = 0.0;
  double p50 = 0.0;
  double p75 = 0.0;
  double p90 = 0.0;
  double p95 = 0.0;
  std::size_t below_unity = 0;  // firms pricing below marginal cost
};

/// Unweighted nearest-rank percentiles; with weights, sales-weighted ranks.
DistributionStats distribution_stats(std::span<const double> markups,
                                     std::span<const double> weights = {});
std::vector<DistributionStats> markup_percentiles(std::span<const mpower::FirmMeasures> rows);
std::string format_markup_percentiles(const std::vector<DistributionStats>& stats);

}  // namespace domar::dyn
