#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "domar/config.hpp"

namespace domar::panel {

/// 2-digit industry code after BEA grouping (31-33 -> 31, 44-45 -> 44,
/// 48-49 -> 48). Only codes in the closed sector list are valid.
using IndustryCode = int;

std::optional<IndustryCode> normalize_industry(int naics2);
const std::vector<IndustryCode>& industry_codes();

struct FirmYear {
  std::string firm_id;
  int year = 0;
  std::optional<IndustryCode> industry;
  bool multiple_industry = false;  // the source cell listed conflicting codes

  // Nominal (or deflated, see PanelDataset::Provenance) financials.
  // Blank cells stay nullopt.
  std::optional<double> sale;
  std::optional<double> cogs;
  std::optional<double> sga;
  std::optional<double> rd;
  std::optional<double> ppegt;
  std::optional<double> k_int;
  std::optional<double> capx;
  std::optional<double> proxy;

  bool k_int_constructed = false;

  // Prior-year end-of-period stocks, filled by attach_capital_lags().
  std::optional<double> ppegt_lag;
  std::optional<double> k_int_lag;
};

struct MacroYear {
  int year = 0;
  double gdp = 0.0;
  double total_sales = 0.0;
  double deflator = 1.0;
  double labor_comp = 0.0;
  double nominal_rate = 0.0;  // fraction per year
  double inflation = 0.0;     // fraction per year
  std::optional<double> external_user_cost;
};

struct CleaningRules {
  double trim_low = 0.01;
  double trim_high = 0.99;
  bool trim_by_year = false;
  bool rd_missing_as_zero = false;
  std::optional<int> first_year;
  std::optional<int> last_year;

  bool operator==(const CleaningRules&) const = default;
};

struct CleaningReport {
  std::size_t rows_in = 0;
  std::size_t rows_out = 0;
  std::size_t dropped_out_of_range = 0;
  std::size_t dropped_industry = 0;         // missing, unknown, or multiple codes
  std::size_t dropped_values = 0;           // negative or missing sale/cogs/sga/rd/capx
  std::size_t dropped_trim = 0;             // sale/cogs outside [P_low, P_high]
  std::size_t dropped_missing_year = 0;     // blank fyear or outside longest contiguous run
  std::size_t rd_filled_zero = 0;
  // Cut values used by the ratio trim: key 0 holds the pooled cut; with
  // trim_by_year each year has its own entry.
  std::map<int, std::pair<double, double>> trim_cuts;
  CleaningRules rules;

  std::size_t dropped_total() const {
    return dropped_out_of_range + dropped_industry + dropped_values + dropped_trim +
           dropped_missing_year;
  }
};

struct PanelDataset {
  struct Provenance {
    bool deflated = false;
    bool lags_attached = false;
    std::size_t undated_rows = 0;  // rows with blank fyear, discarded at load
    std::optional<CleaningReport> cleaning;
    std::vector<std::string> warnings;
  };

  std::vector<FirmYear> observations;  // sorted by (firm_id, year)
  std::map<int, MacroYear> macro;
  Provenance provenance;

  std::vector<int> years() const;
  const MacroYear& macro_for(int year) const;
};

/// CSV column names for each FirmYear field.
struct SchemaMap {
  std::string firm_id = "gvkey";
  std::string year = "fyear";
  std::string industry = "naics2";
  std::string sale = "sale";
  std::string cogs = "cogs";
  std::string sga = "xsga";
  std::string rd = "xrd";
  std::string ppegt = "ppegt";
  std::string k_int = "k_int";
  std::string capx = "capx";
  std::string proxy = "icapt";

  /// Reads `column.<field>` overrides.
  static SchemaMap from_config(const Config& cfg);
};

PanelDataset load_firm_panel(const std::filesystem::path& path, const SchemaMap& schema = {});
PanelDataset parse_firm_panel(std::string_view csv_text, const SchemaMap& schema = {});
std::map<int, MacroYear> load_macro(const std::filesystem::path& path);
std::map<int, MacroYear> parse_macro(std::string_view csv_text);

/// Writes observations in the default firm CSV schema.
std::string format_firm_panel(const PanelDataset& data);
std::string format_macro(const std::map<int, MacroYear>& macro);

PanelDataset apply_deflators(const PanelDataset& data);
/// Inverse of apply_deflators.
PanelDataset renominalize(const PanelDataset& data);

struct CleanResult {
  PanelDataset data;
  CleaningReport report;
};
CleanResult clean_sample(const PanelDataset& data, const CleaningRules& rules);

/// Perpetual-inventory intangible stock from flows rd + sga_share * sga.
PanelDataset build_intangible_stock(const PanelDataset& data, double delta_int,
                                    double sga_share);

/// Joins each observation with the same firm's previous-year capital stocks.
PanelDataset attach_capital_lags(const PanelDataset& data);

struct WeightRow {
  std::string firm_id;
  double sale = 0.0;
  double omega = 0.0;  // sales share within the sample-year
  double domar = 0.0;  // sale / GDP
};

struct WeightTable {
  int year = 0;
  std::vector<WeightRow> rows;
  double chi_sample = 0.0;  // sum of Domar weights
  double chi_macro = 0.0;   // total_sales / gdp
};

WeightTable compute_weights(const PanelDataset& data, int year);

}  // namespace domar::panel
