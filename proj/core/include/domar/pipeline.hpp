#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "domar/agg.hpp"
#include "domar/config.hpp"
#include "domar/dyn.hpp"
#include "domar/mpower.hpp"
#include "domar/panel.hpp"
#include "domar/pfe.hpp"

namespace domar::pipeline {

enum class Preset { kBaseline, kDeuReplication, kNoIntangibles, kCogsOnly };

std::optional<Preset> parse_preset(std::string_view name);
std::string_view to_string(Preset preset);
/// Every tunable key with its value under `preset`.
const Config& preset_config(Preset preset);

struct Override {
  std::string key;
  std::string preset_value;
  std::string value;
};

struct RunConfig {
  Preset preset = Preset::kBaseline;
  Config effective;                // preset bundle with explicit keys applied
  std::vector<Override> overrides;  // explicit keys whose value differs from the preset

  std::filesystem::path firms;
  std::filesystem::path macro;
  std::filesystem::path out_dir;
  std::uint64_t seed = 1;
  panel::SchemaMap schema;

  panel::CleaningRules cleaning;
  bool build_intangibles = true;
  double intangible_delta = 0.15;
  double intangible_sga_share = 0.30;
  pfe::EstimationConfig estimation;
  pfe::PostprocessOptions postprocess;
  bool strict = true;  // non-converged estimates fail the run
  mpower::MeasureOptions measures;
  agg::AggregateOptions aggregation;
  dyn::Reference reference = dyn::Reference::kMidpoint;
  std::optional<double> reference_c;

  /// Resolves `explicit_keys` against the preset named by `preset` (or the
  /// `preset` key, or baseline). Unknown keys and bad values raise config
  /// errors.
  static RunConfig resolve(const Config& explicit_keys,
                           std::optional<std::string> preset = std::nullopt);
};

/// Parses "A:B" into an inclusive year range.
std::pair<int, int> parse_year_range(std::string_view text);

struct RunSummary {
  std::vector<std::string> files;  // written, relative to out_dir
  std::vector<std::string> warnings;
  std::string manifest;
  std::size_t non_converged = 0;
};

/// ingest, clean, estimate, measure, aggregate, decompose, report. Stage
/// failures raise Error with "stage <name>: <cause>" and leave no outputs.
/// With `strict`, non-converged estimates raise an estimation error after the
/// elasticity table and manifest are written.
RunSummary run_pipeline(const RunConfig& config);

// Verification of a finished run directory.

enum class CheckStatus { kPass, kFail, kSkip };

struct Check {
  std::string name;
  CheckStatus status = CheckStatus::kPass;
  double residual = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct VerifyReport {
  std::vector<Check> checks;
  bool passed() const;
  std::string table() const;
};

VerifyReport verify_outputs(const std::filesystem::path& dir);

}  // namespace domar::pipeline
