#include "domar/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>

#include <fmt/format.h>

#include "domar/csv.hpp"
#include "domar/error.hpp"
#include "json.hpp"

namespace domar::pipeline {

namespace {

using json = nlohmann::ordered_json;

Config make_preset(Preset preset) {
  Config c;
  c.set("clean.trim_low", "0.01");
  c.set("clean.trim_high", "0.99");
  c.set("clean.trim_by_year", "false");
  c.set("clean.rd_missing_as_zero", "false");
  c.set("intangible.build", "true");
  c.set("intangible.delta", "0.15");
  c.set("intangible.sga_share", "0.30");
  c.set("estimate.variable_input", "opex");
  c.set("estimate.capital", "total");
  c.set("estimate.proxy", "icapt");
  c.set("estimate.window", "9");
  c.set("estimate.min_obs", "50");
  c.set("estimate.winsor_low", "0.05");
  c.set("estimate.winsor_high", "0.95");
  c.set("estimate.winsor_by_industry", "false");
  c.set("estimate.strict", "false");
  c.set("cost.fixed", "rd");
  c.set("cost.include_capital", "true");
  c.set("usercost.method", "foc");
  c.set("usercost.depreciation", "0.12");
  c.set("aggregate.markup", "harmonic");
  c.set("aggregate.chi", "macro");
  c.set("decomp.reference", "midpoint");
  switch (preset) {
    case Preset::kBaseline:
      break;
    case Preset::kDeuReplication:
      c.set("estimate.variable_input", "cogs");
      c.set("estimate.capital", "physical");
      c.set("intangible.build", "false");
      c.set("cost.fixed", "sga_rd");
      c.set("usercost.method", "deu");
      c.set("aggregate.markup", "sales_weighted");
      break;
    case Preset::kNoIntangibles:
      c.set("estimate.capital", "physical");
      c.set("intangible.build", "false");
      break;
    case Preset::kCogsOnly:
      c.set("estimate.variable_input", "cogs");
      c.set("cost.fixed", "sga_rd");
      break;
  }
  return c;
}

const std::set<std::string, std::less<>> kPlainKeys = {
    "preset", "input.firms", "input.macro", "output.dir", "run.seed", "run.year_range",
    "decomp.c"};

template <typename Enum>
Enum choice(const Config& c, std::string_view key,
            std::initializer_list<std::pair<std::string_view, Enum>> options) {
  const auto value = c.get_string(key, "");
  std::string names;
  for (const auto& [name, e] : options) {
    if (value == name) return e;
    names += (names.empty() ? "" : "|") + std::string(name);
  }
  fail(ErrorKind::kConfig, fmt::format("{} = '{}' is not one of {}", key, value, names));
}

// Config keys that shape outputs; paths are replaced by content hashes.
std::string hashed_config(const RunConfig& rc) {
  Config c;
  for (const auto& [k, v] : rc.effective.entries()) {
    if (k == "input.firms" || k == "input.macro" || k == "output.dir") continue;
    c.set(k, v);
  }
  c.set("preset", std::string(to_string(rc.preset)));
  return c.canonical();
}

}  // namespace

std::optional<Preset> parse_preset(std::string_view name) {
  if (name == "baseline") return Preset::kBaseline;
  if (name == "deu_replication") return Preset::kDeuReplication;
  if (name == "no_intangibles") return Preset::kNoIntangibles;
  if (name == "cogs_only") return Preset::kCogsOnly;
  return std::nullopt;
}

std::string_view to_string(Preset preset) {
  switch (preset) {
    case Preset::kBaseline:
      return "baseline";
    case Preset::kDeuReplication:
      return "deu_replication";
    case Preset::kNoIntangibles:
      return "no_intangibles";
    case Preset::kCogsOnly:
      return "cogs_only";
  }
  return "baseline";
}

const Config& preset_config(Preset preset) {
  static const std::map<Preset, Config> bundles = {
      {Preset::kBaseline, make_preset(Preset::kBaseline)},
      {Preset::kDeuReplication, make_preset(Preset::kDeuReplication)},
      {Preset::kNoIntangibles, make_preset(Preset::kNoIntangibles)},
      {Preset::kCogsOnly, make_preset(Preset::kCogsOnly)},
  };
  return bundles.at(preset);
}

std::pair<int, int> parse_year_range(std::string_view text) {
  const auto colon = text.find(':');
  auto parse = [&](std::string_view part) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec != std::errc{} || ptr != part.data() + part.size() || part.empty()) {
      fail(ErrorKind::kConfig, fmt::format("year range '{}' is not of the form A:B", text));
    }
    return v;
  };
  if (colon == std::string_view::npos) {
    fail(ErrorKind::kConfig, fmt::format("year range '{}' is not of the form A:B", text));
  }
  const int a = parse(text.substr(0, colon));
  const int b = parse(text.substr(colon + 1));
  if (a > b) fail(ErrorKind::kConfig, fmt::format("year range '{}' is empty", text));
  return {a, b};
}

RunConfig RunConfig::resolve(const Config& explicit_keys, std::optional<std::string> preset) {
  RunConfig rc;
  const std::string preset_name =
      preset ? *preset : explicit_keys.get_string("preset", "baseline");
  const auto p = parse_preset(preset_name);
  if (!p) fail(ErrorKind::kConfig, fmt::format("unknown preset '{}'", preset_name));
  rc.preset = *p;
  const Config& bundle = preset_config(rc.preset);
  rc.effective = bundle;

  for (const auto& [key, value] : explicit_keys.entries()) {
    if (key == "preset") continue;
    if (auto base = bundle.find(key)) {
      if (*base != value) rc.overrides.push_back({key, *base, value});
    } else if (!kPlainKeys.contains(key) && !key.starts_with("column.")) {
      fail(ErrorKind::kConfig, fmt::format("unknown config key '{}'", key));
    }
    rc.effective.set(key, value);
  }

  const Config& c = rc.effective;
  rc.firms = c.get_string("input.firms", "");
  rc.macro = c.get_string("input.macro", "");
  rc.out_dir = c.get_string("output.dir", "out");
  const auto seed = c.get_int("run.seed", 1);
  if (seed < 0) fail(ErrorKind::kConfig, "run.seed must be nonnegative");
  rc.seed = static_cast<std::uint64_t>(seed);
  rc.schema = panel::SchemaMap::from_config(c);

  rc.cleaning.trim_low = c.get_double("clean.trim_low", 0.01);
  rc.cleaning.trim_high = c.get_double("clean.trim_high", 0.99);
  rc.cleaning.trim_by_year = c.get_bool("clean.trim_by_year", false);
  rc.cleaning.rd_missing_as_zero = c.get_bool("clean.rd_missing_as_zero", false);
  if (!(rc.cleaning.trim_low >= 0.0 && rc.cleaning.trim_low < rc.cleaning.trim_high &&
        rc.cleaning.trim_high <= 1.0)) {
    fail(ErrorKind::kConfig, "clean.trim_low/high must satisfy 0 <= low < high <= 1");
  }
  if (auto range = c.find("run.year_range")) {
    const auto [a, b] = parse_year_range(*range);
    rc.cleaning.first_year = a;
    rc.cleaning.last_year = b;
  }

  rc.build_intangibles = c.get_bool("intangible.build", true);
  rc.intangible_delta = c.get_double("intangible.delta", 0.15);
  rc.intangible_sga_share = c.get_double("intangible.sga_share", 0.30);
  if (!(rc.intangible_delta > 0.0 && rc.intangible_delta <= 1.0)) {
    fail(ErrorKind::kConfig, "intangible.delta must lie in (0, 1]");
  }

  auto& est = rc.estimation;
  est.variable_input = choice<pfe::VariableInput>(
      c, "estimate.variable_input",
      {{"opex", pfe::VariableInput::kOpex}, {"cogs", pfe::VariableInput::kCogs}});
  est.capital = choice<pfe::CapitalMeasure>(
      c, "estimate.capital",
      {{"total", pfe::CapitalMeasure::kTotal}, {"physical", pfe::CapitalMeasure::kPhysical}});
  est.proxy = choice<pfe::ProxyVariable>(
      c, "estimate.proxy",
      {{"icapt", pfe::ProxyVariable::kIcapt}, {"capx", pfe::ProxyVariable::kCapx}});
  const auto window = c.get_int("estimate.window", 9);
  if (window < 1 || window % 2 == 0) {
    fail(ErrorKind::kConfig, "estimate.window must be a positive odd number");
  }
  est.window = static_cast<int>(window);
  const auto min_obs = c.get_int("estimate.min_obs", 50);
  if (min_obs < 1) fail(ErrorKind::kConfig, "estimate.min_obs must be positive");
  est.min_obs = static_cast<std::size_t>(min_obs);
  rc.postprocess.winsor_low = c.get_double("estimate.winsor_low", 0.05);
  rc.postprocess.winsor_high = c.get_double("estimate.winsor_high", 0.95);
  rc.postprocess.winsor_by_industry = c.get_bool("estimate.winsor_by_industry", false);
  if (!(rc.postprocess.winsor_low >= 0.0 &&
        rc.postprocess.winsor_low <= rc.postprocess.winsor_high &&
        rc.postprocess.winsor_high <= 1.0)) {
    fail(ErrorKind::kConfig, "estimate.winsor_low/high must satisfy 0 <= low <= high <= 1");
  }
  rc.strict = c.get_bool("estimate.strict", false);

  auto& m = rc.measures;
  m.variable_input = est.variable_input;
  m.capital = est.capital;
  m.fixed = choice<mpower::FixedCost>(
      c, "cost.fixed", {{"rd", mpower::FixedCost::kRd}, {"sga_rd", mpower::FixedCost::kSgaRd}});
  m.include_capital = c.get_bool("cost.include_capital", true);
  m.user_cost = choice<mpower::UserCostMethod>(c, "usercost.method",
                                               {{"foc", mpower::UserCostMethod::kFoc},
                                                {"deu", mpower::UserCostMethod::kDeu},
                                                {"external", mpower::UserCostMethod::kExternal}});
  m.depreciation = c.get_double("usercost.depreciation", 0.12);

  rc.aggregation.markup = choice<agg::MarkupAggregation>(
      c, "aggregate.markup",
      {{"harmonic", agg::MarkupAggregation::kHarmonic},
       {"sales_weighted", agg::MarkupAggregation::kSalesWeighted}});
  rc.aggregation.chi = choice<agg::ChiSource>(
      c, "aggregate.chi", {{"macro", agg::ChiSource::kMacro}, {"sample", agg::ChiSource::kSample}});
  rc.aggregation.depreciation = m.depreciation;

  rc.reference = choice<dyn::Reference>(c, "decomp.reference",
                                        {{"midpoint", dyn::Reference::kMidpoint},
                                         {"literal", dyn::Reference::kLiteral},
                                         {"custom", dyn::Reference::kCustom}});
  if (c.contains("decomp.c")) rc.reference_c = c.get_double("decomp.c", 0.0);
  if (rc.reference == dyn::Reference::kCustom && !rc.reference_c) {
    fail(ErrorKind::kConfig, "decomp.reference = custom needs decomp.c");
  }
  return rc;
}

namespace {

template <typename F>
auto run_stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.kind(), fmt::format("stage {}: {}", name, e.what()));
  }
}

class OutputSet {
 public:
  explicit OutputSet(std::filesystem::path dir) : dir_(std::move(dir)) {}

  void add(std::string name, std::string content) {
    files_.emplace_back(std::move(name), std::move(content));
  }

  // Writes every file; removes what was written on failure.
  std::vector<std::string> commit() {
    std::vector<std::string> written;
    try {
      std::error_code ec;
      std::filesystem::create_directories(dir_, ec);
      if (ec) fail(ErrorKind::kIo, fmt::format("cannot create output directory {}", dir_.string()));
      for (const auto& [name, content] : files_) {
        csv::write_text(dir_ / name, content);
        written.push_back(name);
      }
    } catch (...) {
      discard(written);
      throw;
    }
    return written;
  }

  void discard(const std::vector<std::string>& names) const {
    for (const auto& n : names) {
      std::error_code ec;
      std::filesystem::remove(dir_ / n, ec);
    }
  }

  const std::vector<std::pair<std::string, std::string>>& files() const { return files_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::pair<std::string, std::string>> files_;
};

json cleaning_json(const panel::CleaningReport& r) {
  json j;
  j["rows_in"] = r.rows_in;
  j["rows_out"] = r.rows_out;
  j["dropped_out_of_range"] = r.dropped_out_of_range;
  j["dropped_industry"] = r.dropped_industry;
  j["dropped_values"] = r.dropped_values;
  j["dropped_trim"] = r.dropped_trim;
  j["dropped_missing_year"] = r.dropped_missing_year;
  j["rd_filled_zero"] = r.rd_filled_zero;
  json cuts = json::array();
  for (const auto& [key, cut] : r.trim_cuts) {
    cuts.push_back({{"group", key == 0 ? std::string("pooled") : std::to_string(key)},
                    {"low", csv::format_double(cut.first)},
                    {"high", csv::format_double(cut.second)}});
  }
  j["trim_cuts"] = cuts;
  return j;
}

}  // namespace

RunSummary run_pipeline(const RunConfig& rc) {
  RunSummary summary;
  json manifest;
  manifest["preset"] = std::string(to_string(rc.preset));
  manifest["config_hash"] = hex64(fnv1a64(hashed_config(rc)));
  manifest["seed"] = rc.seed;
  json overrides = json::array();
  for (const auto& o : rc.overrides) {
    overrides.push_back({{"key", o.key}, {"preset", o.preset_value}, {"value", o.value}});
  }
  manifest["overrides"] = overrides;
  manifest["profit_rate_formula"] =
      rc.measures.user_cost == mpower::UserCostMethod::kFoc ? "prop1" : "exogenous_r";
  manifest["decomposition_reference"] = rc.effective.get_string("decomp.reference", "midpoint");

  if (rc.firms.empty()) fail(ErrorKind::kConfig, "no firm panel given (input.firms)");
  if (rc.macro.empty()) fail(ErrorKind::kConfig, "no macro series given (input.macro)");

  auto raw = run_stage("ingest", [&] {
    auto data = panel::load_firm_panel(rc.firms, rc.schema);
    data.macro = panel::load_macro(rc.macro);
    return data;
  });
  manifest["inputs"] = {
      {"firms_hash", hex64(fnv1a64(csv::read_text(rc.firms)))},
      {"macro_hash", hex64(fnv1a64(csv::read_text(rc.macro)))},
  };
  json rows;
  rows["loaded"] = raw.observations.size();
  rows["undated"] = raw.provenance.undated_rows;

  auto deflated = run_stage("deflate", [&] { return panel::apply_deflators(raw); });
  auto cleaned = run_stage("clean", [&] { return panel::clean_sample(deflated, rc.cleaning); });
  rows["cleaned"] = cleaned.report.rows_out;
  manifest["cleaning"] = cleaning_json(cleaned.report);

  auto data = run_stage("capital", [&] {
    auto d = rc.build_intangibles
                 ? panel::build_intangible_stock(cleaned.data, rc.intangible_delta,
                                                 rc.intangible_sga_share)
                 : cleaned.data;
    return panel::attach_capital_lags(d);
  });
  for (const auto& w : data.provenance.warnings) summary.warnings.push_back(w);

  auto elasticities = run_stage("estimate", [&] {
    auto raw_est = pfe::estimate_rolling(data, rc.estimation);
    return pfe::postprocess_elasticities(std::move(raw_est), rc.postprocess);
  });
  std::size_t missing = 0;
  for (const auto& e : elasticities) {
    if (e.carried_forward) continue;
    if (!e.raw_theta_v) {
      ++missing;
    } else if (!e.converged) {
      ++summary.non_converged;
    }
  }
  if (missing > 0) {
    summary.warnings.push_back(
        fmt::format("{} industry-year windows had no estimate and were interpolated", missing));
  }
  if (summary.non_converged > 0) {
    summary.warnings.push_back(
        fmt::format("{} industry-year estimates did not converge", summary.non_converged));
  }
  rows["elasticities"] = elasticities.size();

  OutputSet outputs(rc.out_dir);
  outputs.add("elasticities.csv", pfe::format_elasticity_table(elasticities));

  auto finish_manifest = [&](const std::vector<std::string>& errors) {
    manifest["rows"] = rows;
    manifest["warnings"] = summary.warnings;
    manifest["errors"] = errors;
    json files = json::object();
    for (const auto& [name, content] : outputs.files()) {
      files[name] = hex64(fnv1a64(content));
    }
    manifest["files"] = files;
    manifest["status"] = errors.empty() ? "ok" : "failed";
    return manifest.dump(2) + "\n";
  };

  if (rc.strict && summary.non_converged > 0) {
    const std::string msg = fmt::format(
        "stage estimate: {} industry-year estimates did not converge", summary.non_converged);
    summary.manifest = finish_manifest({msg});
    outputs.add("manifest.json", summary.manifest);
    outputs.commit();
    fail(ErrorKind::kEstimation, msg);
  }

  auto measures = run_stage("measure", [&] {
    return mpower::compute_firm_measures(data, elasticities, rc.measures);
  });
  for (const auto& w : measures.warnings) summary.warnings.push_back(w);
  rows["firm_measures"] = measures.rows.size();

  auto aggregates = run_stage("aggregate", [&] {
    std::vector<agg::AggregateYear> out;
    std::map<int, std::vector<mpower::FirmMeasures>> by_year;
    for (const auto& m : measures.rows) by_year[m.year].push_back(m);
    for (const auto& [year, year_rows] : by_year) {
      auto a = agg::aggregate_year(year, year_rows, data.macro_for(year), rc.aggregation);
      if (a.implausible_shares) {
        summary.warnings.push_back(
            fmt::format("year {}: implied capital share {} is implausible", year,
                        csv::format_double(a.capital_share)));
      }
      out.push_back(a);
    }
    return out;
  });
  rows["years"] = aggregates.size();

  auto decomposition = run_stage("decompose", [&] {
    return dyn::decompose_years(measures.rows, rc.reference, rc.reference_c);
  });
  auto concentration = run_stage("concentration", [&] { return dyn::hhi_table(data); });
  auto percentiles = run_stage("distribution", [&] {
    return dyn::markup_percentiles(measures.rows);
  });

  outputs.add("firm_measures.csv", mpower::format_firm_measures(measures.rows));
  outputs.add("aggregates.csv", agg::format_aggregates(aggregates));
  outputs.add("decomposition.csv", dyn::format_decomposition(decomposition));
  outputs.add("hhi.csv", dyn::format_hhi(concentration));
  outputs.add("income_shares.csv", agg::format_income_shares(aggregates));
  outputs.add("markup_percentiles.csv", dyn::format_markup_percentiles(percentiles));
  outputs.add("fig2_markup_rs.csv", agg::format_fig_markup_rs(aggregates));
  outputs.add("fig3_profit_share.csv", agg::format_fig_profit_share(aggregates));
  outputs.add("fig4_decomposition.csv", agg::format_fig_decomposition(aggregates));
  outputs.add("fig8_user_costs.csv", agg::format_fig_user_costs(aggregates));
  outputs.add("fig9_profit_shares_by_r.csv", agg::format_fig_profit_shares_by_r(aggregates));

  summary.manifest = finish_manifest({});
  outputs.add("manifest.json", summary.manifest);
  summary.files = run_stage("write", [&] { return outputs.commit(); });
  return summary;
}

}  // namespace domar::pipeline
