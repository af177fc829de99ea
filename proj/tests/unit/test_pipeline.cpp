#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "domar/csv.hpp"
#include "domar/pipeline.hpp"
#include "helpers.hpp"

using namespace domar;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("domar_unit_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

pipeline::RunConfig fixture_config(const fs::path& out, const std::string& preset = "baseline") {
  Config keys;
  keys.set("input.firms", (fs::path(DOMAR_FIXTURE_DIR) / "firms.csv").string());
  keys.set("input.macro", (fs::path(DOMAR_FIXTURE_DIR) / "macro.csv").string());
  keys.set("output.dir", out.string());
  return pipeline::RunConfig::resolve(keys, preset);
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + DOMAR_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Replaces one column of a CSV file by `value` in the first data row.
void corrupt_first_row(const fs::path& file, const std::string& column, const std::string& value) {
  auto table = csv::read(file);
  std::size_t col = 0;
  while (table.header.at(col) != column) ++col;
  table.rows.at(0).at(col) = value;
  std::string text;
  for (std::size_t i = 0; i < table.header.size(); ++i) text += (i ? "," : "") + table.header[i];
  text += "\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) text += (i ? "," : "") + row[i];
    text += "\n";
  }
  csv::write_text(file, text);
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("config resolution") {
  SUBCASE("unknown key") {
    Config keys;
    keys.set("estimate.windw", "7");
    CHECK_ERROR_TEXT(pipeline::RunConfig::resolve(keys), ErrorKind::kConfig, "estimate.windw");
  }
  SUBCASE("unknown preset") {
    CHECK_ERROR_KIND(pipeline::RunConfig::resolve({}, "nope"), ErrorKind::kConfig);
  }
  SUBCASE("explicit keys that differ from the preset are logged") {
    Config keys;
    keys.set("estimate.window", "7");
    keys.set("clean.trim_low", pipeline::preset_config(pipeline::Preset::kBaseline)
                                   .get_string("clean.trim_low", ""));
    const auto rc = pipeline::RunConfig::resolve(keys);
    REQUIRE(rc.overrides.size() == 1);
    CHECK(rc.overrides[0].key == "estimate.window");
    CHECK(rc.overrides[0].preset_value == "9");
    CHECK(rc.estimation.window == 7);
  }
  SUBCASE("replication preset") {
    const auto rc = pipeline::RunConfig::resolve({}, "deu_replication");
    CHECK(rc.estimation.variable_input == pfe::VariableInput::kCogs);
    CHECK(rc.estimation.capital == pfe::CapitalMeasure::kPhysical);
    CHECK(rc.measures.fixed == mpower::FixedCost::kSgaRd);
    CHECK(rc.measures.user_cost == mpower::UserCostMethod::kDeu);
    CHECK(rc.aggregation.markup == agg::MarkupAggregation::kSalesWeighted);
    CHECK_FALSE(rc.build_intangibles);
  }
  SUBCASE("presets differ from baseline only in their own keys") {
    const auto& base = pipeline::preset_config(pipeline::Preset::kBaseline);
    const auto& noint = pipeline::preset_config(pipeline::Preset::kNoIntangibles);
    std::vector<std::string> changed;
    for (const auto& [k, v] : noint.entries()) {
      if (base.get_string(k, "") != v) changed.push_back(k);
    }
    CHECK(changed == std::vector<std::string>{"estimate.capital", "intangible.build"});
  }
  SUBCASE("year range") {
    CHECK(pipeline::parse_year_range("2001:2009") == std::pair{2001, 2009});
    CHECK_ERROR_KIND(pipeline::parse_year_range("2009:2001"), ErrorKind::kConfig);
    CHECK_ERROR_KIND(pipeline::parse_year_range("x"), ErrorKind::kConfig);
  }
}

TEST_CASE("fixture pipeline is deterministic and verifies") {
  const auto a = scratch("det_a"), b = scratch("det_b");
  const auto sa = pipeline::run_pipeline(fixture_config(a));
  const auto sb = pipeline::run_pipeline(fixture_config(b));
  CHECK(sa.files == sb.files);
  for (const auto& f : sa.files) {
    CHECK_MESSAGE(csv::read_text(a / f) == csv::read_text(b / f), f);
  }
  const auto report = pipeline::verify_outputs(a);
  CHECK_MESSAGE(report.passed(), report.table());

  corrupt_first_row(a / "firm_measures.csv", "profit_rate", "0.5");
  CHECK_FALSE(pipeline::verify_outputs(a).passed());
}

TEST_CASE("every preset runs and verifies") {
  for (const std::string preset : {"deu_replication", "no_intangibles", "cogs_only"}) {
    const auto dir = scratch("preset_" + preset);
    const auto s = pipeline::run_pipeline(fixture_config(dir, preset));
    CHECK(s.files.size() == 13);
    const auto report = pipeline::verify_outputs(dir);
    CHECK_MESSAGE(report.passed(), std::string(preset + "\n" + report.table()));
  }
}

TEST_CASE("failed stages leave no outputs") {
  const auto dir = scratch("fail");
  Config keys;
  keys.set("input.firms", (fs::path(DOMAR_FIXTURE_DIR) / "firms.csv").string());
  keys.set("input.macro", (dir / "missing.csv").string());
  keys.set("output.dir", (dir / "out").string());
  CHECK_ERROR_TEXT(pipeline::run_pipeline(pipeline::RunConfig::resolve(keys)), ErrorKind::kIo,
                   "stage ingest");
  CHECK((!fs::exists(dir / "out") || fs::is_empty(dir / "out")));
}

TEST_CASE("verify on an empty directory") {
  const auto dir = scratch("empty");
  CHECK_ERROR_KIND(pipeline::verify_outputs(dir), ErrorKind::kIo);
}

TEST_CASE("command-line exit codes") {
  const auto dir = scratch("cli");
  const std::string firms = (fs::path(DOMAR_FIXTURE_DIR) / "firms.csv").string();
  const std::string macro = (fs::path(DOMAR_FIXTURE_DIR) / "macro.csv").string();
  const std::string out = (dir / "run").string();

  CHECK(run_cli("pipeline --firms " + firms + " --macro " + macro + " --out " + out) == 0);
  CHECK(run_cli("verify " + out) == 0);
  CHECK(run_cli("pipeline --firms " + firms + " --macro " + macro + " --out " + out +
                " --preset bogus") == 2);
  CHECK(run_cli("pipeline --bogus-flag") == 2);
  CHECK(run_cli("pipeline --firms " + firms + " --macro " + (dir / "none.csv").string() +
                " --out " + (dir / "x").string()) == 3);

  {
    std::ofstream cfg(dir / "bad.cfg");
    cfg << "estimate.window = 9\nunknown.key = 1\n";
  }
  CHECK(run_cli("pipeline --config " + (dir / "bad.cfg").string()) == 2);

  corrupt_first_row(fs::path(out) / "firm_measures.csv", "profit_rate", "0.5");
  CHECK(run_cli("verify " + out) == 5);

  const std::string synth = (dir / "synth").string();
  CHECK(run_cli("synth vertical --out " + synth) == 0);
  CHECK(run_cli("verify " + synth) == 0);
  CHECK(run_cli("synth network --seed 3 --nodes 8 --out " + synth) == 0);
  CHECK(run_cli("verify " + synth) == 0);
  CHECK(run_cli("synth network --topology cyclic --out " + synth) == 2);
  CHECK(run_cli("synth fixedcost --out " + synth) == 0);
  CHECK(run_cli("stats --firms " + firms + " --macro " + macro) == 0);

  const auto regen = dir / "fixture";
  CHECK(run_cli("synth panel --fixture --seed 7 --out " + regen.string()) == 0);
  CHECK(csv::read_text(regen / "firms.csv") == csv::read_text(firms));
  CHECK(csv::read_text(regen / "macro.csv") == csv::read_text(macro));
}

}  // TEST_SUITE
