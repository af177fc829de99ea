#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "domar/csv.hpp"
#include "domar/dyn.hpp"
#include "domar/error.hpp"
#include "domar/oracle.hpp"
#include "domar/pipeline.hpp"

namespace fs = std::filesystem;
using namespace domar;

namespace {

struct RunFlags {
  std::string config;
  std::string preset;
  std::string out;
  std::string firms;
  std::string macro;
  std::string year_range;
  std::optional<long long> seed;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--config", f.config, "key = value config file");
  cmd->add_option("--preset", f.preset,
                  "baseline | deu_replication | no_intangibles | cogs_only");
  cmd->add_option("--firms", f.firms, "firm panel CSV");
  cmd->add_option("--macro", f.macro, "macro series CSV");
  cmd->add_option("--year-range", f.year_range, "inclusive year range A:B");
  cmd->add_option("--seed", f.seed, "run seed");
}

pipeline::RunConfig resolve(const RunFlags& f) {
  Config keys = f.config.empty() ? Config{} : Config::load(f.config);
  if (!f.firms.empty()) keys.set("input.firms", f.firms);
  if (!f.macro.empty()) keys.set("input.macro", f.macro);
  if (!f.out.empty()) keys.set("output.dir", f.out);
  if (!f.year_range.empty()) keys.set("run.year_range", f.year_range);
  if (f.seed) keys.set("run.seed", std::to_string(*f.seed));
  return pipeline::RunConfig::resolve(
      keys, f.preset.empty() ? std::nullopt : std::optional<std::string>(f.preset));
}

int cmd_pipeline(const RunFlags& flags) {
  const auto rc = resolve(flags);
  for (const auto& o : rc.overrides) {
    fmt::print("override {} = {} (preset {})\n", o.key, o.value, o.preset_value);
  }
  const auto summary = pipeline::run_pipeline(rc);
  for (const auto& w : summary.warnings) fmt::print(stderr, "warning: {}\n", w);
  fmt::print("preset {}: wrote {} files to {}\n", pipeline::to_string(rc.preset),
             summary.files.size(), rc.out_dir.string());
  return 0;
}

void write(const fs::path& dir, const std::string& name, const std::string& content) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  csv::write_text(dir / name, content);
  fmt::print("wrote {}\n", (dir / name).string());
}

std::string network_summary(const oracle::NetworkEconomy& e) {
  csv::Writer w({"gdp", "total_sales", "total_profit", "chi", "labor_comp", "capital_payments",
                 "profit_share", "user_cost", "closure_residual"});
  w.cell(e.gdp).cell(e.total_sales).cell(e.total_profit).cell(e.chi).cell(e.labor_comp)
      .cell(e.capital_payments).cell(e.total_profit / e.gdp).cell(e.user_cost)
      .cell(e.closure_residual);
  w.end_row();
  return w.str();
}

void write_network(const fs::path& dir, const oracle::NetworkEconomy& e) {
  write(dir, "network_truth.csv", oracle::format_network_truth(e));
  write(dir, "network_flows.csv", oracle::format_network_flows(e));
  write(dir, "network_summary.csv", network_summary(e));
}

int cmd_stats(const RunFlags& flags) {
  const auto rc = resolve(flags);
  if (rc.firms.empty() || rc.macro.empty()) {
    fail(ErrorKind::kConfig, "stats needs --firms and --macro (or input.* config keys)");
  }
  auto data = panel::load_firm_panel(rc.firms, rc.schema);
  data.macro = panel::load_macro(rc.macro);
  const auto cleaned = panel::clean_sample(panel::apply_deflators(data), rc.cleaning);
  const auto& r = cleaned.report;
  fmt::print("rows in            {}\n", r.rows_in);
  fmt::print("rows out           {}\n", r.rows_out);
  fmt::print("dropped range      {}\n", r.dropped_out_of_range);
  fmt::print("dropped industry   {}\n", r.dropped_industry);
  fmt::print("dropped values     {}\n", r.dropped_values);
  fmt::print("dropped trim       {}\n", r.dropped_trim);
  fmt::print("dropped year gaps  {}\n", r.dropped_missing_year);
  for (const auto& [key, cut] : r.trim_cuts) {
    fmt::print("trim cut {:<9} [{}, {}]\n", key == 0 ? std::string("pooled") : std::to_string(key),
               csv::format_double(cut.first), csv::format_double(cut.second));
  }
  fmt::print("\n{:<6} {:>6} {:>10}\n", "year", "firms", "hhi");
  for (int year : cleaned.data.years()) {
    const auto h = dyn::hhi(cleaned.data, year, std::nullopt);
    fmt::print("{:<6} {:>6} {:>10.6f}\n", year, h.n_firms, h.hhi);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Firm-level market power and Domar-weighted aggregation"};
  app.require_subcommand(1);

  RunFlags run_flags;
  auto* pipe = app.add_subcommand("pipeline", "run ingest through report");
  add_run_flags(pipe, run_flags);
  pipe->add_option("--out", run_flags.out, "output directory");

  RunFlags stats_flags;
  auto* stats = app.add_subcommand("stats", "cleaning report and concentration of a panel");
  add_run_flags(stats, stats_flags);

  std::string verify_dir;
  auto* verify = app.add_subcommand("verify", "re-check identities on a run directory");
  verify->add_option("dir", verify_dir, "run output directory");
  verify->add_option("--out", verify_dir, "run output directory");

  auto* synth = app.add_subcommand("synth", "write synthetic economies with ground truth");
  synth->require_subcommand(1);
  std::string synth_out = ".";
  long long synth_seed = 1;
  auto synth_sub = [&](const std::string& name, const std::string& help) {
    auto* sub = synth->add_subcommand(name, help);
    sub->add_option("--out", synth_out, "output directory");
    sub->add_option("--seed", synth_seed, "generator seed");
    return sub;
  };

  auto* vertical = synth_sub("vertical", "two-producer vertical economy");

  auto* panel_cmd = synth_sub("panel", "Cobb-Douglas firm panel");
  bool fixture = false;
  std::size_t firms_per_industry = 200;
  int years = 20;
  double noise = 0.0;
  double churn = 0.0;
  panel_cmd->add_flag("--fixture", fixture, "two-industry fixture spec");
  panel_cmd->add_option("--firms-per-industry", firms_per_industry)->check(CLI::PositiveNumber);
  panel_cmd->add_option("--years", years)->check(CLI::Range(2, 200));
  panel_cmd->add_option("--noise", noise)->check(CLI::NonNegativeNumber);
  panel_cmd->add_option("--churn", churn)->check(CLI::Range(0.0, 1.0));

  auto* network = synth_sub("network", "random acyclic production network");
  int nodes = 10;
  std::string topology = "random";
  double link_probability = 0.4;
  network->add_option("--nodes", nodes)->check(CLI::Range(1, 12));
  network->add_option("--topology", topology, "random | vertical | none | cyclic");
  network->add_option("--link-probability", link_probability)->check(CLI::Range(0.0, 1.0));

  auto* fixed = synth_sub("fixedcost", "firm with a fixed labor requirement");
  double alpha = 0.8, l_bar = 1.0, center = 2.0, width = 1e-3;
  int points = 21;
  fixed->add_option("--alpha", alpha)->check(CLI::PositiveNumber);
  fixed->add_option("--l-bar", l_bar);
  fixed->add_option("--center", center);
  fixed->add_option("--width", width)->check(CLI::PositiveNumber);
  fixed->add_option("--points", points)->check(CLI::Range(2, 100000));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_code(ErrorKind::kConfig);
  }

  try {
    if (pipe->parsed()) return cmd_pipeline(run_flags);
    if (stats->parsed()) return cmd_stats(stats_flags);
    if (verify->parsed()) {
      if (verify_dir.empty()) fail(ErrorKind::kConfig, "verify needs a run directory");
      const auto report = pipeline::verify_outputs(verify_dir);
      fmt::print("{}", report.table());
      if (!report.passed()) {
        for (const auto& c : report.checks) {
          if (c.status == pipeline::CheckStatus::kFail) {
            fmt::print(stderr, "identity violated: {} (residual {:.3e})\n", c.name, c.residual);
          }
        }
        return exit_code(ErrorKind::kVerification);
      }
      return 0;
    }
    if (synth_seed < 0) fail(ErrorKind::kConfig, "--seed must be nonnegative");
    const auto seed = static_cast<std::uint64_t>(synth_seed);
    const fs::path out = synth_out;
    if (vertical->parsed()) {
      write_network(out, oracle::gen_vertical_economy());
    } else if (panel_cmd->parsed()) {
      oracle::PanelSpec spec = fixture ? oracle::fixture_spec(seed) : oracle::PanelSpec{};
      spec.seed = seed;
      if (!fixture) {
        spec.firms_per_industry = firms_per_industry;
        spec.n_years = years;
        spec.noise_sd = noise;
        spec.churn = churn;
      }
      const auto g = oracle::gen_cobb_douglas_panel(spec);
      write(out, "firms.csv", panel::format_firm_panel(g.data));
      write(out, "macro.csv", panel::format_macro(g.data.macro));
      write(out, "firms_truth.csv", oracle::format_panel_truth(g.truth));
    } else if (network->parsed()) {
      oracle::NetworkSpec spec;
      spec.seed = seed;
      spec.nodes = nodes;
      spec.link_probability = link_probability;
      if (topology == "random") {
        spec.topology = oracle::Topology::kRandomAcyclic;
      } else if (topology == "vertical") {
        spec.topology = oracle::Topology::kVertical;
      } else if (topology == "none") {
        spec.topology = oracle::Topology::kNone;
      } else if (topology == "cyclic") {
        spec.topology = oracle::Topology::kCyclic;
      } else {
        fail(ErrorKind::kConfig, fmt::format("unknown topology '{}'", topology));
      }
      const auto e = oracle::gen_network_economy(spec);
      fmt::print("closure verified: largest residual {:.3e}\n", e.closure_residual);
      write_network(out, e);
    } else if (fixed->parsed()) {
      std::vector<double> grid;
      for (int i = 0; i < points; ++i) {
        grid.push_back(center - width / 2 + width * i / (points - 1));
      }
      const auto data = oracle::gen_fixed_cost_firm(alpha, l_bar, grid);
      csv::Writer w({"labor", "output", "local_elasticity"});
      for (const auto& p : data) {
        w.cell(p.labor).cell(p.output).cell(oracle::predicted_elasticity(alpha, l_bar, p.labor));
        w.end_row();
      }
      write(out, "fixedcost.csv", w.str());
      fmt::print("log-log slope {:.6f}, predicted at center {:.6f}\n", oracle::loglog_slope(data),
                 oracle::predicted_elasticity(alpha, l_bar, center));
    }
    return 0;
  } catch (const Error& e) {
    fmt::print(stderr, "error ({}): {}\n", to_string(e.kind()), e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return exit_code(ErrorKind::kIo);
  }
}
