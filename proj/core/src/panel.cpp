#include "domar/panel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <tuple>
#include <utility>

#include <fmt/format.h>

#include "domar/csv.hpp"
#include "domar/error.hpp"
#include "domar/stats.hpp"

namespace domar::panel {

namespace {

bool by_key(const FirmYear& a, const FirmYear& b) {
  return std::tie(a.firm_id, a.year) < std::tie(b.firm_id, b.year);
}

// Index ranges [begin, end) of each firm's rows in a (firm, year)-sorted vector.
std::vector<std::pair<std::size_t, std::size_t>> firm_spans(const std::vector<FirmYear>& obs) {
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  std::size_t i = 0;
  while (i < obs.size()) {
    std::size_t j = i + 1;
    while (j < obs.size() && obs[j].firm_id == obs[i].firm_id) ++j;
    spans.emplace_back(i, j);
    i = j;
  }
  return spans;
}

// Parses "33", "31-33", "44;45" and similar into a grouped code. A cell whose
// codes map to different groups is flagged as multiple.
void parse_industry_cell(std::string_view cell, FirmYear& obs) {
  if (csv::is_blank(cell)) return;
  std::set<IndustryCode> groups;
  bool unknown = false;
  std::string token;
  auto flush = [&] {
    if (token.empty()) return;
    auto code = csv::parse_int(token);
    token.clear();
    if (!code) return;
    long long c = *code;
    while (c >= 100) c /= 10;
    if (auto g = normalize_industry(static_cast<int>(c))) {
      groups.insert(*g);
    } else {
      unknown = true;
    }
  };
  for (char ch : cell) {
    if (ch == '-' && !token.empty()) {
      // Ranges such as 31-33 are named by their first code.
      break;
    }
    if (ch == ';' || ch == '|' || ch == '/' || ch == ' ') {
      flush();
    } else {
      token += ch;
    }
  }
  flush();
  if (groups.size() > 1) {
    obs.multiple_industry = true;
  } else if (groups.size() == 1 && !unknown) {
    obs.industry = *groups.begin();
  }
}

}  // namespace

std::optional<IndustryCode> normalize_industry(int naics2) {
  int code = naics2;
  if (code >= 31 && code <= 33) code = 31;
  if (code >= 44 && code <= 45) code = 44;
  if (code >= 48 && code <= 49) code = 48;
  const auto& known = industry_codes();
  if (std::binary_search(known.begin(), known.end(), code)) return code;
  return std::nullopt;
}

const std::vector<IndustryCode>& industry_codes() {
  static const std::vector<IndustryCode> codes{11, 21, 22, 23, 31, 42, 44, 48, 51,
                                               52, 53, 54, 56, 61, 62, 71, 72, 81};
  return codes;
}

std::vector<int> PanelDataset::years() const {
  std::set<int> ys;
  for (const auto& o : observations) ys.insert(o.year);
  return {ys.begin(), ys.end()};
}

const MacroYear& PanelDataset::macro_for(int year) const {
  auto it = macro.find(year);
  if (it == macro.end()) fail(ErrorKind::kDomain, fmt::format("no macro data for year {}", year));
  return it->second;
}

SchemaMap SchemaMap::from_config(const Config& cfg) {
  SchemaMap s;
  auto pick = [&](std::string& field, const char* key) {
    field = cfg.get_string(fmt::format("column.{}", key), field);
  };
  pick(s.firm_id, "firm_id");
  pick(s.year, "year");
  pick(s.industry, "industry");
  pick(s.sale, "sale");
  pick(s.cogs, "cogs");
  pick(s.sga, "sga");
  pick(s.rd, "rd");
  pick(s.ppegt, "ppegt");
  pick(s.k_int, "k_int");
  pick(s.capx, "capx");
  pick(s.proxy, "proxy");
  return s;
}

PanelDataset parse_firm_panel(std::string_view csv_text, const SchemaMap& schema) {
  auto table = csv::parse(csv_text);
  const auto c_id = table.column(schema.firm_id);
  const auto c_year = table.column(schema.year);
  const auto c_ind = table.column(schema.industry);
  const auto c_sale = table.column(schema.sale);
  const auto c_cogs = table.column(schema.cogs);
  const auto c_sga = table.column(schema.sga);
  const auto c_rd = table.column(schema.rd);
  const auto c_ppegt = table.column(schema.ppegt);
  const auto c_capx = table.column(schema.capx);
  const auto c_proxy = table.column(schema.proxy);
  // K_INT is optional: absent column means "construct it".
  const auto c_kint = table.find_column(schema.k_int);

  PanelDataset data;
  data.observations.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    auto year = csv::parse_int(row[c_year]);
    if (!year) {
      ++data.provenance.undated_rows;
      continue;
    }
    FirmYear o;
    o.firm_id = row[c_id];
    o.year = static_cast<int>(*year);
    parse_industry_cell(row[c_ind], o);
    o.sale = csv::parse_double(row[c_sale]);
    o.cogs = csv::parse_double(row[c_cogs]);
    o.sga = csv::parse_double(row[c_sga]);
    o.rd = csv::parse_double(row[c_rd]);
    o.ppegt = csv::parse_double(row[c_ppegt]);
    o.capx = csv::parse_double(row[c_capx]);
    o.proxy = csv::parse_double(row[c_proxy]);
    if (c_kint) o.k_int = csv::parse_double(row[*c_kint]);
    data.observations.push_back(std::move(o));
  }
  std::stable_sort(data.observations.begin(), data.observations.end(), by_key);
  for (std::size_t i = 1; i < data.observations.size(); ++i) {
    const auto& a = data.observations[i - 1];
    const auto& b = data.observations[i];
    if (a.firm_id == b.firm_id && a.year == b.year) {
      fail(ErrorKind::kIntegrity,
           fmt::format("duplicate (firm_id, year) = ({}, {})", b.firm_id, b.year));
    }
  }
  return data;
}

PanelDataset load_firm_panel(const std::filesystem::path& path, const SchemaMap& schema) {
  if (!std::filesystem::exists(path)) {
    fail(ErrorKind::kIo, fmt::format("firm panel not found: {}", path.string()));
  }
  return parse_firm_panel(csv::read_text(path), schema);
}

std::map<int, MacroYear> parse_macro(std::string_view csv_text) {
  auto table = csv::parse(csv_text);
  const auto c_year = table.column("year");
  const auto c_gdp = table.column("gdp");
  const auto c_sales = table.column("total_sales");
  const auto c_defl = table.column("deflator");
  const auto c_labor = table.column("labor_comp");
  const auto c_ffr = table.column("ffr");
  const auto c_infl = table.column("inflation");
  const auto c_ext = table.find_column("ext_user_cost");

  auto required = [](std::string_view cell, std::string_view name, long long year) {
    auto v = csv::parse_double(cell);
    if (!v) fail(ErrorKind::kSchema, fmt::format("macro year {}: blank {}", year, name));
    return *v;
  };

  std::map<int, MacroYear> macro;
  for (const auto& row : table.rows) {
    auto year = csv::parse_int(row[c_year]);
    if (!year) fail(ErrorKind::kSchema, "macro row with blank year");
    MacroYear m;
    m.year = static_cast<int>(*year);
    m.gdp = required(row[c_gdp], "gdp", *year);
    m.total_sales = required(row[c_sales], "total_sales", *year);
    m.deflator = required(row[c_defl], "deflator", *year);
    m.labor_comp = required(row[c_labor], "labor_comp", *year);
    m.nominal_rate = required(row[c_ffr], "ffr", *year);
    m.inflation = required(row[c_infl], "inflation", *year);
    if (c_ext) m.external_user_cost = csv::parse_double(row[*c_ext]);
    if (!(m.gdp > 0.0)) fail(ErrorKind::kDomain, fmt::format("macro year {}: gdp <= 0", *year));
    if (!(m.deflator > 0.0)) {
      fail(ErrorKind::kDomain, fmt::format("macro year {}: deflator <= 0", *year));
    }
    if (!macro.emplace(m.year, m).second) {
      fail(ErrorKind::kIntegrity, fmt::format("duplicate macro year {}", *year));
    }
  }
  return macro;
}

std::map<int, MacroYear> load_macro(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    fail(ErrorKind::kIo, fmt::format("macro series not found: {}", path.string()));
  }
  return parse_macro(csv::read_text(path));
}

std::string format_firm_panel(const PanelDataset& data) {
  csv::Writer w({"gvkey", "fyear", "naics2", "sale", "cogs", "xsga", "xrd", "ppegt", "k_int",
                 "capx", "icapt"});
  for (const auto& o : data.observations) {
    w.cell(o.firm_id).cell(o.year);
    if (o.industry) {
      w.cell(*o.industry);
    } else {
      w.cell(std::string_view{});
    }
    w.cell(o.sale).cell(o.cogs).cell(o.sga).cell(o.rd).cell(o.ppegt).cell(o.k_int).cell(o.capx)
        .cell(o.proxy);
    w.end_row();
  }
  return w.str();
}

std::string format_macro(const std::map<int, MacroYear>& macro) {
  bool any_ext = std::any_of(macro.begin(), macro.end(),
                             [](const auto& kv) { return kv.second.external_user_cost.has_value(); });
  std::vector<std::string> header{"year", "gdp", "total_sales", "deflator",
                                  "labor_comp", "ffr", "inflation"};
  if (any_ext) header.emplace_back("ext_user_cost");
  csv::Writer w(header);
  for (const auto& [year, m] : macro) {
    w.cell(year).cell(m.gdp).cell(m.total_sales).cell(m.deflator).cell(m.labor_comp)
        .cell(m.nominal_rate).cell(m.inflation);
    if (any_ext) w.cell(m.external_user_cost);
    w.end_row();
  }
  return w.str();
}

namespace {

template <typename Op>
void scale_financials(FirmYear& o, Op op) {
  for (auto* f : {&o.sale, &o.cogs, &o.sga, &o.rd, &o.ppegt, &o.k_int, &o.capx, &o.proxy,
                  &o.ppegt_lag, &o.k_int_lag}) {
    if (*f) **f = op(**f);
  }
}

}  // namespace

PanelDataset apply_deflators(const PanelDataset& data) {
  if (data.provenance.deflated) {
    fail(ErrorKind::kState, "dataset is already deflated");
  }
  PanelDataset out = data;
  for (auto& o : out.observations) {
    auto it = data.macro.find(o.year);
    if (it == data.macro.end()) {
      fail(ErrorKind::kDomain, fmt::format("no deflator for year {}", o.year));
    }
    const double d = it->second.deflator;
    scale_financials(o, [d](double v) { return v / d; });
  }
  // Lagged stocks were recorded at the previous year's prices.
  if (data.provenance.lags_attached) {
    for (std::size_t i = 0; i < out.observations.size(); ++i) {
      auto& o = out.observations[i];
      const double d = data.macro.at(o.year).deflator;
      auto prev = data.macro.find(o.year - 1);
      if (prev == data.macro.end()) continue;
      const double fix = d / prev->second.deflator;
      if (o.ppegt_lag) *o.ppegt_lag *= fix;
      if (o.k_int_lag) *o.k_int_lag *= fix;
    }
  }
  for (auto& [year, m] : out.macro) {
    m.gdp /= m.deflator;
    m.total_sales /= m.deflator;
    m.labor_comp /= m.deflator;
  }
  out.provenance.deflated = true;
  return out;
}

PanelDataset renominalize(const PanelDataset& data) {
  if (!data.provenance.deflated) fail(ErrorKind::kState, "dataset is not deflated");
  if (data.provenance.lags_attached) {
    fail(ErrorKind::kState, "renominalize before attaching capital lags");
  }
  PanelDataset out = data;
  for (auto& o : out.observations) {
    const double d = data.macro_for(o.year).deflator;
    scale_financials(o, [d](double v) { return v * d; });
  }
  for (auto& [year, m] : out.macro) {
    m.gdp *= m.deflator;
    m.total_sales *= m.deflator;
    m.labor_comp *= m.deflator;
  }
  out.provenance.deflated = false;
  return out;
}

CleanResult clean_sample(const PanelDataset& data, const CleaningRules& rules) {
  if (!(rules.trim_low >= 0.0 && rules.trim_low < rules.trim_high && rules.trim_high <= 1.0)) {
    fail(ErrorKind::kParameter, "trim percentiles must satisfy 0 <= low < high <= 1");
  }
  CleaningReport report;
  report.rules = rules;
  report.rows_in = data.observations.size() + data.provenance.undated_rows;
  report.dropped_missing_year = data.provenance.undated_rows;

  // Re-cleaning with identical rules re-applies the recorded cut values.
  const CleaningReport* previous = nullptr;
  if (data.provenance.cleaning && data.provenance.cleaning->rules == rules) {
    previous = &*data.provenance.cleaning;
  }

  std::vector<FirmYear> rows;
  rows.reserve(data.observations.size());
  for (const auto& o : data.observations) {
    if ((rules.first_year && o.year < *rules.first_year) ||
        (rules.last_year && o.year > *rules.last_year)) {
      ++report.dropped_out_of_range;
    } else {
      rows.push_back(o);
    }
  }

  // Industry: missing, outside the sector list, conflicting within a cell,
  // or more than one code across the firm's spell.
  {
    std::vector<FirmYear> kept;
    for (const auto& [b, e] : firm_spans(rows)) {
      std::set<IndustryCode> codes;
      for (std::size_t i = b; i < e; ++i) {
        if (rows[i].industry) codes.insert(*rows[i].industry);
      }
      const bool firm_conflict = codes.size() > 1;
      for (std::size_t i = b; i < e; ++i) {
        if (firm_conflict || !rows[i].industry || rows[i].multiple_industry) {
          ++report.dropped_industry;
        } else {
          kept.push_back(rows[i]);
        }
      }
    }
    rows = std::move(kept);
  }

  {
    std::vector<FirmYear> kept;
    for (auto o : rows) {
      if (!o.rd && rules.rd_missing_as_zero) {
        o.rd = 0.0;
        ++report.rd_filled_zero;
      }
      bool bad = false;
      for (const auto* f : {&o.sale, &o.cogs, &o.sga, &o.rd, &o.capx}) {
        if (!*f || **f < 0.0 || !std::isfinite(**f)) bad = true;
      }
      if (bad) {
        ++report.dropped_values;
      } else {
        kept.push_back(std::move(o));
      }
    }
    rows = std::move(kept);
  }

  // Sales-to-COGS trim with nearest-rank cut values.
  auto ratio = [](const FirmYear& o) {
    return *o.cogs > 0.0 ? *o.sale / *o.cogs : std::numeric_limits<double>::infinity();
  };
  if (!rows.empty()) {
    std::map<int, std::vector<double>> groups;
    for (const auto& o : rows) groups[rules.trim_by_year ? o.year : 0].push_back(ratio(o));
    for (auto& [key, values] : groups) {
      if (previous) {
        auto it = previous->trim_cuts.find(key);
        if (it != previous->trim_cuts.end()) {
          report.trim_cuts[key] = it->second;
          continue;
        }
      }
      report.trim_cuts[key] = {stats::nearest_rank(values, rules.trim_low),
                               stats::nearest_rank(values, rules.trim_high)};
    }
    std::vector<FirmYear> kept;
    for (auto& o : rows) {
      const auto [lo, hi] = report.trim_cuts.at(rules.trim_by_year ? o.year : 0);
      const double r = ratio(o);
      if (r < lo || r > hi) {
        ++report.dropped_trim;
      } else {
        kept.push_back(std::move(o));
      }
    }
    rows = std::move(kept);
  }

  // Fiscal-year gaps: keep the longest contiguous run (earliest on ties).
  {
    std::vector<FirmYear> kept;
    for (const auto& [b, e] : firm_spans(rows)) {
      std::size_t best_b = b, best_e = b + 1, run_b = b;
      for (std::size_t i = b + 1; i <= e; ++i) {
        if (i == e || rows[i].year != rows[i - 1].year + 1) {
          if (i - run_b > best_e - best_b) {
            best_b = run_b;
            best_e = i;
          }
          run_b = i;
        }
      }
      for (std::size_t i = b; i < e; ++i) {
        if (i >= best_b && i < best_e) {
          kept.push_back(rows[i]);
        } else {
          ++report.dropped_missing_year;
        }
      }
    }
    rows = std::move(kept);
  }

  if (rows.empty()) fail(ErrorKind::kDegenerate, "no observations survive cleaning");

  report.rows_out = rows.size();
  CleanResult result;
  result.data.observations = std::move(rows);
  result.data.macro = data.macro;
  result.data.provenance = data.provenance;
  result.data.provenance.undated_rows = 0;
  result.data.provenance.cleaning = report;
  result.report = std::move(report);
  return result;
}

PanelDataset build_intangible_stock(const PanelDataset& data, double delta_int, double sga_share) {
  if (!(delta_int > 0.0 && delta_int <= 1.0)) {
    fail(ErrorKind::kParameter, fmt::format("intangible depreciation {} outside (0, 1]", delta_int));
  }
  if (!(sga_share >= 0.0 && sga_share <= 1.0)) {
    fail(ErrorKind::kParameter, fmt::format("SG&A share {} outside [0, 1]", sga_share));
  }
  PanelDataset out = data;
  auto& obs = out.observations;
  std::size_t rd_missing = 0;
  std::size_t constructed = 0;
  for (const auto& [b, e] : firm_spans(obs)) {
    std::vector<double> flows;
    for (std::size_t i = b; i < e; ++i) {
      if (!obs[i].rd) ++rd_missing;
      flows.push_back(obs[i].rd.value_or(0.0) + sga_share * obs[i].sga.value_or(0.0));
    }
    // Mean growth of the flow series, floored at zero.
    stats::Sum growth;
    int pairs = 0;
    for (std::size_t k = 1; k < flows.size(); ++k) {
      if (flows[k - 1] > 0.0) {
        growth.add(flows[k] / flows[k - 1] - 1.0);
        ++pairs;
      }
    }
    const double g = pairs > 0 ? std::max(0.0, growth.value() / pairs) : 0.0;

    std::optional<double> stock;
    int stock_year = 0;
    for (std::size_t i = b; i < e; ++i) {
      auto& o = obs[i];
      const double flow = flows[i - b];
      if (o.k_int) {
        stock = *o.k_int;
      } else {
        if (!stock) {
          stock = flow / (delta_int + g);
        } else {
          const int gap = o.year - stock_year;
          stock = std::pow(1.0 - delta_int, gap) * *stock + flow;
        }
        o.k_int = stock;
        o.k_int_constructed = true;
        ++constructed;
      }
      stock_year = o.year;
    }
  }
  if (rd_missing > 0) {
    out.provenance.warnings.push_back(
        fmt::format("intangible stock: {} rows with missing R&D treated as zero flow", rd_missing));
  }
  if (constructed > 0) {
    out.provenance.warnings.push_back(fmt::format(
        "intangible stock: {} rows constructed by perpetual inventory (delta = {}, sga share = "
        "{}; stand-in parameters)",
        constructed, delta_int, sga_share));
  }
  return out;
}

PanelDataset attach_capital_lags(const PanelDataset& data) {
  PanelDataset out = data;
  auto& obs = out.observations;
  for (const auto& [b, e] : firm_spans(obs)) {
    for (std::size_t i = b + 1; i < e; ++i) {
      if (obs[i - 1].year == obs[i].year - 1) {
        obs[i].ppegt_lag = obs[i - 1].ppegt;
        obs[i].k_int_lag = obs[i - 1].k_int;
      }
    }
  }
  out.provenance.lags_attached = true;
  return out;
}

WeightTable compute_weights(const PanelDataset& data, int year) {
  auto mit = data.macro.find(year);
  if (mit == data.macro.end()) {
    fail(ErrorKind::kDomain, fmt::format("year {} missing from macro series", year));
  }
  WeightTable table;
  table.year = year;
  stats::Sum total;
  for (const auto& o : data.observations) {
    if (o.year != year) continue;
    WeightRow r;
    r.firm_id = o.firm_id;
    r.sale = o.sale.value_or(0.0);
    total.add(r.sale);
    table.rows.push_back(std::move(r));
  }
  if (table.rows.empty()) fail(ErrorKind::kDomain, fmt::format("year {} missing from panel", year));
  const double sales = total.value();
  if (!(sales > 0.0)) {
    fail(ErrorKind::kDegenerate, fmt::format("zero total sales in year {}", year));
  }
  const double gdp = mit->second.gdp;
  stats::Sum chi;
  for (auto& r : table.rows) {
    r.omega = r.sale / sales;
    r.domar = r.sale / gdp;
    chi.add(r.domar);
  }
  table.chi_sample = chi.value();
  table.chi_macro = mit->second.total_sales / gdp;
  return table;
}

}  // namespace domar::panel
