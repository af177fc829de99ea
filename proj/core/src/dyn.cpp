#include "domar/dyn.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <fmt/format.h>

#include "domar/csv.hpp"
#include "domar/error.hpp"
#include "domar/stats.hpp"

namespace domar::dyn {

Classification classify_firms(std::span<const std::string> previous,
                              std::span<const std::string> current) {
  const std::set<std::string> prev(previous.begin(), previous.end());
  const std::set<std::string> cur(current.begin(), current.end());
  Classification out;
  std::set_intersection(prev.begin(), prev.end(), cur.begin(), cur.end(),
                        std::back_inserter(out.incumbents));
  std::set_difference(cur.begin(), cur.end(), prev.begin(), prev.end(),
                      std::back_inserter(out.entrants));
  std::set_difference(prev.begin(), prev.end(), cur.begin(), cur.end(),
                      std::back_inserter(out.exiters));
  return out;
}

Classification classify_firms(const panel::PanelDataset& data, int year) {
  std::vector<std::string> prev, cur;
  int first = year;
  for (const auto& o : data.observations) {
    first = std::min(first, o.year);
    if (o.year == year - 1) prev.push_back(o.firm_id);
    if (o.year == year) cur.push_back(o.firm_id);
  }
  if (first >= year || prev.empty()) {
    fail(ErrorKind::kState, fmt::format("no prior year for {}", year));
  }
  return classify_firms(prev, cur);
}

namespace {

struct YearSide {
  std::map<std::string, std::pair<double, double>> firms;  // id -> (omega, inverse markup)
  double h = 0.0;                                           // sum omega / mu
};

YearSide prepare(std::span<const FirmPoint> points) {
  if (points.empty()) fail(ErrorKind::kDegenerate, "decomposition year has no firms");
  stats::Sum total;
  for (const auto& p : points) {
    if (!(p.sale > 0.0)) fail(ErrorKind::kDomain, fmt::format("firm {}: sales not positive",
                                                               p.firm_id));
    if (!(p.markup > 0.0)) fail(ErrorKind::kDomain, fmt::format("firm {}: markup not positive",
                                                                 p.firm_id));
    total.add(p.sale);
  }
  YearSide side;
  stats::Sum h;
  for (const auto& p : points) {
    const double w = p.sale / total.value();
    if (!side.firms.emplace(p.firm_id, std::make_pair(w, 1.0 / p.markup)).second) {
      fail(ErrorKind::kIntegrity, fmt::format("firm {} listed twice", p.firm_id));
    }
    h.add(w / p.markup);
  }
  side.h = h.value();
  return side;
}

}  // namespace

DecompositionTerms markup_change_decomposition(std::span<const FirmPoint> previous,
                                               std::span<const FirmPoint> current,
                                               Reference reference,
                                               std::optional<double> custom_c) {
  const auto a = prepare(previous);
  const auto b = prepare(current);
  DecompositionTerms t;
  t.mu_prev = 1.0 / a.h;
  t.mu = 1.0 / b.h;
  t.delta_mu = t.mu - t.mu_prev;

  double scale = -t.mu * t.mu_prev;
  switch (reference) {
    case Reference::kMidpoint:
      t.c = 0.5 * (a.h + b.h);
      break;
    case Reference::kCustom:
      if (!custom_c) fail(ErrorKind::kParameter, "custom reference needs a value for c");
      t.c = *custom_c;
      break;
    case Reference::kLiteral:
      scale = -1.0 / (t.mu * t.mu_prev);
      t.c = 0.5 * (t.mu + t.mu_prev);
      break;
  }
  const double between_c = reference == Reference::kLiteral ? 0.0 : t.c;

  stats::Sum within, between, entry;
  for (const auto& [id, now] : b.firms) {
    auto it = a.firms.find(id);
    if (it == a.firms.end()) {
      entry.add(now.first * (now.second - t.c));
      continue;
    }
    const auto& before = it->second;
    const double w_bar = 0.5 * (now.first + before.first);
    const double m_bar = 0.5 * (now.second + before.second);
    within.add(w_bar * (now.second - before.second));
    between.add((now.first - before.first) * (m_bar - between_c));
  }
  for (const auto& [id, before] : a.firms) {
    if (!b.firms.contains(id)) entry.add(-before.first * (before.second - t.c));
  }
  t.within = scale * within.value();
  t.between = scale * between.value();
  t.net_entry = scale * entry.value();
  t.residual = t.delta_mu - (t.within + t.between + t.net_entry);
  return t;
}

std::vector<DecompositionTerms> decompose_years(std::span<const mpower::FirmMeasures> rows,
                                                Reference reference,
                                                std::optional<double> custom_c) {
  std::map<int, std::vector<FirmPoint>> by_year;
  for (const auto& m : rows) by_year[m.year].push_back({m.firm_id, m.sale, m.markup});
  std::vector<DecompositionTerms> out;
  if (by_year.size() < 2) return out;
  const int last = by_year.rbegin()->first;
  for (auto it = std::next(by_year.begin()); it != by_year.end(); ++it) {
    const int year = it->first;
    if (year >= last) break;
    auto prev = std::prev(it);
    if (prev->first != year - 1) continue;
    auto t = markup_change_decomposition(prev->second, it->second, reference, custom_c);
    t.year_prev = prev->first;
    t.year = year;
    out.push_back(t);
  }
  return out;
}

std::string format_decomposition(const std::vector<DecompositionTerms>& terms) {
  csv::Writer w({"year", "year_prev", "mu_prev", "mu", "delta_mu", "within", "between",
                 "net_entry", "c", "residual", "cum_delta_mu", "cum_within", "cum_between",
                 "cum_net_entry"});
  stats::Sum cd, cw, cb, cn;
  for (const auto& t : terms) {
    cd.add(t.delta_mu);
    cw.add(t.within);
    cb.add(t.between);
    cn.add(t.net_entry);
    w.cell(t.year).cell(t.year_prev).cell(t.mu_prev).cell(t.mu).cell(t.delta_mu).cell(t.within)
        .cell(t.between).cell(t.net_entry).cell(t.c).cell(t.residual).cell(cd.value())
        .cell(cw.value()).cell(cb.value()).cell(cn.value());
    w.end_row();
  }
  return w.str();
}

std::vector<DecompositionTerms> parse_decomposition(std::string_view csv_text) {
  const auto table = csv::parse(csv_text);
  const auto col = [&](const char* name) { return table.column(name); };
  const std::size_t cy = col("year"), cp = col("year_prev"), cmp = col("mu_prev"), cm = col("mu"),
                    cd = col("delta_mu"), cw = col("within"), cb = col("between"),
                    cn = col("net_entry"), cc = col("c"), cr = col("residual");
  std::vector<DecompositionTerms> out;
  for (const auto& row : table.rows) {
    auto num = [&](std::size_t c) { return csv::parse_double(row[c]).value_or(0.0); };
    DecompositionTerms t;
    t.year = static_cast<int>(num(cy));
    t.year_prev = static_cast<int>(num(cp));
    t.mu_prev = num(cmp);
    t.mu = num(cm);
    t.delta_mu = num(cd);
    t.within = num(cw);
    t.between = num(cb);
    t.net_entry = num(cn);
    t.c = num(cc);
    t.residual = num(cr);
    out.push_back(t);
  }
  return out;
}

double hhi(std::span<const double> sales) {
  stats::Sum total;
  for (double s : sales) {
    if (s < 0.0) fail(ErrorKind::kDomain, "negative sales in concentration index");
    total.add(s);
  }
  if (!(total.value() > 0.0)) fail(ErrorKind::kDomain, "zero sales in concentration scope");
  stats::Sum h;
  for (double s : sales) {
    const double share = s / total.value();
    h.add(share * share);
  }
  return h.value();
}

ConcentrationRecord hhi(const panel::PanelDataset& data, int year,
                        std::optional<panel::IndustryCode> industry) {
  std::vector<double> sales;
  for (const auto& o : data.observations) {
    if (o.year != year) continue;
    if (industry && o.industry != industry) continue;
    if (o.sale && *o.sale > 0.0) sales.push_back(*o.sale);
  }
  ConcentrationRecord r;
  r.year = year;
  r.scope = industry ? std::to_string(*industry) : "national";
  r.n_firms = sales.size();
  r.hhi = hhi(sales);
  return r;
}

std::vector<ConcentrationRecord> hhi_table(const panel::PanelDataset& data) {
  std::map<int, std::set<panel::IndustryCode>> industries;
  for (const auto& o : data.observations) {
    auto& set = industries[o.year];
    if (o.industry && o.sale && *o.sale > 0.0) set.insert(*o.industry);
  }
  std::vector<ConcentrationRecord> out;
  for (const auto& [year, codes] : industries) {
    out.push_back(hhi(data, year, std::nullopt));
    for (auto code : codes) out.push_back(hhi(data, year, code));
  }
  return out;
}

std::string format_hhi(const std::vector<ConcentrationRecord>& records) {
  csv::Writer w({"year", "scope", "hhi", "n_firms"});
  for (const auto& r : records) {
    w.cell(r.year).cell(r.scope).cell(r.hhi).cell(static_cast<long long>(r.n_firms));
    w.end_row();
  }
  return w.str();
}

DistributionStats distribution_stats(std::span<const double> markups,
                                     std::span<const double> weights) {
  if (markups.empty()) fail(ErrorKind::kDegenerate, "markup distribution is empty");
  if (!weights.empty() && weights.size() != markups.size()) {
    fail(ErrorKind::kParameter, "weights and markups differ in length");
  }
  auto pct = [&](double p) {
    return weights.empty() ? stats::nearest_rank(markups, p)
                           : stats::weighted_nearest_rank(markups, weights, p);
  };
  DistributionStats s;
  s.n = markups.size();
  s.p10 = pct(0.10);
  s.p25 = pct(0.25);
  s.p50 = pct(0.50);
  s.p75 = pct(0.75);
  s.p90 = pct(0.90);
  s.p95 = pct(0.95);
  s.below_unity = static_cast<std::size_t>(
      std::count_if(markups.begin(), markups.end(), [](double m) { return m < 1.0; }));
  return s;
}

std::vector<DistributionStats> markup_percentiles(std::span<const mpower::FirmMeasures> rows) {
  std::map<int, std::vector<double>> by_year;
  for (const auto& m : rows) by_year[m.year].push_back(m.markup);
  std::vector<DistributionStats> out;
  for (const auto& [year, markups] : by_year) {
    auto s = distribution_stats(markups);
    s.year = year;
    out.push_back(s);
  }
  return out;
}

std::string format_markup_percentiles(const std::vector<DistributionStats>& stats) {
  csv::Writer w({"year", "n", "p10", "p25", "p50", "p75", "p90", "p95", "below_unity"});
  for (const auto& s : stats) {
    w.cell(s.year).cell(static_cast<long long>(s.n)).cell(s.p10).cell(s.p25).cell(s.p50)
        .cell(s.p75).cell(s.p90).cell(s.p95).cell(static_cast<long long>(s.below_unity));
    w.end_row();
  }
  return w.str();
}

}  // namespace domar::dyn
