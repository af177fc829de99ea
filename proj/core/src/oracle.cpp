#include "domar/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include <fmt/format.h>

#include "domar/csv.hpp"
#include "domar/error.hpp"
#include "domar/stats.hpp"

namespace domar::oracle {

namespace {

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
  return std::mt19937_64(seq);
}

double normal(std::mt19937_64& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

void validate(const PanelSpec& spec) {
  auto bad = [](const std::string& what) { fail(ErrorKind::kParameter, what); };
  if (spec.industries.empty()) bad("panel spec needs at least one industry");
  for (const auto& ind : spec.industries) {
    if (!panel::normalize_industry(ind.code)) bad(fmt::format("unknown industry {}", ind.code));
    if (!(ind.theta_v > 0.0 && ind.theta_v < 1.0)) bad("theta_v must lie in (0, 1)");
    if (!(ind.theta_k >= 0.0)) bad("theta_k must be nonnegative");
  }
  if (!(spec.rho >= 0.0 && spec.rho < 1.0)) bad("rho must lie in [0, 1)");
  if (spec.n_years < 2) bad("panel needs at least two years");
  if (spec.firms_per_industry == 0) bad("panel needs at least one firm");
  if (!(spec.markup_median > 0.0)) bad("markup median must be positive");
  if (spec.innovation_sd < 0.0 || spec.noise_sd < 0.0 || spec.markup_log_sd < 0.0 ||
      spec.proxy_noise_sd < 0.0 || spec.capital_noise_sd < 0.0) {
    bad("standard deviations must be nonnegative");
  }
  if (!(spec.sga_share >= 0.0 && spec.sga_share < 1.0)) bad("sga share must lie in [0, 1)");
  if (!(spec.intangible_share >= 0.0 && spec.intangible_share < 1.0)) {
    bad("intangible share must lie in [0, 1)");
  }
  if (!(spec.churn >= 0.0 && spec.churn <= 1.0)) bad("churn must lie in [0, 1]");
  if (!(spec.sample_coverage > 0.0 && spec.sample_coverage <= 1.0)) {
    bad("sample coverage must lie in (0, 1]");
  }
  if (!(spec.chi > 0.0)) bad("chi must be positive");
}

}  // namespace

GeneratedPanel gen_cobb_douglas_panel(const PanelSpec& spec) {
  validate(spec);
  GeneratedPanel out;
  out.spec = spec;
  auto& obs = out.data.observations;
  const int T = spec.n_years;
  const double lambda = spec.capital_persistence;
  const double omega_sd0 = spec.innovation_sd / std::sqrt(1.0 - spec.rho * spec.rho);

  for (std::size_t q = 0; q < spec.industries.size(); ++q) {
    const auto& ind = spec.industries[q];
    for (std::size_t f = 0; f < spec.firms_per_industry; ++f) {
      auto rng = stream(spec.seed, q + 1, f + 1);
      const std::string id = fmt::format("F{}{:05d}", ind.code, f);
      const double k_bar = spec.capital_mean + spec.capital_firm_sd * normal(rng);
      double omega = omega_sd0 * normal(rng);
      double k = k_bar + spec.capital_noise_sd * normal(rng);

      int first = 0;
      int last = T - 1;
      if (uniform(rng, 0.0, 1.0) < spec.churn) {
        first = uniform_int(rng, 0, T / 3);
        last = uniform_int(rng, (2 * T) / 3, T - 1);
      }

      for (int t = 0; t < T; ++t) {
        if (t > 0) omega = spec.rho * omega + spec.innovation_sd * normal(rng);
        const double k_next = (1.0 - lambda) * k_bar + lambda * k + spec.capital_response * omega +
                              spec.capital_noise_sd * normal(rng);
        const double mu = spec.markup_median * std::exp(spec.markup_log_sd * normal(rng));
        const double eps = spec.noise_sd * normal(rng);
        const double proxy_shock = spec.proxy_noise_sd * normal(rng);

        const double l =
            (std::log(ind.theta_v / mu) + ind.theta_k * k + omega) / (1.0 - ind.theta_v);
        const double log_y = ind.theta_v * l + ind.theta_k * k + omega;
        const double log_m = spec.proxy_omega * omega + spec.proxy_capital * k +
                             spec.proxy_input * l + proxy_shock;
        const double y_true = std::exp(log_y);
        const double sale = std::exp(log_y + eps);
        const double v = std::exp(l);
        const double fc = spec.fixed_cost_ratio * y_true;

        if (t >= first && t <= last) {
          const double deflator = std::pow(1.0 + spec.deflator_growth, t);
          panel::FirmYear o;
          o.firm_id = id;
          o.year = spec.first_year + t;
          o.industry = ind.code;
          o.sale = sale * deflator;
          o.cogs = (1.0 - spec.sga_share) * v * deflator;
          o.sga = spec.sga_share * v * deflator;
          o.rd = fc * deflator;
          o.ppegt = (1.0 - spec.intangible_share) * std::exp(k_next) * deflator;
          o.k_int = spec.intangible_share * std::exp(k_next) * deflator;
          o.capx = std::exp(log_m) * deflator;
          o.proxy = std::exp(log_m) * deflator;
          obs.push_back(std::move(o));

          FirmTruth tr;
          tr.firm_id = id;
          tr.year = spec.first_year + t;
          tr.industry = ind.code;
          tr.theta_v = ind.theta_v;
          tr.theta_k = ind.theta_k;
          tr.markup = mu;
          tr.omega = omega;
          tr.noise = eps;
          tr.sale = y_true;
          tr.variable_cost = v;
          tr.capital = std::exp(k);
          tr.fixed_cost = fc;
          tr.profit_rate = 1.0 - (ind.theta_v + ind.theta_k) / mu - fc / y_true;
          out.truth.push_back(std::move(tr));
        }
        k = k_next;
      }
    }
  }

  std::sort(obs.begin(), obs.end(), [](const auto& a, const auto& b) {
    return std::tie(a.firm_id, a.year) < std::tie(b.firm_id, b.year);
  });
  std::sort(out.truth.begin(), out.truth.end(), [](const auto& a, const auto& b) {
    return std::tie(a.firm_id, a.year) < std::tie(b.firm_id, b.year);
  });

  std::map<int, double> sample_sales;
  for (const auto& o : obs) sample_sales[o.year] += *o.sale;
  for (int t = 0; t < T; ++t) {
    panel::MacroYear m;
    m.year = spec.first_year + t;
    m.deflator = std::pow(1.0 + spec.deflator_growth, t);
    m.total_sales = sample_sales[m.year] / spec.sample_coverage;
    m.gdp = m.total_sales / spec.chi;
    m.labor_comp = spec.labor_share * m.gdp;
    m.nominal_rate = spec.nominal_rate;
    m.inflation = spec.inflation;
    m.external_user_cost = spec.external_user_cost;
    if (m.gdp > 0.0) out.data.macro.emplace(m.year, m);
  }
  return out;
}

PanelSpec fixture_spec(std::uint64_t seed) {
  PanelSpec s;
  s.seed = seed;
  s.firms_per_industry = 60;
  s.n_years = 12;
  s.first_year = 2005;
  s.industries = {{31, 0.70, 0.30}, {54, 0.60, 0.35}};
  s.noise_sd = 0.05;
  s.churn = 0.3;
  s.deflator_growth = 0.02;
  return s;
}

std::string format_panel_truth(const std::vector<FirmTruth>& truth) {
  csv::Writer w({"firm_id", "year", "industry", "theta_v", "theta_k", "markup", "omega", "noise",
                 "sale", "variable_cost", "capital", "fixed_cost", "profit_rate"});
  for (const auto& t : truth) {
    w.cell(t.firm_id).cell(t.year).cell(t.industry).cell(t.theta_v).cell(t.theta_k)
        .cell(t.markup).cell(t.omega).cell(t.noise).cell(t.sale).cell(t.variable_cost)
        .cell(t.capital).cell(t.fixed_cost).cell(t.profit_rate);
    w.end_row();
  }
  return w.str();
}

NetworkEconomy solve_network(const std::vector<NodeSpec>& nodes, double user_cost) {
  const int n = static_cast<int>(nodes.size());
  if (n == 0) fail(ErrorKind::kParameter, "network needs at least one node");
  if (!(user_cost > 0.0)) fail(ErrorKind::kParameter, "user cost must be positive");
  for (int i = 0; i < n; ++i) {
    const auto& node = nodes[static_cast<std::size_t>(i)];
    if (!(node.markup > 0.0)) fail(ErrorKind::kParameter, fmt::format("node {}: markup", i));
    if (node.final_demand < 0.0) fail(ErrorKind::kParameter, "final demand must be nonnegative");
    if (!(node.fixed_cost_ratio >= 0.0 && node.fixed_cost_ratio < 1.0)) {
      fail(ErrorKind::kParameter, "fixed cost ratio must lie in [0, 1)");
    }
    for (const auto& in : node.inputs) {
      if (in.supplier >= n || in.supplier < -2) {
        fail(ErrorKind::kParameter, fmt::format("node {}: unknown supplier {}", i, in.supplier));
      }
      if (in.supplier >= 0 && in.supplier <= i) {
        fail(ErrorKind::kParameter,
             fmt::format("unsupported topology: node {} buys from node {} (cycle or self-loop)",
                         i, in.supplier));
      }
      if (!(in.markdown > 0.0 && in.markdown <= 1.0) || in.theta < 0.0) {
        fail(ErrorKind::kParameter, fmt::format("node {}: invalid input wedge", i));
      }
    }
  }

  NetworkEconomy e;
  e.spec = nodes;
  e.user_cost = user_cost;
  e.nodes.resize(static_cast<std::size_t>(n));
  std::vector<double> demand(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const auto& node = nodes[ui];
    auto& t = e.nodes[ui];
    t.id = fmt::format("N{:02d}", i);
    t.sale = node.final_demand + demand[ui];
    t.markup = node.markup;
    const double scale = t.sale / node.markup;  // marginal cost times quantity
    t.fc = node.fixed_cost_ratio * t.sale;
    stats::Sum spend, rs, wedge;
    for (const auto& in : node.inputs) {
      const double x = scale * in.theta * in.markdown;
      spend.add(x);
      rs.add(in.theta);
      wedge.add(in.theta * (1.0 - in.markdown));
      if (in.supplier >= 0) {
        demand[static_cast<std::size_t>(in.supplier)] += x;
        t.intermediates += x;
      } else if (in.supplier == -1) {
        t.labor_payment += x;
      } else {
        t.capital_payment += x;
      }
    }
    t.labor_payment += t.fc;
    t.capital_stock = t.capital_payment / user_cost;
    t.tc = spend.value() + t.fc;
    t.rs = rs.value();
    t.fc_adj = t.tc / (t.tc - t.fc);
    t.rs_adj = t.rs * t.fc_adj;
    t.monopsony = t.fc_adj * wedge.value();
    t.profit = t.sale - t.tc;
    t.profit_rate = t.sale > 0.0 ? t.profit / t.sale : 0.0;
    t.value_added = t.sale - t.intermediates;
  }
  stats::Sum gdp, sales, profit, labor, capital;
  for (int i = 0; i < n; ++i) {
    const auto& t = e.nodes[static_cast<std::size_t>(i)];
    gdp.add(nodes[static_cast<std::size_t>(i)].final_demand);
    sales.add(t.sale);
    profit.add(t.profit);
    labor.add(t.labor_payment);
    capital.add(t.capital_payment);
  }
  e.gdp = gdp.value();
  if (!(e.gdp > 0.0)) fail(ErrorKind::kParameter, "network has no final demand");
  e.total_sales = sales.value();
  e.total_profit = profit.value();
  e.chi = e.total_sales / e.gdp;
  e.labor_comp = labor.value();
  e.capital_payments = capital.value();
  e.closure_residual = closure_residual(e);
  return e;
}

double closure_residual(const NetworkEconomy& e) {
  double worst = 0.0;
  auto track = [&](double a, double b) {
    worst = std::max(worst, std::fabs(a - b) / std::max(1.0, std::fabs(b)));
  };
  stats::Sum va, profit, final_demand;
  std::vector<double> bought(e.nodes.size(), 0.0);
  for (std::size_t i = 0; i < e.nodes.size(); ++i) {
    const auto& t = e.nodes[i];
    for (const auto& in : e.spec[i].inputs) {
      if (in.supplier >= 0) {
        bought[static_cast<std::size_t>(in.supplier)] +=
            t.sale / t.markup * in.theta * in.markdown;
      }
    }
  }
  for (std::size_t i = 0; i < e.nodes.size(); ++i) {
    const auto& t = e.nodes[i];
    if (!(t.value_added > 0.0)) return std::numeric_limits<double>::infinity();
    track(t.sale, t.intermediates + t.labor_payment + t.capital_payment + t.profit);
    track(t.sale, e.spec[i].final_demand + bought[i]);
    va.add(t.value_added);
    profit.add(t.profit);
    final_demand.add(e.spec[i].final_demand);
  }
  track(e.gdp, final_demand.value());
  track(e.gdp, va.value());
  track(e.total_profit, profit.value());
  track(e.gdp, e.labor_comp + e.capital_payments + e.total_profit);
  return worst;
}

NetworkEconomy gen_network_economy(const NetworkSpec& spec) {
  if (spec.topology == Topology::kCyclic) {
    fail(ErrorKind::kParameter, "unsupported topology: cyclic networks cannot be solved");
  }
  if (spec.nodes < 1 || spec.nodes > 12) {
    fail(ErrorKind::kParameter, "network size must lie in [1, 12]");
  }
  if (!(spec.link_probability >= 0.0 && spec.link_probability <= 1.0)) {
    fail(ErrorKind::kParameter, "link probability must lie in [0, 1]");
  }
  auto rng = stream(spec.seed, 0x6e6574);
  std::vector<NodeSpec> nodes(static_cast<std::size_t>(spec.nodes));
  for (int i = 0; i < spec.nodes; ++i) {
    auto& node = nodes[static_cast<std::size_t>(i)];
    node.markup = uniform(rng, 0.95, 1.6);
    node.final_demand = uniform(rng, 1.0, 100.0);
    node.fixed_cost_ratio = uniform(rng, 0.0, 0.08);
    const double labor_markdown = uniform(rng, 0.0, 1.0) < 0.5 ? uniform(rng, 0.7, 1.0) : 1.0;
    node.inputs.push_back({-1, uniform(rng, 0.1, 0.5), labor_markdown});
    node.inputs.push_back({-2, uniform(rng, 0.05, 0.3), 1.0});

    std::vector<InputUse> intermediates;
    for (int j = i + 1; j < spec.nodes; ++j) {
      bool link = false;
      if (spec.topology == Topology::kRandomAcyclic) {
        link = uniform(rng, 0.0, 1.0) < spec.link_probability;
      } else if (spec.topology == Topology::kVertical) {
        link = j == i + 1;
      }
      if (!link) continue;
      const double markdown = uniform(rng, 0.0, 1.0) < 0.5 ? uniform(rng, 0.8, 1.0) : 1.0;
      intermediates.push_back({j, uniform(rng, 0.05, 0.4), markdown});
    }
    double theta_sum = 0.0;
    for (const auto& in : intermediates) theta_sum += in.theta;
    const double cap = 0.8;
    for (auto& in : intermediates) {
      if (theta_sum > cap) in.theta *= cap / theta_sum;
      node.inputs.push_back(in);
    }
  }
  auto e = solve_network(nodes, spec.user_cost);
  if (e.closure_residual > 1e-12) {
    fail(ErrorKind::kVerification,
         fmt::format("network accounting does not close: residual {}", e.closure_residual));
  }
  return e;
}

NetworkEconomy gen_vertical_chain(int length, double profit_rate, double gdp) {
  if (length < 1) fail(ErrorKind::kParameter, "chain length must be positive");
  if (!(profit_rate < 1.0)) fail(ErrorKind::kParameter, "profit rate must be below 1");
  std::vector<NodeSpec> nodes(static_cast<std::size_t>(length));
  for (int i = 0; i < length; ++i) {
    auto& node = nodes[static_cast<std::size_t>(i)];
    node.markup = 1.0 / (1.0 - profit_rate);
    node.final_demand = i == 0 ? gdp : 0.0;
    node.inputs.push_back({i + 1 < length ? i + 1 : -1, 1.0, 1.0});
  }
  return solve_network(nodes);
}

NetworkEconomy gen_vertical_economy() { return gen_vertical_chain(2, 0.10, 100.0); }

std::vector<agg::FirmTerms> firm_terms(const NetworkEconomy& economy) {
  std::vector<agg::FirmTerms> out;
  for (const auto& t : economy.nodes) {
    out.push_back({t.id, t.sale, t.markup, t.rs, t.fc_adj, t.rs_adj, t.monopsony});
  }
  return out;
}

std::string format_network_truth(const NetworkEconomy& economy) {
  csv::Writer w({"node", "sale", "markup", "rs", "fc", "tc", "fc_adj", "rs_adj", "monopsony",
                 "profit", "profit_rate", "value_added", "intermediates", "labor_payment",
                 "capital_payment", "capital_stock", "final_demand", "domar_weight"});
  for (std::size_t i = 0; i < economy.nodes.size(); ++i) {
    const auto& t = economy.nodes[i];
    w.cell(t.id).cell(t.sale).cell(t.markup).cell(t.rs).cell(t.fc).cell(t.tc).cell(t.fc_adj)
        .cell(t.rs_adj).cell(t.monopsony).cell(t.profit).cell(t.profit_rate).cell(t.value_added)
        .cell(t.intermediates).cell(t.labor_payment).cell(t.capital_payment)
        .cell(t.capital_stock).cell(economy.spec[i].final_demand).cell(t.sale / economy.gdp);
    w.end_row();
  }
  return w.str();
}

std::string format_network_flows(const NetworkEconomy& economy) {
  csv::Writer w({"buyer", "supplier", "theta", "markdown", "expenditure"});
  for (std::size_t i = 0; i < economy.nodes.size(); ++i) {
    const auto& t = economy.nodes[i];
    for (const auto& in : economy.spec[i].inputs) {
      const std::string supplier = in.supplier == -1   ? "labor"
                                   : in.supplier == -2 ? "capital"
                                                       : economy.nodes[static_cast<std::size_t>(
                                                             in.supplier)].id;
      w.cell(t.id).cell(supplier).cell(in.theta).cell(in.markdown)
          .cell(t.sale / t.markup * in.theta * in.markdown);
      w.end_row();
    }
  }
  return w.str();
}

void solve_supplied_firm(SuppliedFirm& firm) {
  if (firm.inputs.empty()) fail(ErrorKind::kParameter, "firm needs at least one input");
  if (!(firm.productivity > 0.0 && firm.output > 0.0 && firm.markup > 0.0)) {
    fail(ErrorKind::kParameter, "productivity, output and markup must be positive");
  }
  const double log_y = std::log(firm.output);
  double num = log_y - std::log(firm.productivity);
  double den = 0.0;
  for (const auto& in : firm.inputs) {
    if (!(in.theta > 0.0 && in.wage_level > 0.0 && in.eta >= 0.0)) {
      fail(ErrorKind::kParameter, "input elasticity, wage level and eta must be admissible");
    }
    const double a = in.theta / (1.0 + in.eta);
    num -= a * (std::log(in.theta) + log_y - std::log(in.wage_level * (1.0 + in.eta)));
    den += a;
  }
  const double log_lambda = num / den;
  stats::Sum spend;
  for (auto& in : firm.inputs) {
    in.quantity = std::exp((log_lambda + std::log(in.theta) + log_y -
                            std::log(in.wage_level * (1.0 + in.eta))) /
                           (1.0 + in.eta));
    in.expenditure = in.wage_level * std::pow(in.quantity, 1.0 + in.eta);
    spend.add(in.expenditure);
  }
  firm.marginal_cost = std::exp(log_lambda);
  firm.price = firm.markup * firm.marginal_cost;
  firm.sale = firm.price * firm.output;
  firm.profit = firm.sale - spend.value() - firm.fixed_cost;
}

std::vector<SuppliedFirm> gen_supplied_firms(std::uint64_t seed, std::size_t n) {
  std::vector<SuppliedFirm> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto rng = stream(seed, 0x70726f70, i);
    SuppliedFirm f;
    f.productivity = uniform(rng, 0.5, 2.0);
    f.output = uniform(rng, 1.0, 10.0);
    f.markup = uniform(rng, 0.9, 2.0);
    f.fixed_cost = uniform(rng, 0.0, 0.3) * f.output;
    const int inputs = uniform_int(rng, 1, 4);
    for (int j = 0; j < inputs; ++j) {
      SuppliedInput in;
      in.theta = uniform(rng, 0.1, 0.6);
      in.wage_level = uniform(rng, 0.5, 2.0);
      in.eta = uniform(rng, 0.0, 1.0) < 0.3 ? 0.0 : uniform(rng, 0.0, 1.0);
      f.inputs.push_back(in);
    }
    solve_supplied_firm(f);
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<FixedCostPoint> gen_fixed_cost_firm(double alpha, double l_bar,
                                                const std::vector<double>& grid,
                                                double productivity) {
  if (!(alpha > 0.0)) fail(ErrorKind::kParameter, "alpha must be positive");
  std::vector<FixedCostPoint> out;
  for (double l : grid) {
    if (!(l > l_bar)) {
      fail(ErrorKind::kDomain, fmt::format("labor {} does not exceed the fixed requirement {}", l,
                                           l_bar));
    }
    out.push_back({l, productivity * std::pow(l - l_bar, alpha)});
  }
  return out;
}

double predicted_elasticity(double alpha, double l_bar, double labor) {
  if (!(labor > l_bar)) fail(ErrorKind::kDomain, "labor must exceed the fixed requirement");
  return alpha * labor / (labor - l_bar);
}

double loglog_slope(const std::vector<FixedCostPoint>& points) {
  if (points.size() < 2) fail(ErrorKind::kDegenerate, "slope needs at least two points");
  std::vector<double> x, y;
  for (const auto& p : points) {
    if (!(p.labor > 0.0 && p.output > 0.0)) fail(ErrorKind::kDomain, "logs need positive values");
    x.push_back(std::log(p.labor));
    y.push_back(std::log(p.output));
  }
  const double mx = stats::mean(x);
  const double my = stats::mean(y);
  stats::Sum sxy, sxx;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy.add((x[i] - mx) * (y[i] - my));
    sxx.add((x[i] - mx) * (x[i] - mx));
  }
  if (!(sxx.value() > 0.0)) fail(ErrorKind::kDegenerate, "labor grid has no spread");
  return sxy.value() / sxx.value();
}

DirtyPanel gen_dirty_panel(std::uint64_t seed, std::size_t rows,
                           const panel::CleaningRules& rules) {
  if (rules.trim_by_year || rules.first_year || rules.last_year || rules.rd_missing_as_zero) {
    fail(ErrorKind::kParameter, "planted panel supports pooled trimming without year limits");
  }
  constexpr int kSpell = 10;
  const std::size_t firms = std::max<std::size_t>(rows / kSpell, 60);
  constexpr std::size_t kIndustry = 5, kValues = 7, kUndated = 3, kGaps = 4;
  const std::size_t gap_drop = 2;  // rows before the hole, the shorter side

  auto rng = stream(seed, 0x6469727479);
  const auto& codes = panel::industry_codes();
  DirtyPanel out;
  auto& obs = out.data.observations;
  std::vector<std::size_t> last_row(firms);
  for (std::size_t f = 0; f < firms; ++f) {
    const std::string id = fmt::format("D{:05d}", f);
    const auto code = codes[f % codes.size()];
    for (int t = 0; t < kSpell; ++t) {
      const bool hole = f >= firms - kGaps && t == static_cast<int>(gap_drop);
      if (hole) continue;
      panel::FirmYear o;
      o.firm_id = id;
      o.year = 2000 + t;
      o.industry = code;
      const double sale = std::exp(5.0 + normal(rng));
      o.sale = sale;
      o.cogs = sale / uniform(rng, 1.2, 1.8);
      o.sga = 0.2 * sale;
      o.rd = 0.02 * sale;
      o.capx = 0.05 * sale;
      o.ppegt = sale;
      o.proxy = 0.1 * sale;
      obs.push_back(std::move(o));
    }
    last_row[f] = obs.size() - 1;
  }

  // Each planted fault sits on a distinct firm's final year, so dropping it
  // never opens a gap.
  std::size_t next = 0;
  for (std::size_t i = 0; i < kIndustry; ++i) obs[last_row[next++]].industry.reset();
  for (std::size_t i = 0; i < kValues; ++i) obs[last_row[next++]].cogs = -1.0;

  const std::size_t survivors = obs.size() - kIndustry - kValues;
  const auto rank = [&](double p) {
    const double r = std::ceil(p * static_cast<double>(survivors) - 1e-9);
    return static_cast<std::size_t>(std::clamp(r, 1.0, static_cast<double>(survivors)));
  };
  const std::size_t below = rank(rules.trim_low) - 1;
  const std::size_t above = survivors - rank(rules.trim_high);
  for (std::size_t i = 0; i < below; ++i) {
    auto& o = obs[last_row[next++]];
    o.cogs = *o.sale / uniform(rng, 0.5, 0.9);
  }
  for (std::size_t i = 0; i < above; ++i) {
    auto& o = obs[last_row[next++]];
    o.cogs = *o.sale / uniform(rng, 3.0, 5.0);
  }
  if (next > firms - kGaps) fail(ErrorKind::kParameter, "panel too small for planted faults");

  out.data.provenance.undated_rows = kUndated;
  out.planted.industry = kIndustry;
  out.planted.values = kValues;
  out.planted.trim = below + above;
  out.planted.missing_year = kUndated + kGaps * gap_drop;
  out.planted.rows_in = obs.size() + kUndated;
  out.planted.rows_out = out.planted.rows_in - out.planted.industry - out.planted.values -
                         out.planted.trim - out.planted.missing_year;
  for (int t = 0; t < kSpell; ++t) {
    panel::MacroYear m;
    m.year = 2000 + t;
    m.gdp = 1e6;
    m.total_sales = 1.8e6;
    m.labor_comp = 0.55e6;
    out.data.macro.emplace(m.year, m);
  }
  return out;
}

}  // namespace domar::oracle
