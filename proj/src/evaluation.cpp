#include "datamarket/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace datamarket {

double fill_buyer_surplus(const Fill& f, const IntentionProfile& buyer, const MarketConfig& cfg) {
  const double reservation = -to_currency(min_price(buyer, cfg, f.volume), cfg);
  return reservation - to_currency(f.payment, cfg);
}

double fill_seller_surplus(const Fill& f, const IntentionProfile& seller, const MarketConfig& cfg) {
  const double ask = to_currency(min_price(seller, cfg, -f.volume), cfg);
  return to_currency(f.payment, cfg) - ask;
}

double welfare_increment(std::span<const Fill> fills, std::span<const IntentionProfile> profiles,
                         const MarketConfig& cfg) {
  double w = 0.0;
  for (const auto& f : fills) {
    const bool maker_buys = profiles[f.maker_id].role_at_sampling == Role::buyer;
    const auto& buyer = profiles[maker_buys ? f.maker_id : f.taker_id];
    const auto& seller = profiles[maker_buys ? f.taker_id : f.maker_id];
    w += fill_buyer_surplus(f, buyer, cfg) + fill_seller_surplus(f, seller, cfg);
  }
  return w;
}

StepMetrics compute_step_metrics(int time, std::span<const TradeAction> proposals, const MatchOutcome& outcome,
                                 std::span<const IntentionProfile> profiles, const MarketConfig& cfg) {
  StepMetrics m;
  m.time = time;
  for (std::size_t i = 0; i < proposals.size(); ++i) {
    if (proposals[i].dv == 0) continue;
    ++m.proposals;
    if (outcome.residuals[i].dv == 0) ++m.accomplished;
  }
  if (!outcome.cleared) return m;

  m.executed_fills = static_cast<int>(outcome.fills.size());
  m.welfare = welfare_increment(outcome.fills, profiles, cfg);
  const auto executed = executed_from_fills(outcome.fills, profiles);
  for (const auto& e : executed) {
    if (e.dv == 0) continue;
    if (e.dv < 0) m.traded_volume += to_volume(-e.dv, cfg);
    m.unit_prices.push_back(unit_price(e, cfg));
  }
  return m;
}

double feasibility(const StepMetrics& m) {
  if (m.proposals == 0) return 1.0;
  return static_cast<double>(m.accomplished) / m.proposals;
}

double efficiency(const StepMetrics& m) {
  if (m.traded_volume == 0.0) return 0.0;
  return m.welfare / m.traded_volume;
}

double fairness_metric(std::span<const double> unit_prices) {
  if (unit_prices.size() < 2) return 1.0;
  double mean = 0.0;
  for (double p : unit_prices) mean += p;
  mean /= static_cast<double>(unit_prices.size());
  double var = 0.0;
  for (double p : unit_prices) var += (p - mean) * (p - mean);
  var /= static_cast<double>(unit_prices.size());
  return 1.0 - std::sqrt(var);
}

EpisodeReport make_report(std::string method, std::uint64_t seed, const MarketConfig& cfg,
                          std::vector<TraderState> initial_states, std::vector<StepMetrics> steps, bool success) {
  EpisodeReport r;
  r.method = std::move(method);
  r.seed = seed;
  r.config = cfg;
  r.initial_states = std::move(initial_states);
  r.steps = std::move(steps);
  r.success = success;
  for (const auto& s : r.steps) {
    r.cumulative_welfare += s.welfare;
    if (s.traded()) ++r.trade_count;
  }
  return r;
}

double episode_feasibility(const EpisodeReport& r) {
  StepMetrics pooled;
  for (const auto& s : r.steps) {
    pooled.proposals += s.proposals;
    pooled.accomplished += s.accomplished;
  }
  return feasibility(pooled);
}

double episode_efficiency(const EpisodeReport& r) {
  StepMetrics pooled;
  for (const auto& s : r.steps) {
    pooled.welfare += s.welfare;
    pooled.traded_volume += s.traded_volume;
  }
  return efficiency(pooled);
}

double episode_fairness(const EpisodeReport& r) {
  double sum = 0.0;
  int n = 0;
  for (const auto& s : r.steps) {
    if (!s.traded()) continue;
    sum += fairness_metric(s.unit_prices);
    ++n;
  }
  return n == 0 ? 1.0 : sum / n;
}

ComparisonTable compare_report(std::span<const EpisodeReport> reports) {
  if (reports.empty()) throw std::invalid_argument("compare_report: no reports to compare");
  for (const auto& r : reports) {
    if (r.method.empty()) throw std::invalid_argument("compare_report: report without a method label");
    if (!(r.config == reports.front().config))
      throw std::invalid_argument("compare_report: market configs differ between '" + reports.front().method +
                                  "' and '" + r.method + "'");
  }

  ComparisonTable t;
  std::map<std::string, std::vector<const EpisodeReport*>> groups;
  for (const auto& r : reports) groups[r.method].push_back(&r);

  for (auto& [method, group] : groups) {
    std::sort(group.begin(), group.end(), [](auto* a, auto* b) { return a->seed < b->seed; });
    SummaryRow mean{method, std::nullopt};
    for (const auto* r : group) {
      SummaryRow row{method, r->seed, static_cast<double>(r->trade_count), episode_feasibility(*r),
                     episode_efficiency(*r), episode_fairness(*r), r->cumulative_welfare};
      mean.trades += row.trades;
      mean.phi_f += row.phi_f;
      mean.phi_e += row.phi_e;
      mean.phi_r += row.phi_r;
      mean.sum_w += row.sum_w;
      t.per_seed.push_back(std::move(row));
    }
    const double n = static_cast<double>(group.size());
    mean.trades /= n;
    mean.phi_f /= n;
    mean.phi_e /= n;
    mean.phi_r /= n;
    mean.sum_w /= n;
    t.means.push_back(std::move(mean));
  }
  return t;
}

const SummaryRow* find_mean(const ComparisonTable& t, const std::string& method) {
  for (const auto& row : t.means)
    if (row.method == method) return &row;
  return nullptr;
}

void write_metrics_csv(std::ostream& os, std::span<const EpisodeReport> reports) {
  os << "method,seed,time,M_p,M_a,W,V,phi_f,phi_e,phi_r\n";
  for (const auto& r : reports) {
    for (const auto& s : r.steps) {
      fmt::print(os, "{},{},{},{},{},{},{},{},{},{}\n", r.method, r.seed, s.time, s.proposals, s.accomplished,
                 s.welfare, s.traded_volume, feasibility(s), efficiency(s), fairness_metric(s.unit_prices));
    }
  }
}

void write_summary_csv(std::ostream& os, const ComparisonTable& table) {
  os << "method,seed,Times,phi_f,phi_e,phi_r,sum_W\n";
  auto row = [&os](const SummaryRow& r) {
    fmt::print(os, "{},{},{},{},{},{},{}\n", r.method, r.seed ? fmt::format("{}", *r.seed) : std::string{"mean"},
               r.trades, r.phi_f, r.phi_e, r.phi_r, r.sum_w);
  };
  for (const auto& r : table.per_seed) row(r);
  for (const auto& r : table.means) row(r);
}

} // namespace datamarket
