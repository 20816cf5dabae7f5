#pragma once
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "datamarket/environment.hpp"

namespace datamarket {

struct StepMetrics {
  int time{0};
  // M_p: nonzero proposals; M_a: those left with zero residual volume
  int proposals{0};
  int accomplished{0};
  // W: economic surplus of executed fills, both sides
  double welfare{0.0};
  // V: volume sold (seller side of executed fills)
  double traded_volume{0.0};
  // phi_i = dc_i / dv_i over traders with executed dv != 0
  std::vector<double> unit_prices;
  int executed_fills{0};

  bool traded() const noexcept { return executed_fills > 0; }
  bool operator==(const StepMetrics&) const = default;
};

double fill_buyer_surplus(const Fill& f, const IntentionProfile& buyer, const MarketConfig& cfg);
double fill_seller_surplus(const Fill& f, const IntentionProfile& seller, const MarketConfig& cfg);

// Sum over fill participants of economic surplus. Always economic, whatever
// the reward's surplus mode, so values compare across methods.
double welfare_increment(std::span<const Fill> fills, std::span<const IntentionProfile> profiles,
                         const MarketConfig& cfg);

StepMetrics compute_step_metrics(int time, std::span<const TradeAction> proposals, const MatchOutcome& outcome,
                                 std::span<const IntentionProfile> profiles, const MarketConfig& cfg);

// Phi_f = M_a / M_p, 1 when nothing was proposed.
double feasibility(const StepMetrics& m);
// Phi_e = W / V, 0 when nothing was sold.
double efficiency(const StepMetrics& m);
// Phi_r = 1 - population std-dev of the unit prices; 1 for fewer than two.
double fairness_metric(std::span<const double> unit_prices);

struct EpisodeReport {
  std::string method;
  std::uint64_t seed{0};
  MarketConfig config;
  std::vector<TraderState> initial_states;
  std::vector<StepMetrics> steps;
  double cumulative_welfare{0.0};
  int trade_count{0};
  bool success{false};
};

EpisodeReport make_report(std::string method, std::uint64_t seed, const MarketConfig& cfg,
                          std::vector<TraderState> initial_states, std::vector<StepMetrics> steps, bool success);

// Episode aggregates: pooled M_a/M_p, pooled W/V, and mean Phi_r over steps
// that executed at least one fill.
double episode_feasibility(const EpisodeReport& r);
double episode_efficiency(const EpisodeReport& r);
double episode_fairness(const EpisodeReport& r);

struct SummaryRow {
  std::string method;
  std::optional<std::uint64_t> seed;  // empty for the per-method mean
  double trades{0.0};
  double phi_f{0.0};
  double phi_e{0.0};
  double phi_r{0.0};
  double sum_w{0.0};
};

struct ComparisonTable {
  std::vector<SummaryRow> per_seed;  // sorted by (method, seed)
  std::vector<SummaryRow> means;     // sorted by method
};

// Throws std::invalid_argument on an empty input or differing configs.
ComparisonTable compare_report(std::span<const EpisodeReport> reports);

const SummaryRow* find_mean(const ComparisonTable& t, const std::string& method);

void write_metrics_csv(std::ostream& os, std::span<const EpisodeReport> reports);
void write_summary_csv(std::ostream& os, const ComparisonTable& table);

} // namespace datamarket
