#pragma once
#include <span>
#include <vector>

#include "datamarket/market.hpp"
#include "datamarket/matchmaking.hpp"

namespace datamarket {

struct MarketState {
  std::vector<TraderState> traders;
  int time{0};

  bool operator==(const MarketState&) const = default;
};

struct StepResult {
  MarketState next_state;
  std::vector<double> rewards;
  double system_reward{0.0};
  MatchOutcome outcome;
  // signed (dv, dc) actually applied to each trader; all zero when not cleared
  std::vector<TradeAction> executed;
  bool done{false};
};

// Economic: buyer pays below its reservation, seller receives above its ask.
// Literal: |dc| - |dc_min(dv)| for either side.
double surplus(Volume executed_dv, Currency executed_dc, const IntentionProfile& profile, const MarketConfig& cfg,
               SurplusMode mode);
inline double surplus(Volume executed_dv, Currency executed_dc, const IntentionProfile& profile,
                      const MarketConfig& cfg) {
  return surplus(executed_dv, executed_dc, profile, cfg, cfg.surplus_mode);
}

// Unit price phi = dc/dv (negative for both sides) in currency per volume.
double unit_price(const TradeAction& executed, const MarketConfig& cfg);

// phi_i minus the reference mean over active traders; 0 for an inactive trader.
double fairness_term(std::size_t trader, std::span<const TradeAction> executed, const MarketConfig& cfg);

double reward(double surplus_value, double fairness_value, Volume unexecuted, const MarketConfig& cfg);

double system_reward(std::span<const double> rewards);

bool all_idle(const MarketState& s);
bool is_terminal(const MarketState& s, const MarketConfig& cfg);

// Signed per-trader sums of a set of fills.
std::vector<TradeAction> executed_from_fills(std::span<const Fill> fills, std::span<const IntentionProfile> profiles);

// The trading MDP. Transitions are all-or-nothing: unless matchmaking clears
// every proposal, no trader's holdings move.
class Environment {
public:
  Environment(MarketConfig cfg, std::vector<IntentionProfile> profiles);

  const MarketConfig& config() const noexcept { return cfg_; }
  const std::vector<IntentionProfile>& profiles() const noexcept { return profiles_; }

  // Throws std::invalid_argument on a size mismatch or an infeasible action.
  StepResult step(const MarketState& s, std::span<const TradeAction> actions, Rng& rng) const;
  StepResult step(const MarketState& s, std::span<const TradeAction> actions, const ShuffleFn& shuffle) const;

private:
  StepResult finish(const MarketState& s, MatchOutcome outcome) const;
  void check_actions(const MarketState& s, std::span<const TradeAction> actions) const;

  MarketConfig cfg_;
  std::vector<IntentionProfile> profiles_;
};

} // namespace datamarket
