#pragma once
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "datamarket/market.hpp"

namespace datamarket {

// One executed trade. The maker is the action being resolved, the taker the
// counterparty whose whole proposal is absorbed. Volume and payment are
// unsigned; currency always flows buyer -> seller.
struct Fill {
  std::size_t maker_id{0};
  std::size_t taker_id{0};
  Volume volume{0};
  Currency payment{0};

  bool operator==(const Fill&) const = default;
};

struct MatchOutcome {
  std::vector<Fill> fills;
  std::vector<TradeAction> residuals;
  bool cleared{true};
};

// Permutes the unsolved trader indices at the start of each pass.
using ShuffleFn = std::function<void(std::span<std::size_t>)>;

// True when maker i may absorb taker j's whole proposal: opposite directions,
// j no larger than i in volume and currency, and both traders accept the
// fill terms (maker on (-dv_j, -dc_j), taker on its own proposal).
bool can_absorb(const TradeAction& maker, const TradeAction& taker, const IntentionProfile& maker_profile,
                const IntentionProfile& taker_profile, const MarketConfig& cfg);

// Randomized-order maker/taker clearing. Repeats passes while any pass makes
// progress; an action is solved once its residual volume is zero.
MatchOutcome match_step(std::span<const TradeAction> actions, std::span<const IntentionProfile> profiles,
                        const MarketConfig& cfg, Rng& rng);

MatchOutcome match_step(std::span<const TradeAction> actions, std::span<const IntentionProfile> profiles,
                        const MarketConfig& cfg, const ShuffleFn& shuffle);

Volume unexecuted_volume(const MatchOutcome& outcome, std::size_t trader);

} // namespace datamarket
