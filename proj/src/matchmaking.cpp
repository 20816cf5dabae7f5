#include "datamarket/matchmaking.hpp"

#include <algorithm>
#include <cstdlib>
#include <stdexcept>

namespace datamarket {

bool can_absorb(const TradeAction& maker, const TradeAction& taker, const IntentionProfile& maker_profile,
                const IntentionProfile& taker_profile, const MarketConfig& cfg) {
  if (maker.dv == 0 || taker.dv == 0) return false;
  if ((maker.dv > 0) == (taker.dv > 0)) return false;
  if (std::abs(taker.dv) > std::abs(maker.dv)) return false;
  if (std::abs(taker.dc) > std::abs(maker.dc)) return false;
  return accepts(maker_profile, cfg, -taker.dv, -taker.dc) && accepts(taker_profile, cfg, taker.dv, taker.dc);
}

MatchOutcome match_step(std::span<const TradeAction> actions, std::span<const IntentionProfile> profiles,
                        const MarketConfig& cfg, Rng& rng) {
  return match_step(actions, profiles, cfg, [&rng](std::span<std::size_t> order) {
    std::shuffle(order.begin(), order.end(), rng);
  });
}

MatchOutcome match_step(std::span<const TradeAction> actions, std::span<const IntentionProfile> profiles,
                        const MarketConfig& cfg, const ShuffleFn& shuffle) {
  if (actions.size() != profiles.size()) throw std::invalid_argument("match_step: one profile per action required");

  MatchOutcome out;
  out.residuals.assign(actions.begin(), actions.end());
  auto& res = out.residuals;

  std::vector<std::size_t> unsolved;
  for (std::size_t i = 0; i < res.size(); ++i)
    if (res[i].dv != 0) unsolved.push_back(i);

  std::size_t matched = 1;
  while (!unsolved.empty() && matched != 0) {
    shuffle(unsolved);
    matched = 0;
    for (std::size_t i : unsolved) {
      if (res[i].dv == 0) continue;
      for (std::size_t j : unsolved) {
        if (j == i || res[j].dv == 0) continue;
        if (!can_absorb(res[i], res[j], profiles[i], profiles[j], cfg)) continue;
        out.fills.push_back({i, j, std::abs(res[j].dv), std::abs(res[j].dc)});
        res[i].dv += res[j].dv;
        res[i].dc += res[j].dc;
        res[j] = {};
        ++matched;
        break;
      }
    }
    std::erase_if(unsolved, [&res](std::size_t k) { return res[k].dv == 0; });
  }

  out.cleared = std::all_of(res.begin(), res.end(), [](const TradeAction& a) { return a.dv == 0; });
  return out;
}

Volume unexecuted_volume(const MatchOutcome& outcome, std::size_t trader) {
  return std::abs(outcome.residuals.at(trader).dv);
}

} // namespace datamarket
