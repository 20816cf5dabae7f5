#include "datamarket/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace datamarket {

namespace {

// Largest volume <= cap whose payment fits within the buyer's currency.
Volume affordable_volume(Currency budget, Volume cap, double unit_price, const MarketConfig& cfg) {
  Volume n = 0;
  while (n < cap && posted_payment(unit_price, n + 1, cfg) <= budget) ++n;
  return n;
}

} // namespace

Currency posted_payment(double unit_price, Volume volume, const MarketConfig& cfg) {
  return static_cast<Currency>(std::llround(unit_price * to_volume(volume, cfg) / cfg.uc));
}

std::vector<TradeAction> uniform_policy(const MarketState& s, const MarketConfig& cfg, Rng& rng) {
  std::vector<TradeAction> out(s.traders.size());
  for (std::size_t i = 0; i < s.traders.size(); ++i) {
    const auto& t = s.traders[i];
    Volume top = 0;
    switch (role_of(t)) {
      case Role::idle:
        continue;
      case Role::buyer:
        top = affordable_volume(t.c, std::min(t.vt - t.v, cfg.max_volume_per_action), cfg.eta, cfg);
        break;
      case Role::seller:
        top = std::min(t.v - t.vt, cfg.max_volume_per_action);
        break;
    }
    if (top == 0) continue;
    const Volume n = std::uniform_int_distribution<Volume>(1, top)(rng);
    const Currency pay = posted_payment(cfg.eta, n, cfg);
    out[i] = role_of(t) == Role::buyer ? TradeAction{n, -pay} : TradeAction{-n, pay};
  }
  return out;
}

std::vector<SubscriptionOffer> make_subscription_offers(const MarketState& initial, const MarketConfig& cfg,
                                                        Rng& rng) {
  std::vector<SubscriptionOffer> offers;
  std::uniform_real_distribution<double> price(cfg.eta, (1.0 + cfg.delta) * cfg.eta);
  for (std::size_t i = 0; i < initial.traders.size(); ++i) {
    if (role_of(initial.traders[i]) != Role::seller) continue;
    offers.push_back({i, price(rng), cfg.subscription_bundle});
  }
  return offers;
}

std::vector<TradeAction> subscription_policy(const MarketState& s, const std::vector<SubscriptionOffer>& offers,
                                             const MarketConfig& cfg) {
  std::vector<TradeAction> out(s.traders.size());

  std::optional<SubscriptionOffer> cheapest;
  for (const auto& o : offers) {
    const auto& seller = s.traders[o.seller_id];
    if (role_of(seller) != Role::seller) continue;
    const Volume n = std::min({o.bundle, seller.v - seller.vt, cfg.max_volume_per_action});
    out[o.seller_id] = {-n, posted_payment(o.unit_price, n, cfg)};
    if (!cheapest || o.unit_price < cheapest->unit_price) cheapest = o;
  }
  if (!cheapest) return out;

  for (std::size_t i = 0; i < s.traders.size(); ++i) {
    const auto& t = s.traders[i];
    if (role_of(t) != Role::buyer) continue;
    const Volume cap = std::min({cheapest->bundle, t.vt - t.v, cfg.max_volume_per_action});
    const Volume n = affordable_volume(t.c, cap, cheapest->unit_price, cfg);
    if (n > 0) out[i] = {n, -posted_payment(cheapest->unit_price, n, cfg)};
  }
  return out;
}

} // namespace datamarket
