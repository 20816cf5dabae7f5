#pragma once
#include <vector>

#include "datamarket/environment.hpp"

namespace datamarket {

// A seller's posted price, fixed for the whole run.
struct SubscriptionOffer {
  std::size_t seller_id{0};
  // currency per volume unit, in [eta, (1+delta)*eta]
  double unit_price{1.0};
  Volume bundle{2};

  bool operator==(const SubscriptionOffer&) const = default;
};

// Each active trader proposes a random volume toward its target at the
// standard price eta per unit.
std::vector<TradeAction> uniform_policy(const MarketState& s, const MarketConfig& cfg, Rng& rng);

// Draws one offer per seller in `initial`.
std::vector<SubscriptionOffer> make_subscription_offers(const MarketState& initial, const MarketConfig& cfg,
                                                        Rng& rng);

// Grid payment for `volume` units at a posted unit price.
Currency posted_payment(double unit_price, Volume volume, const MarketConfig& cfg);

// Sellers post bundles at their fixed price; buyers take from the cheapest
// seller that still has volume to sell.
std::vector<TradeAction> subscription_policy(const MarketState& s, const std::vector<SubscriptionOffer>& offers,
                                             const MarketConfig& cfg);

} // namespace datamarket
