#include <gtest/gtest.h>

#include <set>

#include "datamarket/baselines.hpp"

using namespace datamarket;

TEST(UniformPolicy, StandardPriceAndRandomVolume) {
  MarketConfig cfg;
  const MarketState s{{{10, 0, 10}, {0, 3, 0}, {4, 4, 1}}, 0};
  Rng rng(1);
  std::set<Volume> buyer_volumes, seller_volumes;
  for (int k = 0; k < 500; ++k) {
    const auto acts = uniform_policy(s, cfg, rng);
    ASSERT_EQ(acts.size(), 3u);
    EXPECT_GE(acts[0].dv, 1);
    EXPECT_LE(acts[0].dv, cfg.max_volume_per_action);
    EXPECT_EQ(acts[0].dc, -acts[0].dv);
    EXPECT_LE(acts[1].dv, -1);
    EXPECT_GE(acts[1].dv, -3);
    EXPECT_EQ(acts[1].dc, -acts[1].dv);
    EXPECT_TRUE(acts[2].is_zero());
    buyer_volumes.insert(acts[0].dv);
    seller_volumes.insert(acts[1].dv);
  }
  EXPECT_EQ(buyer_volumes, (std::set<Volume>{1, 2, 3}));
  EXPECT_EQ(seller_volumes, (std::set<Volume>{-3, -2, -1}));
}

TEST(UniformPolicy, RespectsBudgetAndFeasibility) {
  MarketConfig cfg;
  cfg.eta = 1.5;
  cfg.uc = 0.5;
  Rng gen(3);
  for (int k = 0; k < 2000; ++k) {
    MarketState s;
    for (int i = 0; i < 3; ++i)
      s.traders.push_back({std::uniform_int_distribution<Volume>(0, 6)(gen),
                           std::uniform_int_distribution<Volume>(0, 6)(gen),
                           std::uniform_int_distribution<Currency>(0, 8)(gen)});
    const auto acts = uniform_policy(s, cfg, gen);
    for (std::size_t i = 0; i < acts.size(); ++i) {
      EXPECT_TRUE(is_feasible(acts[i], s.traders[i], cfg));
      if (acts[i].dv != 0) {
        EXPECT_DOUBLE_EQ(std::abs(to_currency(acts[i].dc, cfg)) / std::abs(to_volume(acts[i].dv, cfg)), cfg.eta);
      }
    }
  }
}

TEST(SubscriptionPolicy, PostedPriceAboveBuyerReservationFails) {
  MarketConfig cfg;
  cfg.uc = 0.1;
  const MarketState s{{{10, 0, 100}, {0, 10, 0}}, 0};
  const std::vector<SubscriptionOffer> offers{{1, 1.2, 2}};
  const auto acts = subscription_policy(s, offers, cfg);
  EXPECT_EQ(acts[0], (TradeAction{2, -24}));
  EXPECT_EQ(acts[1], (TradeAction{-2, 24}));
  const std::vector<IntentionProfile> prof{{0.9, Role::buyer}, {1.1, Role::seller}};
  Rng rng(1);
  const auto out = match_step(acts, prof, cfg, rng);
  EXPECT_TRUE(out.fills.empty());
  EXPECT_FALSE(out.cleared);
}

TEST(SubscriptionPolicy, StandardPostedPriceTrades) {
  MarketConfig cfg;
  cfg.uc = 0.1;
  const MarketState s{{{10, 0, 100}, {0, 10, 0}}, 0};
  const std::vector<SubscriptionOffer> offers{{1, 1.0, 2}};
  const auto acts = subscription_policy(s, offers, cfg);
  const std::vector<IntentionProfile> prof{{1.0, Role::buyer}, {1.0, Role::seller}};
  Rng rng(1);
  const auto out = match_step(acts, prof, cfg, rng);
  ASSERT_EQ(out.fills.size(), 1u);
  EXPECT_EQ(out.fills[0].volume, 2);
  EXPECT_EQ(out.fills[0].payment, 20);
  EXPECT_TRUE(out.cleared);
}

TEST(SubscriptionPolicy, NoSellersLeftMeansNoProposals) {
  MarketConfig cfg;
  const MarketState s{{{10, 4, 6}, {0, 0, 4}}, 0};
  const std::vector<SubscriptionOffer> offers{{1, 1.1, 2}};
  for (const auto& a : subscription_policy(s, offers, cfg)) EXPECT_TRUE(a.is_zero());
}

TEST(SubscriptionPolicy, BuyersTakeTheCheapestOffer) {
  MarketConfig cfg;
  cfg.uc = 0.01;
  const MarketState s{{{10, 0, 1000}, {0, 10, 0}, {0, 10, 0}}, 0};
  const std::vector<SubscriptionOffer> offers{{1, 1.15, 2}, {2, 1.05, 2}};
  const auto acts = subscription_policy(s, offers, cfg);
  EXPECT_EQ(acts[0], (TradeAction{2, -210}));
  EXPECT_EQ(acts[1], (TradeAction{-2, 230}));
  EXPECT_EQ(acts[2], (TradeAction{-2, 210}));
}

TEST(SubscriptionOffers, DrawnOncePerSellerInRange) {
  MarketConfig cfg;
  const MarketState s{{{10, 0, 10}, {0, 10, 0}, {0, 12, 0}}, 0};
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng a = make_stream(seed, "offers"), b = make_stream(seed, "offers");
    const auto oa = make_subscription_offers(s, cfg, a);
    EXPECT_EQ(oa, make_subscription_offers(s, cfg, b));
    ASSERT_EQ(oa.size(), 2u);
    EXPECT_EQ(oa[0].seller_id, 1u);
    EXPECT_EQ(oa[1].seller_id, 2u);
    for (const auto& o : oa) {
      EXPECT_GE(o.unit_price, cfg.eta);
      EXPECT_LE(o.unit_price, (1 + cfg.delta) * cfg.eta);
      EXPECT_EQ(o.bundle, cfg.subscription_bundle);
    }
    // proposals are feasible at every point of an episode
    MarketState cur = s;
    for (Volume sold = 0; sold <= 10; ++sold) {
      cur.traders[0] = {10, sold, 10 - sold};
      cur.traders[1] = {0, 10 - sold, sold};
      const auto acts = subscription_policy(cur, oa, cfg);
      for (std::size_t i = 0; i < acts.size(); ++i) EXPECT_TRUE(is_feasible(acts[i], cur.traders[i], cfg));
    }
  }
}
