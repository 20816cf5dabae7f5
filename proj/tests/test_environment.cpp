#include <gtest/gtest.h>

#include "datamarket/environment.hpp"

using namespace datamarket;

namespace {

const ShuffleFn keep_order = [](std::span<std::size_t>) {};

} // namespace

TEST(Step, ClearedTradeMovesHoldings) {
  MarketConfig cfg;
  const Environment env(cfg, {{1.0, Role::buyer}, {1.0, Role::seller}});
  const MarketState s{{{10, 0, 10}, {0, 10, 0}}, 0};
  const std::vector<TradeAction> acts{{2, -2}, {-2, 2}};
  const auto r = env.step(s, acts, keep_order);
  EXPECT_TRUE(r.outcome.cleared);
  EXPECT_EQ(r.next_state.traders, (std::vector<TraderState>{{10, 2, 8}, {0, 8, 2}}));
  EXPECT_EQ(r.next_state.time, 1);
  EXPECT_EQ(r.executed, acts);
  EXPECT_EQ(r.rewards, (std::vector<double>{0.0, 0.0}));
  EXPECT_FALSE(r.done);
}

TEST(Step, IdleMarketIsVacuouslyCleared) {
  MarketConfig cfg;
  const Environment env(cfg, {{1.0, Role::idle}, {1.0, Role::idle}});
  const MarketState s{{{3, 3, 1}, {2, 2, 0}}, 4};
  const std::vector<TradeAction> acts(2);
  Rng rng(3);
  const auto r = env.step(s, acts, rng);
  EXPECT_TRUE(r.outcome.cleared);
  EXPECT_EQ(r.next_state.traders, s.traders);
  EXPECT_EQ(r.next_state.time, 5);
  EXPECT_EQ(r.system_reward, 0.0);
  EXPECT_TRUE(r.done);
}

TEST(Step, UnclearedStepKeepsHoldingsAndPenalizes) {
  MarketConfig cfg;
  const Environment env(cfg, {{0.9, Role::buyer}, {1.1, Role::seller}});
  const MarketState s{{{10, 0, 9}, {0, 10, 0}}, 7};
  const std::vector<TradeAction> acts{{3, -3}, {-1, 1}};
  // seller's ask for 1 unit is floor(1.1) = 1, but let it try 2 units at price 1
  const std::vector<TradeAction> bad{{3, -3}, {-2, 1}};
  const auto r = env.step(s, bad, keep_order);
  EXPECT_FALSE(r.outcome.cleared);
  EXPECT_EQ(r.next_state.traders, s.traders);
  EXPECT_EQ(r.next_state.time, 8);
  EXPECT_EQ(r.rewards[0], -300.0);
  EXPECT_EQ(r.rewards[1], -200.0);
  EXPECT_EQ(r.system_reward, -500.0);
  for (const auto& e : r.executed) EXPECT_TRUE(e.is_zero());

  // partial fill: seller's 1 unit is absorbed but the buyer's other 2 remain
  const auto partial = env.step(s, acts, keep_order);
  EXPECT_FALSE(partial.outcome.cleared);
  EXPECT_EQ(partial.next_state.traders, s.traders);
  EXPECT_EQ(partial.rewards[0], -200.0);
  EXPECT_EQ(partial.rewards[1], 0.0);
}

TEST(Step, RejectsInfeasibleOrMissingActions) {
  MarketConfig cfg;
  const Environment env(cfg, {{0.9, Role::buyer}, {1.1, Role::seller}});
  const MarketState s{{{10, 0, 9}, {0, 10, 0}}, 0};
  Rng rng(1);
  const std::vector<TradeAction> too_big{{4, -4}, {0, 0}};
  EXPECT_THROW(env.step(s, too_big, rng), std::invalid_argument);
  const std::vector<TradeAction> wrong_way{{0, 0}, {1, -1}};
  EXPECT_THROW(env.step(s, wrong_way, rng), std::invalid_argument);
  const std::vector<TradeAction> one{{0, 0}};
  EXPECT_THROW(env.step(s, one, rng), std::invalid_argument);
}

TEST(Environment, RejectsInvalidConfig) {
  MarketConfig cfg;
  cfg.alpha = 2.0;
  EXPECT_THROW(Environment(cfg, {}), std::invalid_argument);
}

TEST(Surplus, BothModes) {
  MarketConfig cfg;
  const IntentionProfile seller{1.0, Role::seller};
  EXPECT_EQ(surplus(-2, 2, seller, cfg, SurplusMode::economic), 0.0);
  EXPECT_EQ(surplus(-2, 2, seller, cfg, SurplusMode::literal), 0.0);

  cfg.uc = 0.1;
  const IntentionProfile buyer{0.8, Role::buyer};
  EXPECT_NEAR(surplus(2, -15, buyer, cfg, SurplusMode::economic), 0.1, 1e-12);
  EXPECT_NEAR(surplus(2, -15, buyer, cfg, SurplusMode::literal), -0.1, 1e-12);
  EXPECT_EQ(surplus(0, 0, buyer, cfg), 0.0);
}

TEST(FairnessTerm, TraderMeanAndVolumeWeighted) {
  MarketConfig cfg;
  const std::vector<TradeAction> equal{{2, -2}, {-2, 2}};
  EXPECT_EQ(fairness_term(0, equal, cfg), 0.0);
  EXPECT_EQ(fairness_term(1, equal, cfg), 0.0);

  // phi = -1.0 and -0.8
  const std::vector<TradeAction> mixed{{1, -1}, {-5, 4}};
  EXPECT_NEAR(fairness_term(0, mixed, cfg), -0.1, 1e-12);
  EXPECT_NEAR(fairness_term(1, mixed, cfg), 0.1, 1e-12);

  const std::vector<TradeAction> single{{3, -2}, {0, 0}};
  EXPECT_EQ(fairness_term(0, single, cfg), 0.0);
  EXPECT_EQ(fairness_term(1, single, cfg), 0.0);

  cfg.fairness_mean_mode = FairnessMeanMode::volume_weighted;
  EXPECT_NEAR(fairness_term(0, mixed, cfg), -1.0 + 5.0 / 6.0, 1e-12);
  EXPECT_NEAR(fairness_term(1, mixed, cfg), -0.8 + 5.0 / 6.0, 1e-12);
}

TEST(Reward, Terms) {
  MarketConfig cfg;
  EXPECT_EQ(reward(0.0, 0.0, 0, cfg), 0.0);
  EXPECT_EQ(reward(0.0, 0.0, 3, cfg), -300.0);
  EXPECT_EQ(reward(0.1, 0.0, 0, cfg), 0.1);
  EXPECT_EQ(reward(0.0, 0.2, 0, cfg), -0.1);
  const std::vector<double> a{0.1, 0.2}, b{0.0, 0.0}, c{-300.0, -300.0};
  EXPECT_DOUBLE_EQ(system_reward(a), 0.3);
  EXPECT_EQ(system_reward(b), 0.0);
  EXPECT_EQ(system_reward(c), -600.0);
}

TEST(IsTerminal, TargetsOrCap) {
  MarketConfig cfg;
  EXPECT_TRUE(is_terminal({{{10, 10, 0}, {0, 0, 10}}, 0}, cfg));
  EXPECT_FALSE(is_terminal({{{10, 2, 8}, {0, 8, 2}}, 0}, cfg));
  EXPECT_TRUE(is_terminal({{{10, 2, 8}, {0, 8, 2}}, cfg.max_steps_per_episode}, cfg));
  EXPECT_FALSE(all_idle({{{10, 2, 8}, {0, 8, 2}}, cfg.max_steps_per_episode}));
}

TEST(Step, RandomizedTransitionProperties) {
  MarketConfig cfg;
  Rng gen(99);
  for (int trial = 0; trial < 3000; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(2, 4)(gen);
    MarketState s;
    for (std::size_t i = 0; i < n; ++i) {
      const Volume vt = std::uniform_int_distribution<Volume>(0, 5)(gen);
      const Volume v = std::uniform_int_distribution<Volume>(0, 5)(gen);
      s.traders.push_back({vt, v, std::uniform_int_distribution<Currency>(0, 6)(gen)});
    }
    Rng intent(gen());
    const Environment env(cfg, sample_intentions(intent, cfg, s.traders));
    std::vector<TradeAction> acts;
    for (const auto& t : s.traders) {
      const auto options = feasible_actions(t, cfg);
      acts.push_back(options[std::uniform_int_distribution<std::size_t>(0, options.size() - 1)(gen)]);
    }
    Rng rng(gen());
    const auto r = env.step(s, acts, rng);

    double total = 0.0;
    for (double x : r.rewards) total += x;
    EXPECT_EQ(r.system_reward, total);

    Volume v0 = 0, v1 = 0;
    Currency c0 = 0, c1 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      v0 += s.traders[i].v;
      c0 += s.traders[i].c;
      v1 += r.next_state.traders[i].v;
      c1 += r.next_state.traders[i].c;
      EXPECT_GE(r.next_state.traders[i].v, 0);
      EXPECT_GE(r.next_state.traders[i].c, 0);
      // no trader overshoots its target
      const auto& before = s.traders[i];
      const auto& after = r.next_state.traders[i];
      if (before.v <= before.vt) {
        EXPECT_LE(after.v, after.vt);
      }
      if (before.v >= before.vt) {
        EXPECT_GE(after.v, after.vt);
      }
    }
    EXPECT_EQ(v0, v1);
    EXPECT_EQ(c0, c1);
    if (!r.outcome.cleared) {
      EXPECT_EQ(r.next_state.traders, s.traders);
    } else {
      for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(unexecuted_volume(r.outcome, i), 0);
    }
  }
}
