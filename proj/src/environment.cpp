#include "datamarket/environment.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace datamarket {

double surplus(Volume executed_dv, Currency executed_dc, const IntentionProfile& profile, const MarketConfig& cfg,
               SurplusMode mode) {
  if (executed_dv == 0) return 0.0;
  const double paid = std::abs(to_currency(executed_dc, cfg));
  const double reservation = std::abs(to_currency(min_price(profile, cfg, executed_dv), cfg));
  if (mode == SurplusMode::literal || executed_dv < 0) return paid - reservation;
  return reservation - paid;
}

double unit_price(const TradeAction& executed, const MarketConfig& cfg) {
  return to_currency(executed.dc, cfg) / to_volume(executed.dv, cfg);
}

double fairness_term(std::size_t trader, std::span<const TradeAction> executed, const MarketConfig& cfg) {
  if (executed[trader].dv == 0) return 0.0;
  double reference = 0.0;
  if (cfg.fairness_mean_mode == FairnessMeanMode::trader_mean) {
    double sum = 0.0;
    int active = 0;
    for (const auto& e : executed) {
      if (e.dv == 0) continue;
      sum += unit_price(e, cfg);
      ++active;
    }
    reference = sum / active;
  } else {
    double dc_total = 0.0;
    double dv_total = 0.0;
    for (const auto& e : executed) {
      dc_total += std::abs(to_currency(e.dc, cfg));
      dv_total += std::abs(to_volume(e.dv, cfg));
    }
    reference = -dc_total / dv_total;
  }
  return unit_price(executed[trader], cfg) - reference;
}

double reward(double surplus_value, double fairness_value, Volume unexecuted, const MarketConfig& cfg) {
  return surplus_value + cfg.theta * fairness_value + cfg.lambda * std::abs(to_volume(unexecuted, cfg));
}

double system_reward(std::span<const double> rewards) { return std::accumulate(rewards.begin(), rewards.end(), 0.0); }

bool all_idle(const MarketState& s) {
  for (const auto& t : s.traders)
    if (t.v != t.vt) return false;
  return true;
}

bool is_terminal(const MarketState& s, const MarketConfig& cfg) {
  return all_idle(s) || s.time >= cfg.max_steps_per_episode;
}

std::vector<TradeAction> executed_from_fills(std::span<const Fill> fills, std::span<const IntentionProfile> profiles) {
  std::vector<TradeAction> out(profiles.size());
  for (const auto& f : fills) {
    const bool maker_buys = profiles[f.maker_id].role_at_sampling == Role::buyer;
    const std::size_t buyer = maker_buys ? f.maker_id : f.taker_id;
    const std::size_t seller = maker_buys ? f.taker_id : f.maker_id;
    out[buyer].dv += f.volume;
    out[buyer].dc -= f.payment;
    out[seller].dv -= f.volume;
    out[seller].dc += f.payment;
  }
  return out;
}

Environment::Environment(MarketConfig cfg, std::vector<IntentionProfile> profiles)
    : cfg_(std::move(cfg)), profiles_(std::move(profiles)) {
  cfg_.validate();
}

void Environment::check_actions(const MarketState& s, std::span<const TradeAction> actions) const {
  if (actions.size() != s.traders.size() || profiles_.size() != s.traders.size())
    throw std::invalid_argument("step: expected one action and one profile per trader");
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (!is_feasible(actions[i], s.traders[i], cfg_)) {
      throw std::invalid_argument("step: infeasible action (" + std::to_string(actions[i].dv) + ", " +
                                  std::to_string(actions[i].dc) + ") for trader " + std::to_string(i));
    }
  }
}

StepResult Environment::step(const MarketState& s, std::span<const TradeAction> actions, Rng& rng) const {
  check_actions(s, actions);
  return finish(s, match_step(actions, profiles_, cfg_, rng));
}

StepResult Environment::step(const MarketState& s, std::span<const TradeAction> actions,
                             const ShuffleFn& shuffle) const {
  check_actions(s, actions);
  return finish(s, match_step(actions, profiles_, cfg_, shuffle));
}

StepResult Environment::finish(const MarketState& s, MatchOutcome outcome) const {
  StepResult r;
  r.next_state = s;
  r.next_state.time = s.time + 1;

  const std::size_t n = s.traders.size();
  if (outcome.cleared) {
    r.executed = executed_from_fills(outcome.fills, profiles_);
    for (std::size_t i = 0; i < n; ++i) {
      r.next_state.traders[i].v += r.executed[i].dv;
      r.next_state.traders[i].c += r.executed[i].dc;
    }
  } else {
    r.executed.assign(n, TradeAction{});
  }

  r.rewards.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = surplus(r.executed[i].dv, r.executed[i].dc, profiles_[i], cfg_);
    const double f = fairness_term(i, r.executed, cfg_);
    r.rewards[i] = reward(w, f, unexecuted_volume(outcome, i), cfg_);
  }
  r.system_reward = system_reward(r.rewards);
  r.outcome = std::move(outcome);
  r.done = is_terminal(r.next_state, cfg_);
  return r;
}

} // namespace datamarket
