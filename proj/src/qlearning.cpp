#include "datamarket/qlearning.hpp"

#include <algorithm>
#include <stdexcept>

namespace datamarket {

namespace {

void put_i64(std::string& out, std::int64_t x) {
  const auto u = static_cast<std::uint64_t>(x);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((u >> (8 * b)) & 0xff));
}

std::int64_t get_i64(const std::string& in, std::size_t pos) {
  std::uint64_t u = 0;
  for (int b = 0; b < 8; ++b) u |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + b])) << (8 * b);
  return static_cast<std::int64_t>(u);
}

} // namespace

std::string encode_state(const MarketState& s) {
  std::string out;
  out.reserve(24 * s.traders.size());
  for (const auto& t : s.traders) {
    put_i64(out, t.vt);
    put_i64(out, t.v);
    put_i64(out, t.c);
  }
  return out;
}

std::string encode_actions(std::span<const TradeAction> actions) {
  std::string out;
  out.reserve(16 * actions.size());
  for (const auto& a : actions) {
    put_i64(out, a.dv);
    put_i64(out, a.dc);
  }
  return out;
}

std::vector<TradeAction> decode_actions(const std::string& key) {
  if (key.size() % 16 != 0) throw std::invalid_argument("decode_actions: key length is not a multiple of 16");
  std::vector<TradeAction> out(key.size() / 16);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = {get_i64(key, 16 * i), get_i64(key, 16 * i + 8)};
  return out;
}

// ---------------------------------------------------------------------------

JointActionSpace::JointActionSpace(const MarketState& s, const MarketConfig& cfg) {
  per_trader_.reserve(s.traders.size());
  for (const auto& t : s.traders) {
    per_trader_.push_back(feasible_actions(t, cfg));
    size_ *= per_trader_.back().size();
  }
}

std::vector<TradeAction> JointActionSpace::at(std::size_t index) const {
  if (index >= size_) throw std::out_of_range("JointActionSpace::at");
  std::vector<TradeAction> out(per_trader_.size());
  for (std::size_t k = per_trader_.size(); k-- > 0;) {
    const auto& options = per_trader_[k];
    out[k] = options[index % options.size()];
    index /= options.size();
  }
  return out;
}

bool JointActionSpace::contains(std::span<const TradeAction> actions) const {
  if (actions.size() != per_trader_.size()) return false;
  for (std::size_t k = 0; k < actions.size(); ++k) {
    if (std::find(per_trader_[k].begin(), per_trader_[k].end(), actions[k]) == per_trader_[k].end()) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

double QTable::value(const std::string& state_key, const std::string& action_key) const {
  const auto row = states_.find(state_key);
  if (row == states_.end()) return 0.0;
  const auto it = row->second.values.find(action_key);
  return it == row->second.values.end() ? 0.0 : it->second;
}

double QTable::value(const MarketState& s, std::span<const TradeAction> actions) const {
  return value(encode_state(s), encode_actions(actions));
}

void QTable::set(const std::string& state_key, const std::string& action_key, double v) {
  auto& row = states_[state_key];
  auto [it, inserted] = row.values.try_emplace(action_key, v);
  if (inserted) ++entries_;
  const double old = inserted ? v : it->second;
  it->second = v;

  if (row.values.size() == 1) {
    row.max = v;
    row.dirty = false;
  } else if (!row.dirty) {
    if (v >= row.max) {
      row.max = v;
    } else if (!inserted && old == row.max) {
      row.dirty = true;
    }
  }
}

std::optional<double> QTable::stored_max(const std::string& state_key) const {
  const auto it = states_.find(state_key);
  if (it == states_.end() || it->second.values.empty()) return std::nullopt;
  const auto& row = it->second;
  if (row.dirty) {
    row.max = std::max_element(row.values.begin(), row.values.end(),
                               [](const auto& a, const auto& b) { return a.second < b.second; })
                  ->second;
    row.dirty = false;
  }
  return row.max;
}

std::size_t QTable::stored_count(const std::string& state_key) const {
  const auto it = states_.find(state_key);
  return it == states_.end() ? 0 : it->second.values.size();
}

std::vector<QTable::Entry> QTable::sorted_entries() const {
  std::vector<Entry> out;
  out.reserve(entries_);
  for (const auto& [skey, row] : states_)
    for (const auto& [akey, v] : row.values) out.push_back({skey, akey, v});
  std::sort(out.begin(), out.end(), [](const Entry& a, const Entry& b) {
    return a.state_key != b.state_key ? a.state_key < b.state_key : a.action_key < b.action_key;
  });
  return out;
}

bool QTable::operator==(const QTable& other) const {
  if (entries_ != other.entries_) return false;
  for (const auto& [skey, row] : states_) {
    for (const auto& [akey, v] : row.values) {
      const auto orow = other.states_.find(skey);
      if (orow == other.states_.end()) return false;
      const auto it = orow->second.values.find(akey);
      if (it == orow->second.values.end() || it->second != v) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------

namespace {

double max_next_value(const QTable& table, const std::string& next_key, std::size_t feasible_count, bool terminal) {
  if (terminal) return 0.0;
  const auto stored = table.stored_max(next_key);
  if (!stored) return 0.0;
  if (table.stored_count(next_key) < feasible_count) return std::max(0.0, *stored);
  return *stored;
}

double apply_update(QTable& table, const std::string& skey, const std::string& akey, double reward,
                    double next_max, const MarketConfig& cfg) {
  const double q = table.value(skey, akey);
  const double updated = q + cfg.alpha * (reward + cfg.gamma * next_max - q);
  table.set(skey, akey, updated);
  return updated;
}

} // namespace

double max_next_value(const QTable& table, const MarketState& next, const JointActionSpace& feasible_next) {
  return max_next_value(table, encode_state(next), feasible_next.size(), all_idle(next));
}

double q_update(QTable& table, const MarketState& s, std::span<const TradeAction> actions, double reward,
                const MarketState& next, const JointActionSpace& feasible_next, const MarketConfig& cfg) {
  return apply_update(table, encode_state(s), encode_actions(actions), reward,
                      max_next_value(table, next, feasible_next), cfg);
}

std::vector<TradeAction> best_joint_action(const QTable& table, const MarketState& s,
                                           const JointActionSpace& feasible, Rng& tie_rng) {
  if (feasible.size() == 0) throw std::invalid_argument("best_joint_action: empty feasible set");
  const std::string skey = encode_state(s);
  std::vector<std::size_t> ties;
  double best = 0.0;
  for (std::size_t idx = 0; idx < feasible.size(); ++idx) {
    const double q = table.value(skey, encode_actions(feasible.at(idx)));
    if (ties.empty() || q > best) {
      best = q;
      ties.assign(1, idx);
    } else if (q == best) {
      ties.push_back(idx);
    }
  }
  const std::size_t pick = std::uniform_int_distribution<std::size_t>(0, ties.size() - 1)(tie_rng);
  return feasible.at(ties[pick]);
}

// ---------------------------------------------------------------------------

HistoryDataset generate_history(const Environment& env, const MarketState& start, Rng& policy_rng, Rng& match_rng,
                                int episodes, const HistoryOptions& opts) {
  if (episodes <= 0) throw std::invalid_argument("generate_history: episodes must be positive");
  HistoryDataset data;
  data.episodes = episodes;
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  for (int ep = 0; ep < episodes; ++ep) {
    MarketState s = start;
    while (!is_terminal(s, env.config())) {
      const JointActionSpace space(s, env.config());
      std::vector<TradeAction> actions;
      if (opts.guide != nullptr && u01(policy_rng) < opts.epsilon) {
        actions = best_joint_action(*opts.guide, s, space, policy_rng);
      } else {
        actions.reserve(space.per_trader().size());
        for (const auto& options : space.per_trader())
          actions.push_back(options[std::uniform_int_distribution<std::size_t>(0, options.size() - 1)(policy_rng)]);
      }
      StepResult r = env.step(s, actions, match_rng);
      data.records.push_back({s, std::move(actions), r.system_reward, r.next_state, r.outcome.cleared});
      s = std::move(r.next_state);
    }
  }
  return data;
}

QTable pretrain(QTable table, const HistoryDataset& dataset, const MarketConfig& cfg, Rng& rng) {
  if (dataset.records.empty()) throw std::invalid_argument("pretrain: empty history dataset");
  if (cfg.xi == 0) return table;

  struct Prepared {
    std::string state_key;
    std::string action_key;
    std::string next_key;
    std::size_t next_feasible{0};
    bool next_terminal{false};
    double reward{0.0};
  };
  std::unordered_map<std::string, std::size_t> feasible_cache;
  std::vector<Prepared> prepared;
  prepared.reserve(dataset.records.size());
  for (const auto& rec : dataset.records) {
    Prepared p;
    p.state_key = encode_state(rec.state);
    p.action_key = encode_actions(rec.actions);
    p.next_key = encode_state(rec.next_state);
    p.next_terminal = all_idle(rec.next_state);
    p.reward = rec.reward;
    auto [it, fresh] = feasible_cache.try_emplace(p.next_key, 0);
    if (fresh) {
      std::size_t n = 1;
      for (const auto& t : rec.next_state.traders) n *= feasible_action_count(t, cfg);
      it->second = n;
    }
    p.next_feasible = it->second;
    prepared.push_back(std::move(p));
  }

  std::uniform_int_distribution<std::size_t> pick(0, prepared.size() - 1);
  for (std::int64_t it = 0; it < cfg.xi; ++it) {
    const auto& p = prepared[pick(rng)];
    const double next_max = max_next_value(table, p.next_key, p.next_feasible, p.next_terminal);
    apply_update(table, p.state_key, p.action_key, p.reward, next_max, cfg);
  }
  return table;
}

FinetuneResult finetune(QTable table, const MarketState& start, const Environment& env, Rng& tie_rng,
                        Rng& match_rng) {
  FinetuneResult out;
  MarketState s = start;
  while (!is_terminal(s, env.config())) {
    const JointActionSpace space(s, env.config());
    std::vector<TradeAction> actions = best_joint_action(table, s, space, tie_rng);
    StepResult r = env.step(s, actions, match_rng);
    const JointActionSpace next_space(r.next_state, env.config());
    q_update(table, s, actions, r.system_reward, r.next_state, next_space, env.config());
    MarketState next = r.next_state;
    out.trajectory.push_back({std::move(s), std::move(actions), std::move(r)});
    s = std::move(next);
  }
  out.success = all_idle(s);
  out.table = std::move(table);
  return out;
}

} // namespace datamarket
