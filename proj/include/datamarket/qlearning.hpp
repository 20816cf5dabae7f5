#pragma once
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "datamarket/environment.hpp"
#include "datamarket/market.hpp"

namespace datamarket {

// Canonical byte keys: fixed-width little-endian int64 fields in trader
// order. State keys carry (vt, v, c) per trader and ignore time.
std::string encode_state(const MarketState& s);
std::string encode_actions(std::span<const TradeAction> actions);
std::vector<TradeAction> decode_actions(const std::string& key);

// Cartesian product of the per-trader feasible sets, indexed in mixed radix
// with trader 0 most significant (lexicographic order).
class JointActionSpace {
public:
  JointActionSpace(const MarketState& s, const MarketConfig& cfg);

  std::size_t size() const noexcept { return size_; }
  std::vector<TradeAction> at(std::size_t index) const;
  bool contains(std::span<const TradeAction> actions) const;
  const std::vector<std::vector<TradeAction>>& per_trader() const noexcept { return per_trader_; }

private:
  std::vector<std::vector<TradeAction>> per_trader_;
  std::size_t size_{1};
};

// Sparse action-value table. Absent entries read as exactly 0.
// Entries stored under a state are expected to be feasible joint actions of
// that state; max queries rely on it.
class QTable {
public:
  double value(const std::string& state_key, const std::string& action_key) const;
  double value(const MarketState& s, std::span<const TradeAction> actions) const;
  void set(const std::string& state_key, const std::string& action_key, double v);

  std::optional<double> stored_max(const std::string& state_key) const;
  std::size_t stored_count(const std::string& state_key) const;

  std::size_t size() const noexcept { return entries_; }
  std::size_t state_count() const noexcept { return states_.size(); }

  struct Entry {
    std::string state_key;
    std::string action_key;
    double value{0.0};
  };
  // Sorted by (state key, action key) so serialization is deterministic.
  std::vector<Entry> sorted_entries() const;

  bool operator==(const QTable& other) const;

private:
  struct StateRow {
    std::unordered_map<std::string, double> values;
    // cached max over values, recomputed lazily after the max entry drops
    mutable double max{0.0};
    mutable bool dirty{false};
  };
  std::unordered_map<std::string, StateRow> states_;
  std::size_t entries_{0};
};

// max over feasible A' of Q(S', A'); 0 when S' has every trader at target.
double max_next_value(const QTable& table, const MarketState& next, const JointActionSpace& feasible_next);

// Q(S,A) += alpha * (R + gamma * max Q(S',.) - Q(S,A)); returns the new value.
double q_update(QTable& table, const MarketState& s, std::span<const TradeAction> actions, double reward,
                const MarketState& next, const JointActionSpace& feasible_next, const MarketConfig& cfg);

// argmax_A Q(S, A) over the feasible set, ties broken uniformly via tie_rng.
std::vector<TradeAction> best_joint_action(const QTable& table, const MarketState& s,
                                           const JointActionSpace& feasible, Rng& tie_rng);

struct TransitionRecord {
  MarketState state;
  std::vector<TradeAction> actions;
  double reward{0.0};
  MarketState next_state;
  bool cleared{false};
};

struct HistoryDataset {
  std::vector<TransitionRecord> records;
  std::uint64_t seed{0};
  int episodes{0};
};

struct HistoryOptions {
  // Probability of acting greedily w.r.t. `guide` instead of uniformly at
  // random. Ignored without a guide table.
  double epsilon{0.0};
  const QTable* guide{nullptr};
};

// Behaviour-policy rollouts from `start`, recording every transition.
HistoryDataset generate_history(const Environment& env, const MarketState& start, Rng& policy_rng, Rng& match_rng,
                                int episodes, const HistoryOptions& opts = {});

// xi iterations of uniformly sampled replay updates. Throws
// std::invalid_argument on an empty dataset.
QTable pretrain(QTable table, const HistoryDataset& dataset, const MarketConfig& cfg, Rng& rng);

struct TrajectoryStep {
  MarketState state;
  std::vector<TradeAction> actions;
  StepResult result;
};

struct FinetuneResult {
  std::vector<TrajectoryStep> trajectory;
  // false when the step cap ended the episode before every trader reached target
  bool success{false};
  QTable table;
};

// Greedy execution from `start` with an online update after every step.
FinetuneResult finetune(QTable table, const MarketState& start, const Environment& env, Rng& tie_rng,
                        Rng& match_rng);

} // namespace datamarket
