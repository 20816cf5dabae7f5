#pragma once
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "datamarket/baselines.hpp"
#include "datamarket/evaluation.hpp"
#include "datamarket/qlearning.hpp"

namespace datamarket {

enum class Method { swdpm, uniform, subscription };

std::string_view to_string(Method m) noexcept;
// Throws std::invalid_argument for an unknown name.
Method parse_method(std::string_view name);

// Candidate initial states the harness draws from when no explicit trader
// list is given, as [vt, v, c] in real units.
std::vector<TraderState> default_trader_pool();

struct ExperimentSpec {
  MarketConfig market;
  // Explicit initial states; when empty, trader_count states are drawn from
  // the pool per seed.
  std::vector<TraderState> traders;
  std::vector<TraderState> pool{default_trader_pool()};
  int trader_count{2};
  std::vector<Method> methods{Method::swdpm, Method::uniform, Method::subscription};
  std::vector<std::uint64_t> seeds;
  int history_episodes{100};
  std::filesystem::path output_dir{"out"};

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
};

// Parses the JSON spec format and validates it. Unspecified market fields
// keep their defaults. Errors name the offending field.
ExperimentSpec parse_spec(std::string_view json_text);
// Adds "cannot read" for I/O failures on top of parse_spec's errors.
ExperimentSpec load_spec(const std::filesystem::path& path);

// The resolved spec as stored in run.json. Leaves out output_dir so the
// snapshot does not depend on where the run was written.
std::string spec_snapshot_json(const ExperimentSpec& spec, std::span<const TraderState> resolved_traders);

std::vector<TraderState> resolve_initial_states(const ExperimentSpec& spec, std::uint64_t seed);
std::vector<IntentionProfile> draw_intentions(const ExperimentSpec& spec, std::uint64_t seed,
                                              std::span<const TraderState> initial);

// One environment step as it appears in the trade log.
struct LoggedStep {
  int time{0};
  std::vector<TradeAction> proposals;
  MatchOutcome outcome;
};

struct RunResult {
  Method method{Method::swdpm};
  std::uint64_t seed{0};
  std::vector<TraderState> initial_states;
  std::vector<IntentionProfile> profiles;
  std::vector<LoggedStep> log;
  EpisodeReport report;
  // SWDPM only: the table after fine-tuning
  std::optional<QTable> table;
  std::size_t history_records{0};
  // subscription only
  std::vector<SubscriptionOffer> offers;
};

struct TrainResult {
  QTable table;
  std::size_t history_records{0};
};

// History generation plus pre-training for one seed.
TrainResult train_table(const ExperimentSpec& spec, std::uint64_t seed);

// Runs one method to termination. For SWDPM, `pretrained` skips training.
RunResult run_method(const ExperimentSpec& spec, Method method, std::uint64_t seed,
                     const QTable* pretrained = nullptr);

std::filesystem::path run_directory(const std::filesystem::path& out, Method method, std::uint64_t seed);

// Writes run.json, intentions.csv, trade_log.csv, metrics.csv, summary.csv
// and, for SWDPM, qtable.bin into `dir`.
void write_run_artifacts(const ExperimentSpec& spec, const RunResult& run, const std::filesystem::path& dir);

// Every (method, seed) run, persisted under spec.output_dir, followed by
// comparison.csv and the plot series. Returns the reports in run order.
std::vector<EpisodeReport> run_experiment(const ExperimentSpec& spec);

// Per-trade series for the four metric panels: plot_feasibility.csv,
// plot_efficiency.csv, plot_fairness.csv, plot_welfare.csv.
void emit_plot_data(std::span<const EpisodeReport> reports, const std::filesystem::path& dir);

void write_trade_log(std::ostream& os, std::span<const LoggedStep> log);
// Throws std::runtime_error on malformed rows.
std::vector<LoggedStep> read_trade_log(std::istream& is, std::size_t trader_count);

// Rebuilds the episode report of a run directory from run.json,
// intentions.csv and trade_log.csv alone.
EpisodeReport recompute_metrics(const std::filesystem::path& run_dir);

} // namespace datamarket
