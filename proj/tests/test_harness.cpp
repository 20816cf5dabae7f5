#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "datamarket/harness.hpp"
#include "datamarket/qtable_file.hpp"

using namespace datamarket;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("datamarket_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string error_of(std::string_view json_text) {
  try {
    parse_spec(json_text);
  } catch (const std::invalid_argument& e) {
    return e.what();
  }
  return "";
}

ExperimentSpec small_spec(const fs::path& out) {
  ExperimentSpec spec = parse_spec(R"({"traders": [[4,0,4],[0,4,0]], "seeds": [1,2], "history_episodes": 20,
                                      "market": {"xi": 20000}})");
  spec.output_dir = out;
  return spec;
}

} // namespace

TEST(Spec, MinimalSpecTakesDefaults) {
  const auto spec = parse_spec(R"({"seeds": [3]})");
  const MarketConfig d;
  EXPECT_EQ(spec.market, d);
  EXPECT_EQ(spec.market.eta, 1.0);
  EXPECT_EQ(spec.market.delta, 0.2);
  EXPECT_EQ(spec.market.gamma, 0.995);
  EXPECT_EQ(spec.market.alpha, 0.1);
  EXPECT_EQ(spec.market.theta, -0.5);
  EXPECT_EQ(spec.market.lambda, -100.0);
  EXPECT_EQ(spec.market.xi, 1'000'000);
  EXPECT_EQ(spec.seeds, (std::vector<std::uint64_t>{3}));
  EXPECT_EQ(spec.methods.size(), 3u);
  EXPECT_TRUE(spec.traders.empty());
  EXPECT_EQ(spec.pool.size(), 5u);
}

TEST(Spec, ErrorsNameTheField) {
  EXPECT_NE(error_of(R"({"seeds": [1], "market": {"delta": 1.5}})").find("market.delta"), std::string::npos);
  EXPECT_NE(error_of(R"({"seeds": []})").find("seeds"), std::string::npos);
  EXPECT_NE(error_of(R"({})").find("seeds"), std::string::npos);
  EXPECT_NE(error_of(R"({"seeds": [1], "traders": [[1,0,1]]})").find("traders"), std::string::npos);
  EXPECT_NE(error_of(R"({"seeds": [1], "methods": ["swdpm", "auction"]})").find("methods[1]"), std::string::npos);
  EXPECT_NE(error_of(R"({"seeds": [1], "sedes": 2})").find("sedes"), std::string::npos);
  EXPECT_NE(error_of(R"({"seeds": [1], "market": {"gamma": "high"}})").find("market.gamma"), std::string::npos);
  EXPECT_NE(error_of(R"({"seeds": [1], "traders": [[1,0,1],[0,1.5,0]]})").find("traders[1].v"), std::string::npos);
  EXPECT_NE(error_of("{not json").find("parse error"), std::string::npos);
  EXPECT_THROW(load_spec("/nonexistent/spec.json"), std::runtime_error);
}

TEST(Spec, PoolDrawIsDeterministicAndTradeable) {
  const auto spec = parse_spec(R"({"seeds": [1], "trader_count": 4})");
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto a = resolve_initial_states(spec, seed);
    EXPECT_EQ(a, resolve_initial_states(spec, seed));
    ASSERT_EQ(a.size(), 4u);
    bool buyer = false, seller = false;
    for (const auto& t : a) {
      buyer |= role_of(t) == Role::buyer;
      seller |= role_of(t) == Role::seller;
    }
    EXPECT_TRUE(buyer && seller);
  }
}

TEST(QTableFile, RoundTripIsBitExact) {
  const auto dir = scratch("qtable");
  QTable t;
  const MarketState s{{{10, 0, 9}, {0, 10, 0}}, 0};
  const JointActionSpace space(s, MarketConfig{});
  for (std::size_t i = 0; i < space.size(); i += 7)
    t.set(encode_state(s), encode_actions(space.at(i)), -1.0 / static_cast<double>(i + 3));
  t.set(encode_state(s), encode_actions(space.at(1)), -0.0);
  const QTableHeader h{1.0, 0.1, 2};
  save_qtable(t, h, dir / "t.bin");
  QTableHeader back;
  const QTable u = load_qtable(dir / "t.bin", &back);
  EXPECT_EQ(back, h);
  EXPECT_EQ(u, t);
  for (const auto& e : t.sorted_entries())
    EXPECT_EQ(std::bit_cast<std::uint64_t>(u.value(e.state_key, e.action_key)), std::bit_cast<std::uint64_t>(e.value));

  save_qtable(u, h, dir / "u.bin");
  EXPECT_EQ(slurp(dir / "t.bin"), slurp(dir / "u.bin"));

  save_qtable(QTable{}, h, dir / "empty.bin");
  EXPECT_EQ(load_qtable(dir / "empty.bin").size(), 0u);
}

TEST(QTableFile, CorruptFilesAreRejected) {
  const auto dir = scratch("qtable_bad");
  QTable t;
  t.set(std::string(48, 'a'), std::string(32, 'b'), 1.5);
  save_qtable(t, {1.0, 1.0, 2}, dir / "t.bin");
  const std::string bytes = slurp(dir / "t.bin");

  std::ofstream(dir / "trunc.bin", std::ios::binary) << bytes.substr(0, bytes.size() - 3);
  EXPECT_THROW(load_qtable(dir / "trunc.bin"), std::runtime_error);

  std::string v2 = bytes;
  v2[4] = 2;
  std::ofstream(dir / "v2.bin", std::ios::binary) << v2;
  try {
    load_qtable(dir / "v2.bin");
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
  }

  std::string magic = bytes;
  magic[0] = 'X';
  std::ofstream(dir / "magic.bin", std::ios::binary) << magic;
  EXPECT_THROW(load_qtable(dir / "magic.bin"), std::runtime_error);

  std::ofstream(dir / "header.bin", std::ios::binary) << bytes.substr(0, 10);
  EXPECT_THROW(load_qtable(dir / "header.bin"), std::runtime_error);
  EXPECT_THROW(load_qtable(dir / "missing.bin"), std::runtime_error);
}

TEST(TradeLog, RoundTrip) {
  std::vector<LoggedStep> log;
  log.push_back({0, {{2, -2}, {-2, 2}}, {{{0, 1, 2, 2}}, {{0, 0}, {0, 0}}, true}});
  log.push_back({1, {{3, -3}, {-1, 1}}, {{{0, 1, 1, 1}}, {{2, -2}, {0, 0}}, false}});
  log.push_back({2, {{0, 0}, {0, 0}}, {{}, {{0, 0}, {0, 0}}, true}});
  std::stringstream ss;
  write_trade_log(ss, log);
  const auto back = read_trade_log(ss, 2);
  ASSERT_EQ(back.size(), log.size());
  for (std::size_t i = 0; i < log.size(); ++i) {
    EXPECT_EQ(back[i].time, log[i].time);
    EXPECT_EQ(back[i].proposals, log[i].proposals);
    EXPECT_EQ(back[i].outcome.fills, log[i].outcome.fills);
    EXPECT_EQ(back[i].outcome.residuals, log[i].outcome.residuals);
    EXPECT_EQ(back[i].outcome.cleared, log[i].outcome.cleared);
  }
  std::stringstream bad("time,kind\n");
  EXPECT_THROW(read_trade_log(bad, 2), std::runtime_error);
}

TEST(Experiment, ByteIdenticalAcrossRunsAndRecomputable) {
  const auto a = scratch("exp_a"), b = scratch("exp_b");
  auto spec = small_spec(a);
  const auto reports = run_experiment(spec);
  EXPECT_EQ(reports.size(), 6u);
  spec.output_dir = b;
  run_experiment(spec);

  std::size_t files = 0;
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    ++files;
    const auto rel = fs::relative(entry.path(), a);
    EXPECT_EQ(slurp(entry.path()), slurp(b / rel)) << rel;
  }
  EXPECT_EQ(files, 3u * 2u * 5u + 2u + 5u);

  for (Method m : spec.methods) {
    for (std::uint64_t seed : spec.seeds) {
      const auto dir = run_directory(a, m, seed);
      for (const char* f : {"run.json", "intentions.csv", "trade_log.csv", "metrics.csv", "summary.csv"})
        EXPECT_TRUE(fs::exists(dir / f)) << dir / f;
      EXPECT_EQ(fs::exists(dir / "qtable.bin"), m == Method::swdpm);

      const EpisodeReport again = recompute_metrics(dir);
      std::ostringstream os;
      write_metrics_csv(os, std::span<const EpisodeReport>(&again, 1));
      EXPECT_EQ(os.str(), slurp(dir / "metrics.csv"));
    }
  }
}

TEST(Experiment, SwdpmReachesTargetsOnSmallMarket) {
  const auto dir = scratch("exp_small");
  const auto spec = small_spec(dir);
  const RunResult r = run_method(spec, Method::swdpm, 1);
  EXPECT_TRUE(r.report.success);
  EXPECT_GT(r.history_records, 0u);
  ASSERT_TRUE(r.table.has_value());
  EXPECT_GT(r.table->size(), 0u);
}

TEST(PlotData, SeriesPerMetric) {
  const auto dir = scratch("plots");
  MarketConfig cfg;
  StepMetrics fail;
  fail.proposals = 2;
  StepMetrics trade;
  trade.time = 1;
  trade.proposals = 2;
  trade.accomplished = 2;
  trade.traded_volume = 2;
  trade.unit_prices = {-1.0, -1.0};
  trade.executed_fills = 1;
  const std::vector<EpisodeReport> reports{make_report("swdpm", 1, cfg, {}, {fail, trade, trade}, true),
                                           make_report("uniform", 1, cfg, {}, {trade}, true)};
  emit_plot_data(reports, dir);
  EXPECT_EQ(slurp(dir / "plot_feasibility.csv"),
            "method,seed,trade_index,value\nswdpm,1,1,0.5\nswdpm,1,2,1\nuniform,1,1,1\n");
  EXPECT_EQ(slurp(dir / "plot_fairness.csv"),
            "method,seed,trade_index,value\nswdpm,1,1,1\nswdpm,1,2,1\nuniform,1,1,1\n");
  EXPECT_TRUE(fs::exists(dir / "plot_efficiency.csv"));
  EXPECT_TRUE(fs::exists(dir / "plot_welfare.csv"));

  const auto empty_dir = scratch("plots_empty");
  const std::vector<EpisodeReport> empty{make_report("swdpm", 1, cfg, {}, {}, false)};
  emit_plot_data(empty, empty_dir);
  for (const char* f : {"plot_feasibility.csv", "plot_efficiency.csv", "plot_fairness.csv", "plot_welfare.csv"})
    EXPECT_EQ(slurp(empty_dir / f), "method,seed,trade_index,value\n");
}
