#include "datamarket/harness.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "datamarket/qtable_file.hpp"
#include "json.hpp"

namespace datamarket {

using nlohmann::json;

namespace {

[[noreturn]] void field_error(const std::string& field, const std::string& msg) {
  throw std::invalid_argument("spec." + field + ": " + msg);
}

// MarketConfig::validate reports "MarketConfig.<field>: ..."; rename to the
// field's path in the spec file.
void validate_market(const MarketConfig& cfg) {
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    std::string msg = e.what();
    const std::string prefix = "MarketConfig.";
    if (msg.rfind(prefix, 0) == 0) msg.erase(0, prefix.size());
    throw std::invalid_argument("spec.market." + msg);
  }
}

SurplusMode parse_surplus_mode(const std::string& s, const std::string& field) {
  if (s == "economic") return SurplusMode::economic;
  if (s == "literal") return SurplusMode::literal;
  field_error(field, "expected \"economic\" or \"literal\", got \"" + s + "\"");
}

FairnessMeanMode parse_fairness_mode(const std::string& s, const std::string& field) {
  if (s == "trader_mean") return FairnessMeanMode::trader_mean;
  if (s == "volume_weighted") return FairnessMeanMode::volume_weighted;
  field_error(field, "expected \"trader_mean\" or \"volume_weighted\", got \"" + s + "\"");
}

template <typename T>
T get_field(const json& obj, const std::string& key, const std::string& field) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    field_error(field, e.what());
  }
}

std::int64_t to_ticks(double value, double unit, const std::string& field) {
  const double ticks = value / unit;
  const double rounded = std::round(ticks);
  if (std::abs(ticks - rounded) > 1e-9 * std::max(1.0, std::abs(ticks)))
    field_error(field, fmt::format("{} is not a multiple of the grid unit {}", value, unit));
  if (rounded < 0) field_error(field, "must be nonnegative");
  return static_cast<std::int64_t>(rounded);
}

MarketConfig market_from_json(const json& m, const std::string& prefix) {
  if (!m.is_object()) field_error(prefix, "expected an object");
  MarketConfig cfg;
  for (const auto& [key, value] : m.items()) {
    const std::string field = prefix + "." + key;
    if (key == "eta") cfg.eta = get_field<double>(m, key, field);
    else if (key == "delta") cfg.delta = get_field<double>(m, key, field);
    else if (key == "gamma") cfg.gamma = get_field<double>(m, key, field);
    else if (key == "alpha") cfg.alpha = get_field<double>(m, key, field);
    else if (key == "theta") cfg.theta = get_field<double>(m, key, field);
    else if (key == "lambda") cfg.lambda = get_field<double>(m, key, field);
    else if (key == "xi") {
      const double xi = get_field<double>(m, key, field);
      if (xi < 0 || xi != std::floor(xi)) field_error(field, "must be a nonnegative integer");
      cfg.xi = static_cast<std::int64_t>(xi);
    } else if (key == "uv") cfg.uv = get_field<double>(m, key, field);
    else if (key == "uc") cfg.uc = get_field<double>(m, key, field);
    else if (key == "max_steps_per_episode") cfg.max_steps_per_episode = get_field<int>(m, key, field);
    else if (key == "max_volume_per_action") cfg.max_volume_per_action = get_field<Volume>(m, key, field);
    else if (key == "subscription_bundle") cfg.subscription_bundle = get_field<Volume>(m, key, field);
    else if (key == "surplus_mode") cfg.surplus_mode = parse_surplus_mode(get_field<std::string>(m, key, field), field);
    else if (key == "fairness_mean_mode")
      cfg.fairness_mean_mode = parse_fairness_mode(get_field<std::string>(m, key, field), field);
    else field_error(field, "unknown field");
  }
  validate_market(cfg);
  return cfg;
}

json market_to_json(const MarketConfig& cfg) {
  return json{{"eta", cfg.eta},
              {"delta", cfg.delta},
              {"gamma", cfg.gamma},
              {"alpha", cfg.alpha},
              {"theta", cfg.theta},
              {"lambda", cfg.lambda},
              {"xi", cfg.xi},
              {"uv", cfg.uv},
              {"uc", cfg.uc},
              {"max_steps_per_episode", cfg.max_steps_per_episode},
              {"max_volume_per_action", cfg.max_volume_per_action},
              {"subscription_bundle", cfg.subscription_bundle},
              {"surplus_mode", std::string(to_string(cfg.surplus_mode))},
              {"fairness_mean_mode", std::string(to_string(cfg.fairness_mean_mode))}};
}

std::vector<TraderState> traders_from_json(const json& arr, const MarketConfig& cfg, const std::string& field) {
  if (!arr.is_array()) field_error(field, "expected a list of [vt, v, c] triples");
  std::vector<TraderState> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string f = fmt::format("{}[{}]", field, i);
    const auto& t = arr[i];
    if (!t.is_array() || t.size() != 3 || !t[0].is_number() || !t[1].is_number() || !t[2].is_number())
      field_error(f, "expected [vt, v, c]");
    out.push_back({to_ticks(t[0].get<double>(), cfg.uv, f + ".vt"), to_ticks(t[1].get<double>(), cfg.uv, f + ".v"),
                   to_ticks(t[2].get<double>(), cfg.uc, f + ".c")});
  }
  return out;
}

json traders_to_json(std::span<const TraderState> traders, const MarketConfig& cfg) {
  json arr = json::array();
  for (const auto& t : traders) arr.push_back({to_volume(t.vt, cfg), to_volume(t.v, cfg), to_currency(t.c, cfg)});
  return arr;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os || !(os << text) || !os.flush()) throw std::runtime_error("cannot write " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::int64_t parse_int(const std::string& s, const std::string& what) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &pos);
  } catch (const std::exception&) {
    pos = std::string::npos;
  }
  if (pos != s.size()) throw std::runtime_error("bad integer in " + what + ": '" + s + "'");
  return v;
}

std::vector<StepMetrics> metrics_from_log(std::span<const LoggedStep> log, std::span<const IntentionProfile> profiles,
                                          const MarketConfig& cfg) {
  std::vector<StepMetrics> out;
  out.reserve(log.size());
  for (const auto& step : log)
    out.push_back(compute_step_metrics(step.time, step.proposals, step.outcome, profiles, cfg));
  return out;
}

std::string run_json(const ExperimentSpec& spec, const RunResult& run) {
  const auto& cfg = spec.market;
  json j;
  j["method"] = std::string(to_string(run.method));
  j["seed"] = run.seed;
  j["spec"] = json::parse(spec_snapshot_json(spec, run.initial_states));
  j["initial_states"] = traders_to_json(run.initial_states, cfg);
  j["success"] = run.report.success;
  j["steps"] = run.log.size();
  switch (run.method) {
    case Method::swdpm:
      j["policy"] = "greedy joint action over the pre-trained table, updated online";
      j["history_records"] = run.history_records;
      break;
    case Method::uniform:
      j["policy"] = "standard price eta per unit, volume uniform in [1, min(remaining, affordable, cap)]";
      break;
    case Method::subscription: {
      j["policy"] = "per-seller posted price fixed at start, buyers take the cheapest offer";
      json offers = json::array();
      for (const auto& o : run.offers)
        offers.push_back({{"seller_id", o.seller_id}, {"unit_price", o.unit_price}, {"bundle", o.bundle}});
      j["offers"] = offers;
      break;
    }
  }
  return j.dump(2) + "\n";
}

std::string intentions_csv(const RunResult& run) {
  std::string out = "trader,role,rho\n";
  for (std::size_t i = 0; i < run.profiles.size(); ++i)
    out += fmt::format("{},{},{}\n", i, to_string(run.profiles[i].role_at_sampling), run.profiles[i].rho);
  return out;
}

Role parse_role(const std::string& s) {
  if (s == "buyer") return Role::buyer;
  if (s == "seller") return Role::seller;
  if (s == "idle") return Role::idle;
  throw std::runtime_error("intentions.csv: unknown role '" + s + "'");
}

} // namespace

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::swdpm: return "swdpm";
    case Method::uniform: return "uniform";
    case Method::subscription: return "subscription";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  if (name == "swdpm") return Method::swdpm;
  if (name == "uniform") return Method::uniform;
  if (name == "subscription") return Method::subscription;
  throw std::invalid_argument("unknown method '" + std::string(name) + "' (expected swdpm, uniform or subscription)");
}

std::vector<TraderState> default_trader_pool() {
  return {{10, 0, 10}, {0, 10, 0}, {12, 0, 12}, {0, 12, 0}, {10, 0, 9}};
}

void ExperimentSpec::validate() const {
  validate_market(market);
  if (seeds.empty()) field_error("seeds", "at least one seed is required");
  if (methods.empty()) field_error("methods", "at least one method is required");
  if (history_episodes <= 0) field_error("history_episodes", "must be positive");
  if (!traders.empty()) {
    if (traders.size() < 2) field_error("traders", "at least two traders are required");
  } else {
    if (trader_count < 2) field_error("trader_count", "at least two traders are required");
    if (pool.empty()) field_error("pool", "must not be empty when no traders are given");
    bool buyer = false, seller = false;
    for (const auto& t : pool) {
      buyer |= role_of(t) == Role::buyer;
      seller |= role_of(t) == Role::seller;
    }
    if (!buyer || !seller) field_error("pool", "needs at least one buyer and one seller state");
  }
}

ExperimentSpec parse_spec(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("spec: parse error: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("spec: top level must be an object");

  ExperimentSpec spec;
  if (j.contains("market")) spec.market = market_from_json(j["market"], "market");

  for (const auto& [key, value] : j.items()) {
    if (key == "market") continue;
    if (key == "traders") spec.traders = traders_from_json(value, spec.market, key);
    else if (key == "pool") spec.pool = traders_from_json(value, spec.market, key);
    else if (key == "trader_count") spec.trader_count = get_field<int>(j, key, key);
    else if (key == "methods") {
      if (!value.is_array()) field_error(key, "expected a list of method names");
      spec.methods.clear();
      for (std::size_t i = 0; i < value.size(); ++i) {
        const std::string f = fmt::format("methods[{}]", i);
        if (!value[i].is_string()) field_error(f, "expected a string");
        try {
          spec.methods.push_back(parse_method(value[i].get<std::string>()));
        } catch (const std::invalid_argument& e) {
          field_error(f, e.what());
        }
      }
    } else if (key == "seeds") {
      if (!value.is_array()) field_error(key, "expected a list of nonnegative integers");
      for (std::size_t i = 0; i < value.size(); ++i) {
        if (!value[i].is_number_unsigned()) field_error(fmt::format("seeds[{}]", i), "expected a nonnegative integer");
        spec.seeds.push_back(value[i].get<std::uint64_t>());
      }
    } else if (key == "history_episodes") spec.history_episodes = get_field<int>(j, key, key);
    else if (key == "output_dir") spec.output_dir = get_field<std::string>(j, key, key);
    else field_error(key, "unknown field");
  }
  spec.validate();
  return spec;
}

ExperimentSpec load_spec(const std::filesystem::path& path) { return parse_spec(read_text(path)); }

std::string spec_snapshot_json(const ExperimentSpec& spec, std::span<const TraderState> resolved_traders) {
  json j;
  j["market"] = market_to_json(spec.market);
  j["traders"] = traders_to_json(resolved_traders, spec.market);
  if (spec.traders.empty()) {
    j["pool"] = traders_to_json(spec.pool, spec.market);
    j["trader_count"] = spec.trader_count;
  }
  json methods = json::array();
  for (auto m : spec.methods) methods.push_back(std::string(to_string(m)));
  j["methods"] = methods;
  j["seeds"] = spec.seeds;
  j["history_episodes"] = spec.history_episodes;
  return j.dump();
}

std::vector<TraderState> resolve_initial_states(const ExperimentSpec& spec, std::uint64_t seed) {
  if (!spec.traders.empty()) return spec.traders;
  // Draw with replacement; redraw sets that lack a buyer or a seller, since
  // such a market cannot trade at all.
  Rng rng = make_stream(seed, "initial-states");
  std::uniform_int_distribution<std::size_t> pick(0, spec.pool.size() - 1);
  for (;;) {
    std::vector<TraderState> out;
    bool buyer = false, seller = false;
    for (int i = 0; i < spec.trader_count; ++i) {
      out.push_back(spec.pool[pick(rng)]);
      buyer |= role_of(out.back()) == Role::buyer;
      seller |= role_of(out.back()) == Role::seller;
    }
    if (buyer && seller) return out;
  }
}

std::vector<IntentionProfile> draw_intentions(const ExperimentSpec& spec, std::uint64_t seed,
                                              std::span<const TraderState> initial) {
  Rng rng = make_stream(seed, "intentions");
  return sample_intentions(rng, spec.market, initial);
}

TrainResult train_table(const ExperimentSpec& spec, std::uint64_t seed) {
  const auto initial = resolve_initial_states(spec, seed);
  const Environment env(spec.market, draw_intentions(spec, seed, initial));
  const MarketState start{initial, 0};

  Rng policy = make_stream(seed, "history-policy");
  Rng matching = make_stream(seed, "history-matchmaking");
  HistoryDataset data = generate_history(env, start, policy, matching, spec.history_episodes);
  data.seed = seed;

  Rng replay = make_stream(seed, "pretrain");
  TrainResult out;
  out.history_records = data.records.size();
  out.table = pretrain(QTable{}, data, spec.market, replay);
  return out;
}

RunResult run_method(const ExperimentSpec& spec, Method method, std::uint64_t seed, const QTable* pretrained) {
  const auto& cfg = spec.market;
  RunResult run;
  run.method = method;
  run.seed = seed;
  run.initial_states = resolve_initial_states(spec, seed);
  run.profiles = draw_intentions(spec, seed, run.initial_states);
  const Environment env(cfg, run.profiles);
  const MarketState start{run.initial_states, 0};
  Rng matching = make_stream(seed, "matchmaking");

  bool success = false;
  if (method == Method::swdpm) {
    QTable table;
    if (pretrained != nullptr) {
      table = *pretrained;
    } else {
      TrainResult trained = train_table(spec, seed);
      table = std::move(trained.table);
      run.history_records = trained.history_records;
    }
    Rng ties = make_stream(seed, "tie-break");
    FinetuneResult ft = finetune(std::move(table), start, env, ties, matching);
    for (auto& step : ft.trajectory)
      run.log.push_back({step.state.time, std::move(step.actions), std::move(step.result.outcome)});
    success = ft.success;
    run.table = std::move(ft.table);
  } else {
    Rng policy = make_stream(seed, "policy");
    if (method == Method::subscription) {
      Rng offers = make_stream(seed, "offers");
      run.offers = make_subscription_offers(start, cfg, offers);
    }
    MarketState s = start;
    while (!is_terminal(s, cfg)) {
      auto actions = method == Method::uniform ? uniform_policy(s, cfg, policy) : subscription_policy(s, run.offers, cfg);
      StepResult r = env.step(s, actions, matching);
      run.log.push_back({s.time, std::move(actions), std::move(r.outcome)});
      s = std::move(r.next_state);
    }
    success = all_idle(s);
  }

  run.report = make_report(std::string(to_string(method)), seed, cfg, run.initial_states,
                           metrics_from_log(run.log, run.profiles, cfg), success);
  return run;
}

std::filesystem::path run_directory(const std::filesystem::path& out, Method method, std::uint64_t seed) {
  return out / std::string(to_string(method)) / fmt::format("seed_{}", seed);
}

void write_run_artifacts(const ExperimentSpec& spec, const RunResult& run, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_text(dir / "run.json", run_json(spec, run));
  write_text(dir / "intentions.csv", intentions_csv(run));

  std::ostringstream log;
  write_trade_log(log, run.log);
  write_text(dir / "trade_log.csv", log.str());

  const std::vector<EpisodeReport> one{run.report};
  std::ostringstream metrics;
  write_metrics_csv(metrics, one);
  write_text(dir / "metrics.csv", metrics.str());

  std::ostringstream summary;
  write_summary_csv(summary, compare_report(one));
  write_text(dir / "summary.csv", summary.str());

  if (run.table) {
    const QTableHeader header{spec.market.uv, spec.market.uc, static_cast<std::uint32_t>(run.initial_states.size())};
    save_qtable(*run.table, header, dir / "qtable.bin");
  }
}

std::vector<EpisodeReport> run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  std::vector<EpisodeReport> reports;
  for (std::uint64_t seed : spec.seeds) {
    for (Method m : spec.methods) {
      RunResult run = run_method(spec, m, seed);
      write_run_artifacts(spec, run, run_directory(spec.output_dir, m, seed));
      reports.push_back(std::move(run.report));
    }
  }
  std::filesystem::create_directories(spec.output_dir);
  std::ostringstream table;
  write_summary_csv(table, compare_report(reports));
  write_text(spec.output_dir / "comparison.csv", table.str());
  emit_plot_data(reports, spec.output_dir);
  return reports;
}

void emit_plot_data(std::span<const EpisodeReport> reports, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::string header = "method,seed,trade_index,value\n";
  std::string feas = header, eff = header, fair = header, welf = header;

  for (const auto& r : reports) {
    // Feasibility at trade k pools every proposal since the previous trade,
    // so failed attempts leading up to a trade show in its point.
    StepMetrics pending;
    double welfare = 0.0;
    int k = 0;
    for (const auto& s : r.steps) {
      pending.proposals += s.proposals;
      pending.accomplished += s.accomplished;
      welfare += s.welfare;
      if (!s.traded()) continue;
      ++k;
      const auto row = [&](double v) { return fmt::format("{},{},{},{}\n", r.method, r.seed, k, v); };
      feas += row(feasibility(pending));
      eff += row(efficiency(s));
      fair += row(fairness_metric(s.unit_prices));
      welf += row(welfare);
      pending = StepMetrics{};
    }
  }
  write_text(dir / "plot_feasibility.csv", feas);
  write_text(dir / "plot_efficiency.csv", eff);
  write_text(dir / "plot_fairness.csv", fair);
  write_text(dir / "plot_welfare.csv", welf);
}

void write_trade_log(std::ostream& os, std::span<const LoggedStep> log) {
  os << "time,kind,trader,counterparty,dv,dc,residual_dv,residual_dc,cleared\n";
  for (const auto& step : log) {
    const int cleared = step.outcome.cleared ? 1 : 0;
    for (std::size_t i = 0; i < step.proposals.size(); ++i) {
      const auto& a = step.proposals[i];
      const auto& res = step.outcome.residuals[i];
      fmt::print(os, "{},proposal,{},,{},{},{},{},{}\n", step.time, i, a.dv, a.dc, res.dv, res.dc, cleared);
    }
    for (const auto& f : step.outcome.fills)
      fmt::print(os, "{},fill,{},{},{},{},,,{}\n", step.time, f.maker_id, f.taker_id, f.volume, f.payment, cleared);
  }
}

std::vector<LoggedStep> read_trade_log(std::istream& is, std::size_t trader_count) {
  std::string line;
  if (!std::getline(is, line) || line != "time,kind,trader,counterparty,dv,dc,residual_dv,residual_dc,cleared")
    throw std::runtime_error("trade_log.csv: missing or unexpected header");

  std::vector<LoggedStep> out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = fmt::format("trade_log.csv line {}", lineno);
    const auto cells = split_csv(line);
    if (cells.size() != 9) throw std::runtime_error(where + ": expected 9 columns");
    const int time = static_cast<int>(parse_int(cells[0], where));
    const bool cleared = parse_int(cells[8], where) != 0;

    if (cells[1] == "proposal") {
      const auto trader = static_cast<std::size_t>(parse_int(cells[2], where));
      if (trader == 0) {
        out.push_back({time, {}, {}});
        out.back().outcome.cleared = cleared;
      }
      if (out.empty() || out.back().time != time || trader != out.back().proposals.size())
        throw std::runtime_error(where + ": proposal rows out of order");
      auto& step = out.back();
      step.proposals.push_back({parse_int(cells[4], where), parse_int(cells[5], where)});
      step.outcome.residuals.push_back({parse_int(cells[6], where), parse_int(cells[7], where)});
    } else if (cells[1] == "fill") {
      if (out.empty() || out.back().time != time) throw std::runtime_error(where + ": fill without its step");
      out.back().outcome.fills.push_back({static_cast<std::size_t>(parse_int(cells[2], where)),
                                          static_cast<std::size_t>(parse_int(cells[3], where)),
                                          parse_int(cells[4], where), parse_int(cells[5], where)});
    } else {
      throw std::runtime_error(where + ": unknown row kind '" + cells[1] + "'");
    }
  }
  for (const auto& step : out)
    if (step.proposals.size() != trader_count)
      throw std::runtime_error(fmt::format("trade_log.csv: step {} has {} proposals, expected {}", step.time,
                                           step.proposals.size(), trader_count));
  return out;
}

EpisodeReport recompute_metrics(const std::filesystem::path& run_dir) {
  const json run = json::parse(read_text(run_dir / "run.json"));
  const MarketConfig cfg = market_from_json(run.at("spec").at("market"), "market");
  const auto initial = traders_from_json(run.at("initial_states"), cfg, "initial_states");

  std::vector<IntentionProfile> profiles;
  {
    std::istringstream is(read_text(run_dir / "intentions.csv"));
    std::string line;
    std::getline(is, line);
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      const auto cells = split_csv(line);
      if (cells.size() != 3 || parse_int(cells[0], "intentions.csv") != static_cast<std::int64_t>(profiles.size()))
        throw std::runtime_error("intentions.csv: malformed row '" + line + "'");
      profiles.push_back({std::stod(cells[2]), parse_role(cells[1])});
    }
  }
  if (profiles.size() != initial.size()) throw std::runtime_error("intentions.csv: trader count mismatch");

  std::istringstream log_text(read_text(run_dir / "trade_log.csv"));
  const auto log = read_trade_log(log_text, initial.size());
  return make_report(run.at("method").get<std::string>(), run.at("seed").get<std::uint64_t>(), cfg, initial,
                     metrics_from_log(log, profiles, cfg), run.at("success").get<bool>());
}

} // namespace datamarket
