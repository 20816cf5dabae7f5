// Command-line entry point for the data market experiments.
//
//   datamarket_cli train   --spec s.json --seed 1 --out dir
//   datamarket_cli run     --spec s.json --seed 1 --method swdpm --out dir [--qtable file]
//   datamarket_cli compare --spec s.json [--out dir]
//   datamarket_cli metrics <run-dir> [--check]
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "datamarket/harness.hpp"
#include "datamarket/qtable_file.hpp"

using namespace datamarket;

namespace {

void print_summary(const ComparisonTable& t) {
  fmt::print("{:<14}{:>8}{:>10}{:>10}{:>10}{:>10}\n", "method", "Times", "phi_f", "phi_e", "phi_r", "sum_W");
  for (const auto& r : t.means)
    fmt::print("{:<14}{:>8.2f}{:>10.3f}{:>10.3f}{:>10.3f}{:>10.3f}\n", r.method, r.trades, r.phi_f, r.phi_e, r.phi_r,
               r.sum_w);
}

std::uint64_t pick_seed(const ExperimentSpec& spec, const std::optional<std::uint64_t>& seed) {
  return seed ? *seed : spec.seeds.front();
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data market pricing experiments"};
  app.require_subcommand(1);

  std::string spec_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string method_name = "swdpm";
  std::string qtable_path;
  std::string run_dir;
  bool check = false;

  auto* train = app.add_subcommand("train", "generate history and pre-train a Q-table");
  train->add_option("--spec", spec_path, "experiment spec (JSON)")->required();
  train->add_option("--seed", seed, "seed (default: first seed in the spec)");
  train->add_option("--out", out_dir, "output directory (default: spec output_dir)");

  auto* run = app.add_subcommand("run", "run one method for one seed");
  run->add_option("--spec", spec_path, "experiment spec (JSON)")->required();
  run->add_option("--seed", seed, "seed (default: first seed in the spec)");
  run->add_option("--method", method_name, "swdpm, uniform or subscription");
  run->add_option("--out", out_dir, "output directory (default: spec output_dir)");
  run->add_option("--qtable", qtable_path, "pre-trained table from `train` (swdpm only)");

  auto* compare = app.add_subcommand("compare", "run every method and seed, then compare");
  compare->add_option("--spec", spec_path, "experiment spec (JSON)")->required();
  compare->add_option("--out", out_dir, "output directory (default: spec output_dir)");

  auto* metrics = app.add_subcommand("metrics", "recompute metrics from a run directory's logs");
  metrics->add_option("run_dir", run_dir, "directory written by `run` or `compare`")->required();
  metrics->add_flag("--check", check, "fail unless the result matches the stored metrics.csv");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*metrics) {
      const EpisodeReport report = recompute_metrics(run_dir);
      std::ostringstream os;
      write_metrics_csv(os, std::span<const EpisodeReport>(&report, 1));
      std::cout << os.str();
      if (check) {
        std::ifstream stored(std::filesystem::path(run_dir) / "metrics.csv", std::ios::binary);
        std::ostringstream expected;
        expected << stored.rdbuf();
        if (expected.str() != os.str()) {
          std::cerr << "metrics differ from " << run_dir << "/metrics.csv\n";
          return 1;
        }
      }
      return 0;
    }

    ExperimentSpec spec = load_spec(spec_path);
    if (!out_dir.empty()) spec.output_dir = out_dir;

    if (*train) {
      const std::uint64_t s = pick_seed(spec, seed);
      const TrainResult trained = train_table(spec, s);
      std::filesystem::create_directories(spec.output_dir);
      const auto path = spec.output_dir / fmt::format("qtable_seed_{}.bin", s);
      const auto traders = resolve_initial_states(spec, s).size();
      save_qtable(trained.table, {spec.market.uv, spec.market.uc, static_cast<std::uint32_t>(traders)}, path);
      fmt::print("history records: {}\nentries: {}\nwrote {}\n", trained.history_records, trained.table.size(),
                 path.string());
    } else if (*run) {
      const std::uint64_t s = pick_seed(spec, seed);
      const Method m = parse_method(method_name);
      std::optional<QTable> pretrained;
      if (!qtable_path.empty()) {
        if (m != Method::swdpm) throw std::invalid_argument("--qtable only applies to --method swdpm");
        QTableHeader h;
        pretrained = load_qtable(qtable_path, &h);
        if (h.uv != spec.market.uv || h.uc != spec.market.uc)
          throw std::invalid_argument("--qtable grid units do not match the spec");
      }
      const RunResult result = run_method(spec, m, s, pretrained ? &*pretrained : nullptr);
      const auto dir = run_directory(spec.output_dir, m, s);
      write_run_artifacts(spec, result, dir);
      const std::vector<EpisodeReport> one{result.report};
      print_summary(compare_report(one));
      fmt::print("{}\nwrote {}\n", result.report.success ? "all targets reached" : "step cap reached before targets",
                 dir.string());
    } else if (*compare) {
      const auto reports = run_experiment(spec);
      print_summary(compare_report(reports));
      fmt::print("wrote {}\n", (spec.output_dir / "comparison.csv").string());
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
