// pmids run|sweep|classify <config>
//
// Exit codes: 0 success, 2 configuration error, 3 a run aborted on a
// hopeless profile. classify exits with 10 + class (trivial 10, easy 11,
// hard 12, hopeless 13).

#include <pmids/harness.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

using namespace pmids;

namespace {

constexpr int kConfigError = 2;
constexpr int kHopeless = 3;
constexpr int kClassBase = 10;

std::string actions_of(const std::vector<int>& v) {
  std::string s = "{";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + std::to_string(v[i]);
  return s + "}";
}

std::string action_name(const LinearGame& g, int a) {
  if (g.pairs.empty()) return std::to_string(a);
  return std::to_string(a) + "=(" + std::to_string(g.pairs[a].first) + "," + std::to_string(g.pairs[a].second) + ")";
}

int report_runs(const std::vector<RunResult>& runs) {
  int code = 0;
  for (const auto& r : runs) {
    const RunSummary s = summarize(r);
    std::printf("seed %llu  rounds %zu  regret %.6g  gamma %.6g  wall %.3fs%s\n", static_cast<unsigned long long>(s.seed),
                s.rounds, s.final_regret, s.gamma, r.wall_seconds, s.aborted ? "  ABORTED" : "");
    if (r.aborted) {
      std::fprintf(stderr, "seed %llu: %s\n", static_cast<unsigned long long>(r.seed), r.note.c_str());
      code = kHopeless;
    }
  }
  return code;
}

int cmd_run(const std::string& path, const std::vector<std::uint64_t>& seeds, std::string out, unsigned threads) {
  const ExperimentConfig cfg = load_config(path);
  const Experiment ex = prepare(cfg);
  const SweepSummary sw = run_sweep(ex, seeds.empty() ? cfg.run.seeds : seeds, {cfg.run.horizon}, threads);
  if (out.empty()) out = output_dir();
  write_results(sw.runs, out, &cfg);
  const int code = report_runs(sw.runs);
  std::printf("mean regret %.6g ± %.3g over %zu seeds; results in %s\n", sw.mean[0], sw.stderr_[0], sw.runs.size(),
              out.c_str());
  return code;
}

int cmd_sweep(const std::string& path, const std::vector<std::uint64_t>& seeds, const std::vector<std::int64_t>& horizons,
              std::string out, unsigned threads) {
  const ExperimentConfig cfg = load_config(path);
  const Experiment ex = prepare(cfg);
  const SweepSummary sw =
      run_sweep(ex, seeds.empty() ? cfg.run.seeds : seeds, horizons.empty() ? cfg.run.horizons : horizons, threads);
  if (out.empty()) out = output_dir();
  write_results(sw.runs, out, &cfg, &sw);
  std::printf("%10s %14s %12s\n", "horizon", "mean_regret", "stderr");
  for (std::size_t i = 0; i < sw.horizons.size(); ++i)
    std::printf("%10lld %14.6g %12.4g\n", static_cast<long long>(sw.horizons[i]), sw.mean[i], sw.stderr_[i]);
  if (std::isnan(sw.slope)) std::printf("log-log slope: n/a\n");
  else std::printf("log-log slope: %.4f\n", sw.slope);
  int code = 0;
  for (const auto& r : sw.runs)
    if (r.aborted) {
      std::fprintf(stderr, "seed %llu: %s\n", static_cast<unsigned long long>(r.seed), r.note.c_str());
      code = kHopeless;
    }
  return code;
}

int cmd_classify(const std::string& path) {
  const ExperimentConfig cfg = load_config(path);
  const LinearGame g = build_game(cfg.game);
  const ObservabilityReport rep = observability(g);
  const CellReport& cells = rep.cells;
  std::printf("game: %s  k=%d  d=%d  dim(Theta)=%d\n", cfg.game.type.c_str(), g.k(), g.d(), cells.theta_dim);
  std::printf("cells:\n");
  for (int a = 0; a < g.k(); ++a) {
    std::printf("  action %-10s %-11s dim %2d", action_name(g, a).c_str(), cell_label_name(cells.labels[a]).c_str(),
                cells.dims[a]);
    if (cells.labels[a] == CellLabel::duplicate) std::printf("  duplicate of %d", cells.duplicate_of[a]);
    std::printf("\n");
  }
  if (rep.trivial) std::printf("trivial action: %s\n", action_name(g, *rep.trivial).c_str());
  std::printf("globally observable: %s", rep.globally_observable ? "yes" : "no");
  if (rep.globally_observable) std::printf("  (alignment bound %.6g)", rep.global_bound);
  std::printf("\nneighbor pairs: %zu\n", rep.neighbors.size());
  for (const auto& nb : rep.neighbors)
    std::printf("  (%s, %s) local %s\n", action_name(g, nb.a).c_str(), action_name(g, nb.b).c_str(),
                actions_of(nb.local).c_str());
  std::printf("locally observable: %s", rep.locally_observable ? "yes" : "no");
  if (rep.locally_observable) std::printf("  (alignment bound %.6g)", rep.local_bound);
  std::printf("\nclass: %s\n", game_class_name(rep.classification).c_str());
  if (!rep.note.empty()) std::printf("note: %s\n", rep.note.c_str());
  return kClassBase + static_cast<int>(rep.classification);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Information-directed sampling for linear partial monitoring"};
  app.require_subcommand(1);
  std::string config, out;
  std::vector<std::uint64_t> seeds;
  std::vector<std::int64_t> horizons;
  unsigned threads = 0;

  auto* run = app.add_subcommand("run", "Simulate every configured seed and write traces");
  run->add_option("config", config, "INI config with [game], [policy], [run]")->required();
  run->add_option("--seeds", seeds, "Override run.seeds");
  run->add_option("--out", out, "Output directory (default: $PMIDS_OUTPUT_DIR, else ./pmids_out)");
  run->add_option("--threads", threads, "Worker threads (default: hardware concurrency)");

  auto* sweep = app.add_subcommand("sweep", "Regret at several horizons with a log-log slope fit");
  sweep->add_option("config", config, "INI config")->required();
  sweep->add_option("--horizons", horizons, "Override run.horizons");
  sweep->add_option("--seeds", seeds, "Override run.seeds");
  sweep->add_option("--out", out, "Output directory (default: $PMIDS_OUTPUT_DIR, else ./pmids_out)");
  sweep->add_option("--threads", threads, "Worker threads (default: hardware concurrency)");

  auto* classify = app.add_subcommand("classify", "Cell decomposition and observability of the configured game");
  classify->add_option("config", config, "INI config")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (*run) return cmd_run(config, seeds, out, threads);
    if (*sweep) return cmd_sweep(config, seeds, horizons, out, threads);
    return cmd_classify(config);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
