// compare_policies <config> [rounds] [seeds]
//
// Runs every policy the configured game admits on the same seeds and prints
// mean final regret. Policies that need extra settings (e2d without
// policy.e2d_lambda, ucb on partial feedback) are reported as skipped.

#include <pmids/harness.hpp>

#include <cstdio>

using namespace pmids;

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s <config> [rounds] [seeds]\n", argv[0]);
    return 2;
  }
  try {
    ExperimentConfig cfg = load_config(argv[1]);
    const std::int64_t rounds = argc > 2 ? std::atoll(argv[2]) : cfg.run.horizon;
    const int count = argc > 3 ? std::atoi(argv[3]) : 5;
    std::vector<std::uint64_t> seeds;
    for (int i = 0; i < count; ++i) seeds.push_back(static_cast<std::uint64_t>(i + 1));
    const GameFamily family = prepare(cfg).family;
    std::printf("%-20s %14s %12s\n", "policy", "mean_regret", "stderr");
    for (const auto& name : harness_detail::policies_for(family)) {
      cfg.policy.name = name;
      try {
        const SweepSummary sw = run_sweep(prepare(cfg), seeds, {rounds});
        std::printf("%-20s %14.4g %12.3g\n", name.c_str(), sw.mean[0], sw.stderr_[0]);
      } catch (const ConfigError& e) {
        std::printf("%-20s skipped: %s\n", name.c_str(), e.what());
      }
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  }
  return 0;
}
