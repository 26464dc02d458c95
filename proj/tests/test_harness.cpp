#include <pmids/harness.hpp>

#include <gtest/gtest.h>

#include <unistd.h>

using namespace pmids;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

const char* kBandit = R"(
[game]
type = linear_bandit
features = 1 0; 0 1; -0.6 0.6
theta = ball
theta_radius = 1
noise_rho = 1

[policy]
name = ids_exact

[run]
horizon = 150
seeds = 1
theta_star = 0.6 0.8
)";

ExperimentConfig with(const std::string& text, const std::string& section, const std::string& line) {
  std::string t = text;
  const auto at = t.find("[" + section + "]");
  t.insert(t.find('\n', at) + 1, line + "\n");
  return parse_config(t);
}

std::string temp_dir(const std::string& tag) {
  const auto p = std::filesystem::temp_directory_path() / ("pmids_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(p);
  return p.string();
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST(Simulate, DeterministicGivenSeed) {
  for (const char* pol : {"ids_exact", "ids_approx", "ids_directed", "uniform"}) {
    auto cfg = parse_config(kBandit);
    cfg.policy.name = pol;
    const auto ex = prepare(cfg);
    const auto r1 = simulate(ex, 7), r2 = simulate(ex, 7);
    ASSERT_EQ(r1.rounds.size(), r2.rounds.size());
    for (std::size_t i = 0; i < r1.rounds.size(); ++i) {
      const auto &a = r1.rounds[i], &b = r2.rounds[i];
      EXPECT_EQ(a.action, b.action);
      EXPECT_TRUE(same_bits(a.cumulative, b.cumulative) && same_bits(a.gap_est, b.gap_est) &&
                  same_bits(a.info, b.info) && same_bits(a.ratio, b.ratio))
          << pol << " round " << i;
    }
    EXPECT_NE(simulate(ex, 8).regret(), r1.regret()) << pol;
  }
}

TEST(Simulate, UniformRegretBand) {
  // Gaps (0, Δ) with Δ = 0.5: E R_n = nΔ/2, sd = Δ √(n/4).
  auto cfg = parse_config(R"(
[game]
type = linear_bandit
features = 1 0; 0 0
theta = ball
theta_radius = 1
[policy]
name = uniform
[run]
horizon = 4000
seeds = 3
theta_star = 0.5 0
)");
  const auto ex = prepare(cfg);
  const double n = 4000, gap = 0.5;
  for (std::uint64_t s : {3, 4, 5}) {
    const double r = simulate(ex, s).regret();
    EXPECT_NEAR(r, n * gap / 2, 3 * gap * std::sqrt(n / 4)) << s;
  }
}

TEST(Simulate, NoiselessGreedyPlateaus) {
  // Full information through a complete graph: one round identifies θ*
  // up to ridge shrinkage, which keeps the order of the rewards.
  auto cfg = parse_config(R"(
[game]
type = graph_feedback
features = 1 0; 0 1; 0.6 -0.6
edges = 0-0, 0-1, 0-2, 1-0, 1-1, 1-2, 2-0, 2-1, 2-2
theta = ball
theta_radius = 1
[policy]
name = greedy
[run]
horizon = 50
seeds = 1
noise_sigma = 0
theta_star = 0.28 0.96
)");
  const auto r = simulate(prepare(cfg), 1);
  ASSERT_EQ(r.rounds.size(), 50u);
  for (std::size_t t = 1; t < r.rounds.size(); ++t) {
    EXPECT_EQ(r.rounds[t].regret, 0.0) << t;
    EXPECT_EQ(r.rounds[t].action, 1);
  }
}

TEST(Simulate, CumulativeRegretNondecreasing) {
  const auto r = simulate(prepare(parse_config(kBandit)), 4);
  for (std::size_t t = 1; t < r.rounds.size(); ++t) EXPECT_GE(r.rounds[t].cumulative, r.rounds[t - 1].cumulative);
}

TEST(Simulate, InformationIdentityAndBound) {
  auto cfg = parse_config(kBandit);
  cfg.policy.e2d_lambda = 2.0;
  for (const char* pol : {"ids_exact", "e2d", "ucb"}) {
    cfg.policy.name = pol;
    const auto ex = prepare(cfg);
    const auto r = simulate(ex, 11);
    double sum = 0.0;
    for (const auto& rec : r.rounds) sum += rec.info;
    EXPECT_NEAR(sum, r.rounds.back().gamma, 1e-6) << pol;
    const LinearGame& g = *ex.game;
    const double L = g.feature_bound(), lambda = std::max(L, 1.0);
    EXPECT_LE(r.rounds.back().gamma, total_information_bound(g.basis_rank(), r.rounds.size(), L, lambda) + 1e-9);
  }
}

TEST(Simulate, GapEstimateConservativeUnderCoverage) {
  auto cfg = parse_config(kBandit);
  cfg.run.fixed_delta = 0.1;
  for (const char* gap : {"full", "relaxed", "truncated"}) {
    cfg.policy.gap = gap;
    const auto ex = prepare(cfg);
    for (std::uint64_t s = 0; s < 5; ++s)
      for (const auto& rec : simulate(ex, s).rounds)
        if (rec.covered == 1) EXPECT_GE(rec.gap_est, rec.regret - 1e-9) << gap << " t=" << rec.t;
  }
}

TEST(Simulate, SingleContextMatchesPlainRun) {
  const auto plain = simulate(prepare(parse_config(kBandit)), 21);
  const auto ctx = simulate(prepare(parse_config(R"(
[game]
type = contextual_bandit
contexts = 1
context0 = 1 0; 0 1; -0.6 0.6
context_probs = 1
theta = ball
theta_radius = 1
noise_rho = 1
[policy]
name = conditional_ids
[run]
horizon = 150
seeds = 1
theta_star = 0.6 0.8
)")),
                            21);
  ASSERT_EQ(plain.rounds.size(), ctx.rounds.size());
  for (std::size_t i = 0; i < plain.rounds.size(); ++i) {
    EXPECT_EQ(plain.rounds[i].action, ctx.rounds[i].action) << i;
    EXPECT_TRUE(same_bits(plain.rounds[i].cumulative, ctx.rounds[i].cumulative)) << i;
  }
}

TEST(Simulate, OnehotFiniteGame) {
  auto cfg = parse_config(R"(
[game]
type = dynamic_pricing
prices = 1 2 3
cost = 2
[policy]
name = ids_exact
[run]
horizon = 100
seeds = 1
noise = onehot
theta_star = 0.425 0.1 0.475
)");
  const auto r = simulate(prepare(cfg), 2);
  EXPECT_EQ(r.rounds.size(), 100u);
  EXPECT_FALSE(r.aborted);
}

TEST(Simulate, KernelPaths) {
  const auto k = simulate(prepare(parse_config(R"(
[game]
type = kernel_bandit
features = 0; 0.25; 0.5; 0.75; 1
kernel = rbf
bandwidth = 0.3
utility = 0.1 0.4 0.9 0.5 0.2
param_bound = 2
[policy]
name = kernel_ids
[run]
horizon = 60
seeds = 1
)")),
                          5);
  EXPECT_EQ(k.rounds.size(), 60u);
  for (const auto& rec : k.rounds) EXPECT_EQ(rec.covered, -1);
  const auto d = simulate(prepare(parse_config(R"(
[game]
type = kernel_dueling
features = 0; 0.25; 0.5; 0.75; 1
kernel = rbf
bandwidth = 0.3
utility = 0.1 0.4 0.9 0.5 0.2
param_bound = 2
[policy]
name = dueling_kernel_ids
[run]
horizon = 60
seeds = 1
)")),
                          5);
  EXPECT_EQ(d.rounds.size(), 60u);
  EXPECT_GE(d.regret(), 0.0);
}

TEST(Simulate, ConfigErrors) {
  auto mismatch = parse_config(kBandit);
  mismatch.policy.name = "dueling_kernel_ids";
  EXPECT_THROW(prepare(mismatch), ConfigError);
  EXPECT_THROW(prepare(with(kBandit, "run", "noise_sigma = 1.5")), ConfigError);
  auto out = parse_config(kBandit);
  out.run.theta_star = vec({1.0, 1.0});
  EXPECT_THROW(simulate(prepare(out), 1), ConfigError);
  EXPECT_THROW(simulate(prepare(parse_config(kBandit)), 1, 0), ConfigError);
  auto e2d = parse_config(kBandit);
  e2d.policy.name = "e2d";
  EXPECT_THROW(prepare(e2d), ConfigError);
  auto onehot = parse_config(kBandit);
  onehot.run.noise = "onehot";
  EXPECT_THROW(prepare(onehot), ConfigError);
}

TEST(Ucb, RefusesPartialMonitoring) {
  auto cfg = parse_config(R"(
[game]
type = dueling
features = 1 0; 0 1
theta = ball
theta_radius = 1
[policy]
name = ucb
[run]
horizon = 10
seeds = 1
)");
  EXPECT_THROW(prepare(cfg), ConfigError);
  const auto g = build_dynamic_pricing({1, 2, 3}, 2.0);
  Estimator est = Estimator::for_game(g);
  EXPECT_THROW(baseline_ucb(est, est.confidence(0.1), g), ConfigError);
}

TEST(Ucb, ZeroBetaIsGreedyAndSymmetricPriorPicksLongest) {
  const auto g = build_linear_bandit({vec({0.3, 0}), vec({0, 0.9}), vec({0.5, 0.5})});
  Estimator est = Estimator::for_game(g);
  EXPECT_EQ(baseline_ucb(est, est.confidence(0.1), g), 1);  // ‖φ₁‖ = 0.9 is largest
  est.update(g.feedback(0), vec({0.3}));
  est.update(g.feedback(2), vec({-0.4}));
  EXPECT_EQ(baseline_ucb(est, ConfidenceSet{0.0, 0.1}, g), greedy_action(est, g));
}

TEST(Ucb, HandComputedInstance) {
  // λ = 1, observations after t = 3: (φ₀, 1), (φ₁, 0), (φ₀, 0.5).
  // V = I + 2 e₁e₁ᵀ + e₂e₂ᵀ = diag(3, 2); Σ φ y = (1.5, 0).
  // θ̂ = (0.5, 0); widths ‖φ‖²_{V⁻¹} = 1/3, 1/2, (1/3 + 1/2)/2 for φ₂ = (1,1)/√2.
  const double s = 1.0 / std::sqrt(2.0);
  const auto g = build_linear_bandit({vec({1, 0}), vec({0, 1}), vec({s, s})});
  Estimator est = Estimator::for_game(g, 1.0);
  est.update(g.feedback(0), vec({1.0}));
  est.update(g.feedback(1), vec({0.0}));
  est.update(g.feedback(0), vec({0.5}));
  const auto conf = est.confidence(0.1);
  const double b = conf.beta;
  const double u0 = 0.5 + std::sqrt(b / 3), u1 = std::sqrt(b / 2), u2 = 0.5 * s + std::sqrt(b * 5.0 / 12.0);
  const int want = u0 >= u1 && u0 >= u2 ? 0 : (u1 >= u2 ? 1 : 2);
  EXPECT_EQ(baseline_ucb(est, conf, g), want);
  // The widths themselves, by hand.
  EXPECT_NEAR(est.feature_uncertainty(g.feature(0)), 1.0 / 3, 1e-12);
  EXPECT_NEAR(est.feature_uncertainty(g.feature(2)), 5.0 / 12, 1e-12);
  EXPECT_NEAR(est.theta_hat()(0), 0.5, 1e-12);
  // With β = 1: u = (1.077, 0.707, 0.999).
  EXPECT_EQ(baseline_ucb(est, ConfidenceSet{1.0, 0.1}, g), 0);
  // With β = 9: u = (2.232, 2.121, 2.290) so the diagonal action wins.
  EXPECT_EQ(baseline_ucb(est, ConfidenceSet{9.0, 0.1}, g), 2);
}

TEST(Noise, GaussianZeroSigma) {
  const auto g = build_linear_bandit({vec({1, 0})});
  std::mt19937_64 rng(1);
  EXPECT_EQ(noise_sample(NoiseModel::gaussian, 0.0, rng, 0, g, vec({0.1, 0.2})), Vector::Zero(1));
}

TEST(Noise, OnehotMeanAndBoundedness) {
  const auto g = build_dynamic_pricing({1, 2, 3}, 2.0);
  const Vector theta = g.to_internal(vec({0.2, 0.3, 0.5}));
  std::mt19937_64 rng(9);
  const int N = 100000;
  for (int a = 0; a < g.k(); ++a) {
    const Matrix& M = g.feedback(a);
    const Vector mean = M * theta;
    Vector acc = Vector::Zero(M.rows());
    for (int i = 0; i < N; ++i) {
      const Vector xi = noise_sample(NoiseModel::onehot, 0.0, rng, a, g, theta);
      ASSERT_LE(xi.lpNorm<1>(), 2.0 + 1e-12);
      acc += mean + xi;
    }
    acc /= N;
    for (Eigen::Index s = 0; s < M.rows(); ++s) {
      const double p = mean(s), sd = std::sqrt(std::max(p * (1 - p), 1e-12));
      EXPECT_NEAR(acc(s), p, 3 * sd / std::sqrt(double(N)) + 1e-12) << a << " " << s;
    }
  }
  const auto ball = build_dynamic_pricing({1, 2, 3}, 2.0, GameOptions{ParameterSet::ball(Vector::Zero(3), 1.0)});
  EXPECT_THROW(noise_sample(NoiseModel::onehot, 0.0, rng, 0, ball, Vector::Zero(3)), ConfigError);
}

TEST(Sweep, PrefixesMatchShortRuns) {
  const auto ex = prepare(parse_config(kBandit));
  const auto sw = run_sweep(ex, {1, 2, 3}, {20, 40, 80, 160}, 2);
  ASSERT_EQ(sw.mean.size(), 4u);
  for (std::size_t h = 0; h < 4; ++h) {
    double sum = 0.0;
    for (std::uint64_t s : {1, 2, 3}) sum += simulate(ex, s, sw.horizons[h]).regret();
    EXPECT_DOUBLE_EQ(sw.mean[h], sum / 3) << h;
  }
  EXPECT_TRUE(std::isfinite(sw.slope));
  EXPECT_GE(sw.stderr_[3], 0.0);
}

TEST(Sweep, SingleSeedAndErrors) {
  const auto ex = prepare(parse_config(kBandit));
  const auto sw = run_sweep(ex, {5}, {16, 32, 64, 128});
  EXPECT_TRUE(std::isfinite(sw.slope));
  EXPECT_EQ(sw.stderr_[0], 0.0);
  EXPECT_THROW(run_sweep(ex, {5}, {}), ConfigError);
}

TEST(Slope, RecoversPowerLaw) {
  std::vector<double> x, y;
  for (double n : {256.0, 512.0, 1024.0, 2048.0}) {
    x.push_back(n);
    y.push_back(3.0 * std::pow(n, 0.5));
  }
  EXPECT_NEAR(loglog_slope(x, y), 0.5, 1e-12);
}

TEST(Results, RoundTripIsBitExact) {
  const auto cfg = parse_config(kBandit);
  const auto ex = prepare(cfg);
  std::vector<RunResult> runs = {simulate(ex, 1), simulate(ex, 2)};
  auto uni = cfg;
  uni.policy.name = "uniform";
  runs.push_back(simulate(prepare(uni), 3));  // ratio and gap_est are NaN here
  const std::string dir = temp_dir("roundtrip");
  write_results(runs, dir, &cfg);
  const auto back = read_results(dir);
  ASSERT_EQ(back.size(), runs.size());
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto a = summarize(runs[i]), b = summarize(back[i]);
    EXPECT_EQ(a.policy, b.policy);
    EXPECT_EQ(a.seed, b.seed);
    EXPECT_EQ(a.rounds, b.rounds);
    EXPECT_TRUE(same_bits(a.final_regret, b.final_regret));
    EXPECT_TRUE(same_bits(a.gamma, b.gamma));
    for (std::size_t t = 0; t < runs[i].rounds.size(); ++t) {
      EXPECT_TRUE(same_bits(runs[i].rounds[t].regret, back[i].rounds[t].regret));
      EXPECT_EQ(std::isnan(runs[i].rounds[t].ratio), std::isnan(back[i].rounds[t].ratio));
    }
  }
  // Fixed schema: 8 columns in every line.
  std::ifstream in(std::filesystem::path(dir) / trace_file_name(runs[0]));
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 7) << line;
    ++lines;
  }
  EXPECT_EQ(lines, 151);
  std::filesystem::remove_all(dir);
}

TEST(Results, EmptySetWritesManifestOnly) {
  const std::string dir = temp_dir("empty");
  write_results({}, dir);
  int files = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    EXPECT_EQ(e.path().filename(), "manifest.json");
    ++files;
  }
  EXPECT_EQ(files, 1);
  EXPECT_TRUE(read_results(dir).empty());
  std::filesystem::remove_all(dir);
}

TEST(Results, UnwritablePath) {
  EXPECT_THROW(write_results({}, "/proc/pmids_cannot_write_here"), std::runtime_error);
}
