#pragma once

// Monte-Carlo runs of the policies on configured games, regret accounting,
// baselines, sweeps, and trace persistence.

#include <pmids/config.hpp>
#include <pmids/contextual.hpp>
#include <pmids/geometry.hpp>
#include <pmids/kernel.hpp>

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

namespace pmids {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr double kKernelJitter = 1e-10;

enum class GameFamily { linear, contextual, kernel_bandit, kernel_dueling };
enum class NoiseModel { gaussian, onehot };

struct Experiment {
  ExperimentConfig cfg;
  GameFamily family = GameFamily::linear;
  std::optional<LinearGame> game;
  std::optional<ContextualGame> contextual;
  Matrix gram;  // kernel games
};

namespace harness_detail {

inline GameOptions options_of(const GameSpec& s) {
  GameOptions o;
  o.param_set = s.theta;
  o.param_bound = s.param_bound;
  o.noise_sigma = s.noise_rho;
  return o;
}

inline GroundSet ground_of(const GameSpec& s) {
  if (s.features.empty()) throw ConfigError("game.features is required for " + s.type);
  return GroundSet{s.features, s.edges};
}

inline ScalarKernel kernel_of(const GameSpec& s) {
  if (s.kernel == "linear") return ScalarKernel::linear();
  if (s.kernel == "rbf") return ScalarKernel::rbf(s.bandwidth);
  if (s.kernel == "polynomial") return ScalarKernel::polynomial(s.degree, s.offset);
  throw ConfigError("game.kernel is required for " + s.type);
}

inline const std::vector<std::string>& policies_for(GameFamily f) {
  static const std::vector<std::string> linear = {"ids_exact", "ids_approx", "ids_directed", "e2d",
                                                  "greedy",    "uniform",    "ucb"};
  static const std::vector<std::string> contextual = {"conditional_ids", "contextual_fw"};
  static const std::vector<std::string> kernel = {"kernel_ids"};
  static const std::vector<std::string> dueling = {"dueling_kernel_ids"};
  switch (f) {
    case GameFamily::linear: return linear;
    case GameFamily::contextual: return contextual;
    case GameFamily::kernel_bandit: return kernel;
    case GameFamily::kernel_dueling: return dueling;
  }
  return linear;
}

}  // namespace harness_detail

inline LinearGame build_game(const GameSpec& s) {
  using namespace harness_detail;
  const GameOptions opt = options_of(s);
  if (s.type == "linear_bandit") {
    if (s.features.empty()) throw ConfigError("game.features is required for linear_bandit");
    return build_linear_bandit(s.features, opt);
  }
  if (s.type == "dueling") return build_dueling(ground_of(s), opt);
  if (s.type == "graph_feedback") return build_graph_feedback(ground_of(s), opt);
  if (s.type == "graph_dueling") return build_graph_dueling(ground_of(s), opt);
  if (s.type == "finite_pm") {
    if (!s.reward.size() || !s.signals.size() || s.symbols < 1)
      throw ConfigError("finite_pm needs game.reward, game.signals and game.symbols");
    return embed_finite_pm(s.reward, s.signals, s.symbols, opt);
  }
  if (s.type == "dynamic_pricing") return build_dynamic_pricing(s.prices, s.cost, opt);
  if (s.type == "bernoulli_bandit") return build_bernoulli_bandit(s.arms, opt);
  throw ConfigError("unknown or non-linear game type '" + s.type + "'");
}

inline Experiment prepare(const ExperimentConfig& cfg) {
  using namespace harness_detail;
  Experiment ex;
  ex.cfg = cfg;
  const GameSpec& s = cfg.game;
  if (s.type == "contextual_bandit") {
    ex.family = GameFamily::contextual;
    std::vector<ContextSpec> ctx;
    for (std::size_t z = 0; z < s.contexts.size(); ++z) {
      const bool custom = z < s.context_feedback.size() && !s.context_feedback[z].empty();
      ContextSpec c;
      for (std::size_t a = 0; a < s.contexts[z].size(); ++a) {
        c.features.push_back(s.contexts[z][a]);
        c.maps.push_back(custom ? s.context_feedback[z][a].transpose() : s.contexts[z][a].transpose());
      }
      ctx.push_back(std::move(c));
    }
    if (ctx.empty()) throw ConfigError("contextual_bandit needs game.contexts");
    if (!s.theta) throw ConfigError("contextual_bandit needs game.theta");
    ex.contextual.emplace(ctx, s.chi, *s.theta, s.param_bound, s.noise_rho.value_or(1.0));
  } else if (s.type == "kernel_bandit" || s.type == "kernel_dueling") {
    ex.family = s.type == "kernel_bandit" ? GameFamily::kernel_bandit : GameFamily::kernel_dueling;
    if (s.features.empty()) throw ConfigError("game.features (ground points) is required for " + s.type);
    if (s.utility.size() != static_cast<Eigen::Index>(s.features.size()))
      throw ConfigError("game.utility must give one value per ground point");
    if (!s.param_bound) throw ConfigError(s.type + " needs game.param_bound (RKHS norm bound)");
    ex.gram = kernel_of(s).gram(s.features);
  } else {
    ex.family = GameFamily::linear;
    ex.game.emplace(build_game(s));
  }
  const auto& allowed = policies_for(ex.family);
  if (std::find(allowed.begin(), allowed.end(), cfg.policy.name) == allowed.end())
    throw ConfigError("policy '" + cfg.policy.name + "' does not apply to game type '" + s.type + "'");
  if (cfg.policy.name == "e2d" && !cfg.policy.e2d_lambda) throw ConfigError("e2d needs policy.e2d_lambda");
  if (cfg.policy.name == "ucb" && !ex.game->bandit_feedback())
    throw ConfigError("ucb needs bandit feedback (M_a = φ_aᵀ); it is unsound for general partial monitoring");
  if (cfg.run.fixed_delta && ex.family != GameFamily::linear)
    throw ConfigError("run.delta fixed mode is only available for linear games");
  if (cfg.run.noise == "onehot") {
    if (ex.family != GameFamily::linear || !ex.game->finite_pm || ex.game->finite_pm->centered)
      throw ConfigError("onehot noise needs a finite game on the outcome simplex");
  }
  const double rho = ex.family == GameFamily::linear       ? ex.game->noise_sigma()
                     : ex.family == GameFamily::contextual ? ex.contextual->joint().noise_sigma()
                                                           : s.noise_rho.value_or(1.0);
  if (cfg.run.noise_sigma && *cfg.run.noise_sigma > rho)
    throw ConfigError("run.noise_sigma exceeds the sub-Gaussian constant ρ");
  return ex;
}

// ---------------------------------------------------------------------------
// Noise, θ*, baselines

// ε = y − M_a θ for the configured model. One-hot draws the outcome x ∼ θ
// on the simplex and observes e_{Φ(a, x)}.
inline Vector noise_sample(NoiseModel model, double sigma, std::mt19937_64& rng, int a, const LinearGame& g,
                           const Vector& theta_internal) {
  const Matrix& M = g.feedback(a);
  if (model == NoiseModel::gaussian) return gaussian_noise(rng, M.rows(), sigma);
  if (!g.finite_pm || g.param_set().kind() != ParameterSet::Kind::simplex)
    throw ConfigError("onehot noise needs a finite game on the outcome simplex");
  const Vector p = g.to_original(theta_internal).cwiseMax(0.0);
  std::discrete_distribution<int> outcome(p.data(), p.data() + p.size());
  const int x = outcome(rng);
  Vector y = Vector::Zero(M.rows());
  y(g.finite_pm->signals(a, x)) = 1.0;
  return y - M * theta_internal;
}

// Ball: uniform on the boundary sphere. Simplex: a vertex or a flat
// Dirichlet draw with probability ½ each. Box: uniform. Returned in
// original units.
inline Vector sample_theta(const LinearGame& g, std::mt19937_64& rng) {
  const ParameterSet& th = g.param_set();
  std::normal_distribution<double> n01(0.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  Vector out(th.dim());
  switch (th.kind()) {
    case ParameterSet::Kind::full_space: throw ConfigError("run.theta_star is required on the full space");
    case ParameterSet::Kind::ball: {
      for (auto& x : out) x = n01(rng);
      out = th.center() + th.radius() * out.normalized();
      break;
    }
    case ParameterSet::Kind::simplex: {
      if (u01(rng) < 0.5) {
        std::uniform_int_distribution<int> v(0, th.dim() - 1);
        out = Vector::Unit(th.dim(), v(rng)) * th.mass();
      } else {
        std::exponential_distribution<double> e(1.0);
        for (auto& x : out) x = e(rng);
        out *= th.mass() / out.sum();
      }
      break;
    }
    case ParameterSet::Kind::box: {
      for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = th.lower()(i) + u01(rng) * (th.upper()(i) - th.lower()(i));
      break;
    }
  }
  return g.to_original(out);
}

// argmax ⟨φ_a, θ̂⟩ + √β ‖φ_a‖_{V⁻¹}; bandit feedback only.
inline int baseline_ucb(const Estimator& est, const ConfidenceSet& conf, const LinearGame& g) {
  if (!g.bandit_feedback()) throw ConfigError("ucb needs bandit feedback (M_a = φ_aᵀ)");
  int best = 0;
  double val = -kInf;
  for (int a = 0; a < g.k(); ++a) {
    const double v = g.feature(a).dot(est.theta_hat()) + std::sqrt(conf.beta * est.feature_uncertainty(g.feature(a)));
    if (v > val) {
      val = v;
      best = a;
    }
  }
  return best;
}

// (r/2) log(1 + nL/(λr))
inline double total_information_bound(int rank, std::int64_t n, double L, double lambda) {
  if (rank == 0) return 0.0;
  return 0.5 * rank * std::log(1.0 + static_cast<double>(n) * L / (lambda * rank));
}

// ---------------------------------------------------------------------------
// Simulation

namespace harness_detail {

inline GapInfoProfile linear_profile(const Estimator& est, const ConfidenceSet& conf, const LinearGame& g,
                                     const PolicySpec& p) {
  GapInfoProfile prof;
  prof.greedy = greedy_action(est, g);
  if (p.gap == "full") {
    prof.gaps = gap_full(est, conf, g);
  } else if (p.gap == "relaxed") {
    auto [gaps, delta] = gap_relaxed(est, conf, g);
    prof.gaps = gaps;
    prof.delta_offset = delta;
  } else {
    prof.gaps = gap_truncated(est, conf, g);
  }
  if (p.info == "directed" || p.name == "ids_directed")
    prof.infos = info_directed(est, conf, g, plausible_actions(est, conf, g));
  else
    prof.infos = info_logdet(est, g);
  return prof;
}

inline RunResult simulate_linear(const Experiment& ex, std::uint64_t seed, std::int64_t n) {
  const LinearGame& g = *ex.game;
  const PolicySpec& pol = ex.cfg.policy;
  const RunSpec& run = ex.cfg.run;
  std::mt19937_64 rng(seed);
  const Vector theta_orig = run.theta_star ? *run.theta_star : sample_theta(g, rng);
  if (theta_orig.size() != g.d()) throw ConfigError("run.theta_star has the wrong dimension");
  const Vector theta = g.to_internal(theta_orig);
  if (!g.param_set().contains(theta, 1e-9)) throw ConfigError("run.theta_star lies outside the parameter set");
  const NoiseModel model = run.noise == "onehot" ? NoiseModel::onehot : NoiseModel::gaussian;
  const double sigma = run.noise_sigma.value_or(g.noise_sigma());
  Estimator est = Estimator::for_game(g, run.lambda);
  const double top = g.best_action(theta).second;
  const bool profiled = pol.name != "greedy" && pol.name != "uniform" && pol.name != "ucb";
  std::uniform_int_distribution<int> uniform(0, g.k() - 1);

  RunResult res;
  res.policy = pol.name;
  res.seed = seed;
  res.rounds.reserve(static_cast<std::size_t>(n));
  double cum = 0.0;
  for (std::int64_t t = 1; t <= n; ++t) {
    const ConfidenceSet conf = run.fixed_delta ? est.confidence(*run.fixed_delta) : est.confidence_schedule();
    PolicyDecision dec;
    GapInfoProfile prof;
    double ratio = std::numeric_limits<double>::quiet_NaN();
    if (profiled) {
      prof = linear_profile(est, conf, g, pol);
      try {
        if (pol.name == "ids_approx") dec = ids_approximate(prof);
        else if (pol.name == "e2d") dec = e2d_policy(prof, *pol.e2d_lambda);
        else dec = ids_exact(prof);
      } catch (const HopelessProfile& e) {
        res.aborted = true;
        res.note = std::string("hopeless profile at round ") + std::to_string(t) + ": " + e.what();
        break;
      }
      ratio = dec.ratio;
    } else if (pol.name == "greedy") {
      dec = PolicyDecision::dirac(greedy_action(est, g));
    } else if (pol.name == "ucb") {
      dec = PolicyDecision::dirac(baseline_ucb(est, conf, g));
    }
    const int a = pol.name == "uniform" ? uniform(rng) : sample(dec, rng);
    const double inst = top - g.reward(a, theta);
    cum += inst;
    const Matrix& M = g.feedback(a);
    const double info = est.info_gain(M);
    const int covered = est.covers(theta, conf) ? 1 : 0;
    const Vector y = M * theta + noise_sample(model, sigma, rng, a, g, theta);
    est.update(M, y);
    const double gap_est = profiled ? prof.gaps(a) : std::numeric_limits<double>::quiet_NaN();
    RoundRecord rec{t, 0, a, inst, cum, gap_est, info, ratio, covered, conf.beta, est.total_information_gain()};
    if (profiled) {
      rec.gap_mix = dec.gap;
      rec.gap_greedy = std::max(prof.gaps(prof.greedy), 0.0);
    }
    res.rounds.push_back(rec);
  }
  return res;
}

inline RunResult simulate_kernel_bandit(const Experiment& ex, std::uint64_t seed, std::int64_t n) {
  const GameSpec& s = ex.cfg.game;
  const RunSpec& run = ex.cfg.run;
  const double L = ex.gram.diagonal().maxCoeff();
  const double rho = s.noise_rho.value_or(1.0);
  KernelEstimator est(bandit_joint_kernel(ex.gram), run.lambda.value_or(std::max(L, 1.0)), *s.param_bound, rho,
                      kKernelJitter);
  std::mt19937_64 rng(seed);
  const double sigma = run.noise_sigma.value_or(rho);
  const double top = s.utility.maxCoeff();
  RunResult res;
  res.policy = ex.cfg.policy.name;
  res.seed = seed;
  double cum = 0.0;
  for (std::int64_t t = 1; t <= n; ++t) {
    const ConfidenceSet conf = est.confidence_schedule();
    const GapInfoProfile prof = kernel_profile(est, conf.beta);
    PolicyDecision dec;
    try {
      dec = ids_exact(prof);
    } catch (const HopelessProfile& e) {
      res.aborted = true;
      res.note = std::string("hopeless profile at round ") + std::to_string(t) + ": " + e.what();
      break;
    }
    const int a = sample(dec, rng);
    const double inst = top - s.utility(a);
    cum += inst;
    const double info = est.info_gain(a);
    est.update(a, Vector::Constant(1, s.utility(a)) + gaussian_noise(rng, 1, sigma));
    res.rounds.push_back({t, 0, a, inst, cum, prof.gaps(a), info, dec.ratio, -1, conf.beta, est.total_information_gain()});
  }
  return res;
}

inline RunResult dispatch(const Experiment& ex, std::uint64_t seed, std::int64_t n) {
  const RunSpec& run = ex.cfg.run;
  switch (ex.family) {
    case GameFamily::linear: return simulate_linear(ex, seed, n);
    case GameFamily::contextual: {
      const ContextualGame& cg = *ex.contextual;
      if (!run.theta_star) throw ConfigError("run.theta_star is required for contextual games");
      ContextualRunOptions opt;
      opt.lambda = run.lambda;
      opt.fw_iteration_cap = ex.cfg.policy.fw_iteration_cap;
      opt.noise_sigma = run.noise_sigma;
      const auto kind = ex.cfg.policy.name == "conditional_ids" ? ContextualPolicyKind::conditional
                                                                : ContextualPolicyKind::frank_wolfe;
      return simulate_contextual(cg, kind, *run.theta_star, n, seed, opt);
    }
    case GameFamily::kernel_bandit: return simulate_kernel_bandit(ex, seed, n);
    case GameFamily::kernel_dueling: {
      const GameSpec& s = ex.cfg.game;
      double psi_max = 0.0;
      for (Eigen::Index a = 0; a < ex.gram.rows(); ++a)
        for (Eigen::Index b = 0; b < ex.gram.rows(); ++b)
          psi_max = std::max(psi_max, ex.gram(a, a) + ex.gram(b, b) - 2.0 * ex.gram(a, b));
      const double rho = s.noise_rho.value_or(1.0);
      DuelingKernelState state(ex.gram, run.lambda.value_or(std::max(psi_max, 1e-12)), *s.param_bound, rho, kKernelJitter);
      return simulate_dueling(std::move(state), s.utility, n, seed, DuelingRunOptions{run.noise_sigma.value_or(rho)});
    }
  }
  throw std::logic_error("unknown game family");
}

}  // namespace harness_detail

// Deterministic given the seed. `horizon` overrides run.horizon.
inline RunResult simulate(const Experiment& ex, std::uint64_t seed, std::optional<std::int64_t> horizon = std::nullopt) {
  const std::int64_t n = horizon.value_or(ex.cfg.run.horizon);
  if (n < 1) throw ConfigError("horizon must be >= 1");
  const auto start = std::chrono::steady_clock::now();
  RunResult res = harness_detail::dispatch(ex, seed, n);
  res.policy = ex.cfg.policy.name;
  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}


inline RunResult simulate(const ExperimentConfig& cfg, std::uint64_t seed) { return simulate(prepare(cfg), seed); }

// ---------------------------------------------------------------------------
// Sweeps

// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("slope fit needs two or more points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw std::invalid_argument("slope fit needs positive values");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

struct SweepSummary {
  std::vector<std::int64_t> horizons;
  std::vector<double> mean;
  std::vector<double> stderr_;
  double slope = std::numeric_limits<double>::quiet_NaN();
  std::vector<RunResult> runs;
};

// The policies are anytime (δ_t does not depend on n) and draw randomness
// round by round, so the regret at horizon h is the length-h prefix of one
// run at the largest horizon. Seeds run on worker threads.
inline SweepSummary run_sweep(const Experiment& ex, const std::vector<std::uint64_t>& seeds,
                              std::vector<std::int64_t> horizons, unsigned threads = 0) {
  if (horizons.empty()) throw ConfigError("sweep needs at least one horizon");
  if (seeds.empty()) throw ConfigError("sweep needs at least one seed");
  std::sort(horizons.begin(), horizons.end());
  if (horizons.front() < 1) throw ConfigError("horizons must be >= 1");
  SweepSummary out;
  out.horizons = horizons;
  out.runs.resize(seeds.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < seeds.size();) {
      try {
        out.runs[i] = simulate(ex, seeds[i], horizons.back());
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(threads ? threads : std::thread::hardware_concurrency(),
                                                     static_cast<unsigned>(seeds.size())));
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  for (auto h : horizons) {
    double sum = 0.0, sq = 0.0;
    for (const auto& r : out.runs) {
      const double v = r.regret_at(static_cast<std::size_t>(h));
      sum += v;
      sq += v * v;
    }
    const double k = static_cast<double>(out.runs.size());
    const double m = sum / k;
    out.mean.push_back(m);
    out.stderr_.push_back(k > 1 ? std::sqrt(std::max(sq / k - m * m, 0.0) * k / (k - 1) / k) : 0.0);
  }
  if (horizons.size() >= 2) {
    std::vector<double> x(horizons.begin(), horizons.end());
    bool positive = true;
    for (double m : out.mean) positive = positive && m > 0.0;
    if (positive) out.slope = loglog_slope(x, out.mean);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Persistence

inline const std::vector<std::string>& trace_columns() {
  static const std::vector<std::string> cols = {"t",        "action", "regret", "cum_regret",
                                                "gap_est",  "info",   "ratio",  "covered"};
  return cols;
}

struct RunSummary {
  std::string policy;
  std::uint64_t seed = 0;
  std::size_t rounds = 0;
  double final_regret = 0.0;
  double gamma = 0.0;  // Σ info
  bool aborted = false;
};

inline RunSummary summarize(const RunResult& r) {
  RunSummary s{r.policy, r.seed, r.rounds.size(), r.regret(), 0.0, r.aborted};
  for (const auto& rec : r.rounds) s.gamma += rec.info;
  return s;
}

inline std::string trace_file_name(const RunResult& r) { return r.policy + "_seed" + std::to_string(r.seed) + ".csv"; }

// One CSV trace per run plus manifest.json. Traces are written in 1024-row
// chunks and flushed after each chunk.
inline void write_results(const std::vector<RunResult>& runs, const std::string& dir, const ExperimentConfig* cfg = nullptr,
                          const SweepSummary* sweep = nullptr) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw std::runtime_error("cannot create output directory " + dir);
  nlohmann::json manifest;
  manifest["version"] = kVersion;
  manifest["columns"] = trace_columns();
  manifest["kernel_jitter"] = kKernelJitter;
  nlohmann::json config = nlohmann::json::object();
  if (cfg)
    for (const auto& [k, v] : cfg->canonical) config[k] = v;
  manifest["config"] = config;
  manifest["runs"] = nlohmann::json::array();
  char buf[512];
  for (const auto& r : runs) {
    const std::string name = trace_file_name(r);
    std::ofstream out(fs::path(dir) / name);
    if (!out) throw std::runtime_error("cannot write " + name);
    out << "t,action,regret,cum_regret,gap_est,info,ratio,covered\n";
    std::size_t row = 0;
    for (const auto& rec : r.rounds) {
      std::snprintf(buf, sizeof buf, "%lld,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", static_cast<long long>(rec.t),
                    rec.action, rec.regret, rec.cumulative, rec.gap_est, rec.info, rec.ratio, rec.covered);
      out << buf;
      if (++row % 1024 == 0) out.flush();
    }
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + name);
    const RunSummary s = summarize(r);
    manifest["runs"].push_back({{"policy", s.policy},
                                {"seed", s.seed},
                                {"file", name},
                                {"rounds", s.rounds},
                                {"final_regret", s.final_regret},
                                {"gamma", s.gamma},
                                {"aborted", s.aborted},
                                {"note", r.note},
                                {"wall_seconds", r.wall_seconds}});
  }
  if (sweep) {
    manifest["sweep"] = {{"horizons", sweep->horizons}, {"mean", sweep->mean}, {"stderr", sweep->stderr_}};
    if (!std::isnan(sweep->slope)) manifest["sweep"]["slope"] = sweep->slope;
  }
  std::ofstream m(fs::path(dir) / "manifest.json");
  if (!m) throw std::runtime_error("cannot write manifest in " + dir);
  m << manifest.dump(2) << "\n";
}

// Reads the runs listed in dir/manifest.json back from their traces.
inline std::vector<RunResult> read_results(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream in(fs::path(dir) / "manifest.json");
  if (!in) throw std::runtime_error("no manifest in " + dir);
  const nlohmann::json manifest = nlohmann::json::parse(in);
  std::vector<RunResult> out;
  for (const auto& entry : manifest.at("runs")) {
    RunResult r;
    r.policy = entry.at("policy").get<std::string>();
    r.seed = entry.at("seed").get<std::uint64_t>();
    r.aborted = entry.at("aborted").get<bool>();
    r.note = entry.at("note").get<std::string>();
    r.wall_seconds = entry.value("wall_seconds", 0.0);
    std::ifstream trace(fs::path(dir) / entry.at("file").get<std::string>());
    if (!trace) throw std::runtime_error("missing trace " + entry.at("file").get<std::string>());
    std::string line;
    std::getline(trace, line);
    if (config_detail::split(line, ',').size() != trace_columns().size()) throw std::runtime_error("bad trace header");
    while (std::getline(trace, line)) {
      if (line.empty()) continue;
      const auto f = config_detail::split(line, ',');
      if (f.size() != trace_columns().size()) throw std::runtime_error("bad trace row: " + line);
      RoundRecord rec;
      rec.t = std::stoll(f[0]);
      rec.action = std::stoi(f[1]);
      rec.regret = std::strtod(f[2].c_str(), nullptr);
      rec.cumulative = std::strtod(f[3].c_str(), nullptr);
      rec.gap_est = std::strtod(f[4].c_str(), nullptr);
      rec.info = std::strtod(f[5].c_str(), nullptr);
      rec.ratio = std::strtod(f[6].c_str(), nullptr);
      rec.covered = std::stoi(f[7]);
      r.rounds.push_back(rec);
    }
    out.push_back(std::move(r));
  }
  return out;
}

// Output directory from PMIDS_OUTPUT_DIR, else ./pmids_out.
inline std::string output_dir() {
  const char* env = std::getenv("PMIDS_OUTPUT_DIR");
  return env && *env ? std::string(env) : std::string("pmids_out");
}

}  // namespace pmids
