#pragma once

// Experiment configuration: INI text with [game], [policy] and [run]
// sections. Every field is explicit; defaults are limited to δ_t = 1/t²,
// noise σ = ρ, λ = max(L, 1) and the builders' own choices.

#include <pmids/game.hpp>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace pmids {

struct GameSpec {
  std::string type;
  std::vector<Vector> features;                 // rows of `features` (ground points for kernel games)
  std::vector<std::pair<int, int>> edges;
  std::optional<ParameterSet> theta;
  std::optional<double> param_bound;
  std::optional<double> noise_rho;
  Matrix reward;                                // finite_pm
  Eigen::MatrixXi signals;
  int symbols = 0;
  std::vector<double> prices;                   // dynamic_pricing
  double cost = 0.0;
  int arms = 0;                                 // bernoulli_bandit
  std::vector<std::vector<Vector>> contexts;    // contextual_bandit
  std::vector<std::vector<Vector>> context_feedback;  // one row per action; empty: M = φᵀ
  Vector chi;
  std::string kernel;                           // kernel games
  double bandwidth = 0.0;
  int degree = 0;
  double offset = 0.0;
  Vector utility;
};

struct PolicySpec {
  std::string name;
  std::string gap = "full";     // full | relaxed | truncated
  std::string info = "logdet";  // logdet | directed
  std::optional<double> e2d_lambda;
  std::optional<int> fw_iteration_cap;
};

struct RunSpec {
  std::int64_t horizon = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<std::int64_t> horizons;          // sweep only
  std::optional<double> fixed_delta;           // unset: δ_t = 1/t²
  std::optional<double> lambda;
  std::string noise = "gaussian";              // gaussian | onehot
  std::optional<double> noise_sigma;           // unset: ρ
  std::optional<Vector> theta_star;            // unset: sampled per seed
};

struct ExperimentConfig {
  GameSpec game;
  PolicySpec policy;
  RunSpec run;
  // Every key as read, sorted, for the manifest.
  std::map<std::string, std::string> canonical;
};

namespace config_detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double to_double(const std::string& tok, const std::string& key) {
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad number '" + tok + "' in " + key);
  }
}

inline std::int64_t to_int(const std::string& tok, const std::string& key) {
  const double v = to_double(tok, key);
  if (v != std::floor(v)) throw ConfigError("expected an integer in " + key);
  return static_cast<std::int64_t>(v);
}

// "1 0.5, 2" → {1, 0.5, 2}: whitespace or commas.
inline std::vector<double> numbers(const std::string& s, const std::string& key) {
  std::string t = s;
  for (char& c : t)
    if (c == ',') c = ' ';
  std::istringstream in(t);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) out.push_back(to_double(tok, key));
  return out;
}

inline Vector vector_of(const std::string& s, const std::string& key) {
  const auto v = numbers(s, key);
  if (v.empty()) throw ConfigError(key + " is empty");
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Rows separated by ';'.
inline std::vector<Vector> rows_of(const std::string& s, const std::string& key) {
  std::vector<Vector> out;
  for (const auto& r : split(s, ';'))
    if (!trim(r).empty()) out.push_back(vector_of(r, key));
  if (out.empty()) throw ConfigError(key + " has no rows");
  for (const auto& r : out)
    if (r.size() != out.front().size()) throw ConfigError(key + " has ragged rows");
  return out;
}

inline Matrix matrix_of(const std::string& s, const std::string& key) {
  const auto rows = rows_of(s, key);
  Matrix M(static_cast<Eigen::Index>(rows.size()), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) M.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  return M;
}

// "0-1, 1-2"
inline std::vector<std::pair<int, int>> edges_of(const std::string& s, const std::string& key) {
  std::vector<std::pair<int, int>> out;
  for (const auto& e : split(s, ',')) {
    const std::string t = trim(e);
    if (t.empty()) continue;
    const auto parts = split(t, '-');
    if (parts.size() != 2) throw ConfigError("bad edge '" + t + "' in " + key);
    out.emplace_back(static_cast<int>(to_int(trim(parts[0]), key)), static_cast<int>(to_int(trim(parts[1]), key)));
  }
  return out;
}

class Section {
 public:
  Section(const boost::property_tree::ptree* tree, std::string name, std::map<std::string, std::string>& canon)
      : tree_(tree), name_(std::move(name)), canon_(canon) {}

  std::optional<std::string> get(const std::string& key) const {
    if (!tree_) return std::nullopt;
    const auto v = tree_->get_optional<std::string>(key);
    if (!v) return std::nullopt;
    const std::string t = trim(*v);
    canon_[name_ + "." + key] = t;
    return t;
  }
  std::string require(const std::string& key) const {
    auto v = get(key);
    if (!v || v->empty()) throw ConfigError("missing " + name_ + "." + key);
    return *v;
  }
  std::optional<double> number(const std::string& key) const {
    const auto v = get(key);
    if (!v) return std::nullopt;
    return to_double(*v, name_ + "." + key);
  }
  std::string path(const std::string& key) const { return name_ + "." + key; }

 private:
  const boost::property_tree::ptree* tree_;
  std::string name_;
  std::map<std::string, std::string>& canon_;
};

inline ParameterSet parse_theta(const Section& s, int d) {
  const std::string kind = s.require("theta");
  if (kind == "full") return ParameterSet::full_space(d);
  if (kind == "ball") {
    const Vector c = s.get("theta_center") ? vector_of(*s.get("theta_center"), s.path("theta_center")) : Vector::Zero(d);
    const auto r = s.number("theta_radius");
    if (!r) throw ConfigError("missing game.theta_radius");
    return ParameterSet::ball(c, *r);
  }
  if (kind == "simplex") return ParameterSet::simplex(d, s.number("theta_mass").value_or(1.0));
  if (kind == "box")
    return ParameterSet::box(vector_of(s.require("theta_lower"), s.path("theta_lower")),
                             vector_of(s.require("theta_upper"), s.path("theta_upper")));
  throw ConfigError("unknown parameter set '" + kind + "'");
}

}  // namespace config_detail

inline ExperimentConfig parse_config(const std::string& text) {
  using namespace config_detail;
  boost::property_tree::ptree tree;
  try {
    std::istringstream in(text);
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  for (const auto& [name, _] : tree)
    if (name != "game" && name != "policy" && name != "run") throw ConfigError("unknown section [" + name + "]");

  ExperimentConfig cfg;
  auto section = [&](const char* name) {
    const auto child = tree.get_child_optional(name);
    return Section(child ? &*child : nullptr, name, cfg.canonical);
  };
  const Section game = section("game"), policy = section("policy"), run = section("run");

  GameSpec& g = cfg.game;
  g.type = game.require("type");
  if (auto f = game.get("features")) g.features = rows_of(*f, game.path("features"));
  if (auto e = game.get("edges")) g.edges = edges_of(*e, game.path("edges"));
  g.param_bound = game.number("param_bound");
  g.noise_rho = game.number("noise_rho");
  if (auto r = game.get("reward")) g.reward = matrix_of(*r, game.path("reward"));
  if (auto s = game.get("signals")) {
    const Matrix S = matrix_of(*s, game.path("signals"));
    g.signals = S.cast<int>();
    if ((g.signals.cast<double>() - S).norm() != 0.0) throw ConfigError("game.signals must be integers");
  }
  if (auto s = game.number("symbols")) g.symbols = static_cast<int>(*s);
  if (auto p = game.get("prices")) g.prices = numbers(*p, game.path("prices"));
  if (auto c = game.number("cost")) g.cost = *c;
  if (auto a = game.number("arms")) g.arms = static_cast<int>(*a);
  if (auto n = game.number("contexts")) {
    if (*n < 1) throw ConfigError("game.contexts must be >= 1");
    for (int z = 0; z < static_cast<int>(*n); ++z) {
      const std::string key = "context" + std::to_string(z);
      g.contexts.push_back(rows_of(game.require(key), game.path(key)));
      const std::string fb = key + "_feedback";
      if (auto f = game.get(fb)) {
        g.context_feedback.resize(g.contexts.size());
        g.context_feedback[z] = rows_of(*f, game.path(fb));
        if (g.context_feedback[z].size() != g.contexts.back().size())
          throw ConfigError(game.path(fb) + " needs one row per action");
      }
    }
    g.chi = vector_of(game.require("context_probs"), game.path("context_probs"));
  }
  if (auto k = game.get("kernel")) {
    g.kernel = *k;
    if (g.kernel == "rbf") {
      const auto bw = game.number("bandwidth");
      if (!bw) throw ConfigError("missing game.bandwidth");
      g.bandwidth = *bw;
    } else if (g.kernel == "polynomial") {
      const auto deg = game.number("degree");
      const auto off = game.number("offset");
      if (!deg || !off) throw ConfigError("polynomial kernel needs game.degree and game.offset");
      g.degree = static_cast<int>(*deg);
      g.offset = *off;
    } else if (g.kernel != "linear") {
      throw ConfigError("unknown kernel '" + g.kernel + "'");
    }
  }
  if (auto u = game.get("utility")) g.utility = vector_of(*u, game.path("utility"));
  if (game.get("theta")) {
    int d = 0;
    if (!g.features.empty()) d = static_cast<int>(g.features.front().size());
    else if (!g.contexts.empty()) d = static_cast<int>(g.contexts.front().front().size());
    else if (g.reward.size()) d = static_cast<int>(g.reward.cols());
    else if (!g.prices.empty()) d = static_cast<int>(g.prices.size());
    else throw ConfigError("game.theta given but the dimension is unknown");
    g.theta = parse_theta(game, d);
  }

  PolicySpec& p = cfg.policy;
  p.name = policy.require("name");
  if (auto v = policy.get("gap")) p.gap = *v;
  if (auto v = policy.get("info")) p.info = *v;
  p.e2d_lambda = policy.number("e2d_lambda");
  if (auto v = policy.number("fw_iteration_cap")) p.fw_iteration_cap = static_cast<int>(*v);
  if (p.gap != "full" && p.gap != "relaxed" && p.gap != "truncated") throw ConfigError("policy.gap: " + p.gap);
  if (p.info != "logdet" && p.info != "directed") throw ConfigError("policy.info: " + p.info);

  RunSpec& r = cfg.run;
  r.horizon = to_int(run.require("horizon"), run.path("horizon"));
  if (r.horizon < 1) throw ConfigError("run.horizon must be >= 1");
  for (double s : numbers(run.require("seeds"), run.path("seeds"))) {
    if (s < 0 || s != std::floor(s)) throw ConfigError("run.seeds must be nonnegative integers");
    r.seeds.push_back(static_cast<std::uint64_t>(s));
  }
  if (r.seeds.empty()) throw ConfigError("run.seeds is empty");
  if (auto h = run.get("horizons"))
    for (double x : numbers(*h, run.path("horizons"))) r.horizons.push_back(static_cast<std::int64_t>(x));
  if (auto d = run.get("delta"); d && *d != "schedule") r.fixed_delta = to_double(*d, run.path("delta"));
  r.lambda = run.number("lambda");
  if (auto n = run.get("noise")) r.noise = *n;
  if (r.noise != "gaussian" && r.noise != "onehot") throw ConfigError("run.noise: " + r.noise);
  r.noise_sigma = run.number("noise_sigma");
  if (auto th = run.get("theta_star"); th && *th != "sample") r.theta_star = vector_of(*th, run.path("theta_star"));
  // Every key read above lands in canonical, so anything else is a typo or has no effect.
  for (const auto& [name, child] : tree)
    for (const auto& [key, _] : child)
      if (!cfg.canonical.count(name + "." + key)) throw ConfigError("unknown or unused key " + name + "." + key);
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace pmids
