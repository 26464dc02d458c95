#pragma once

// Linear partial monitoring games: reward features φ_a, feedback maps M_a,
// parameter set Θ and the constants (L, B, ρ).

#include <pmids/param_set.hpp>

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace pmids {

enum class Structure { generic, bandit, dueling, graph_feedback, graph_dueling, finite_pm };

inline std::string structure_name(Structure s) {
  switch (s) {
    case Structure::generic: return "generic";
    case Structure::bandit: return "bandit";
    case Structure::dueling: return "dueling";
    case Structure::graph_feedback: return "graph_feedback";
    case Structure::graph_dueling: return "graph_dueling";
    case Structure::finite_pm: return "finite_pm";
  }
  return "?";
}

struct GroundSet {
  std::vector<Vector> features;
  std::vector<std::pair<int, int>> edges;  // directed; (a, c) means a observes c

  int size() const { return static_cast<int>(features.size()); }
  void validate() const {
    if (features.empty()) throw ConfigError("ground set is empty");
    const auto d = features.front().size();
    for (const auto& f : features)
      if (f.size() != d || !f.allFinite()) throw ConfigError("ground features must be finite with equal dimension");
    for (auto [a, b] : edges)
      if (a < 0 || b < 0 || a >= size() || b >= size()) throw ConfigError("edge references unknown index");
  }
};

// Finite partial monitoring data kept for the one-hot observation model.
struct FinitePm {
  Eigen::MatrixXi signals;  // k×d, entries in [0, symbols)
  int symbols = 1;
  bool centered = false;    // signal matrices centered (non-simplex Θ)
};

struct GameOptions {
  std::optional<ParameterSet> param_set;
  std::optional<double> param_bound;  // B; required meaning for FullSpace
  std::optional<double> noise_sigma;  // ρ
};

class LinearGame {
 public:
  // Features and maps in original units; Θ in original units. Rescales when
  // some ‖φ_a‖ > 1 so that stored φ, M, Θ, B keep rewards and observations.
  LinearGame(std::vector<Vector> features, std::vector<Matrix> maps, const ParameterSet& theta, double param_bound,
             double noise_sigma, Structure structure = Structure::generic) {
    if (features.empty()) throw ConfigError("game needs at least one action");
    if (features.size() != maps.size()) throw ConfigError("features and feedback maps differ in count");
    const auto d = features.front().size();
    if (d < 1 || theta.dim() != d) throw ConfigError("dimension mismatch between features and parameter set");
    Eigen::Index m = 1;
    for (std::size_t a = 0; a < features.size(); ++a) {
      if (features[a].size() != d || !features[a].allFinite()) throw ConfigError("non-finite or ragged features");
      if (maps[a].cols() != d || !maps[a].allFinite()) throw ConfigError("feedback map has wrong width or non-finite entries");
      m = std::max(m, maps[a].rows());
    }
    if (!(param_bound > 0.0) || !std::isfinite(param_bound)) throw ConfigError("parameter bound B must be positive");
    if (!(noise_sigma >= 0.0)) throw ConfigError("noise level must be nonnegative");
    double fmax = 0.0;
    for (const auto& f : features) fmax = std::max(fmax, f.norm());
    scale_ = fmax > 1.0 ? fmax : 1.0;
    for (std::size_t a = 0; a < features.size(); ++a) {
      features_.push_back(features[a] / scale_);
      Matrix padded = Matrix::Zero(m, d);
      padded.topRows(maps[a].rows()) = maps[a] / scale_;
      feedback_rows_.push_back(static_cast<int>(maps[a].rows()));
      maps_.push_back(std::move(padded));
    }
    theta_ = theta.scaled(scale_);
    param_bound_ = param_bound * scale_;
    rho_ = noise_sigma;
    structure_ = structure;
    L_ = 0.0;
    for (const auto& M : maps_) {
      const double spec = M.rows() ? Eigen::JacobiSVD<Matrix>(M).singularValues()(0) : 0.0;
      L_ = std::max({L_, spec, M.squaredNorm()});
    }
    basis_ = compute_basis();
    duplicates_ = compute_duplicates();
  }

  int k() const { return static_cast<int>(features_.size()); }
  int d() const { return static_cast<int>(features_.front().size()); }
  int m() const { return static_cast<int>(maps_.front().rows()); }
  const Vector& feature(int a) const { return features_[a]; }
  const Matrix& feedback(int a) const { return maps_[a]; }
  const std::vector<Vector>& features() const { return features_; }
  int feedback_rows(int a) const { return feedback_rows_[a]; }
  const ParameterSet& param_set() const { return theta_; }
  // max over a of max(‖M_a‖₂, ‖M_a‖_F²) in stored units.
  double feature_bound() const { return L_; }
  double param_bound() const { return param_bound_; }
  double noise_sigma() const { return rho_; }
  double scale() const { return scale_; }
  bool rescaled() const { return scale_ != 1.0; }
  Structure structure() const { return structure_; }
  const Matrix& basis() const { return basis_; }
  int basis_rank() const { return static_cast<int>(basis_.cols()); }
  const std::vector<std::vector<int>>& duplicate_classes() const { return duplicates_; }

  Vector to_internal(const Vector& theta_original) const { return theta_original * scale_; }
  Vector to_original(const Vector& theta_internal) const { return theta_internal / scale_; }

  double reward(int a, const Vector& theta_internal) const { return features_[a].dot(theta_internal); }

  // Lowest-index optimal action and the optimal reward.
  std::pair<int, double> best_action(const Vector& theta_internal) const {
    int best = 0;
    double val = reward(0, theta_internal);
    for (int a = 1; a < k(); ++a) {
      const double r = reward(a, theta_internal);
      if (r > val) {
        val = r;
        best = a;
      }
    }
    return {best, val};
  }

  // True when M_a = φ_aᵀ for all a (single-row bandit feedback).
  bool bandit_feedback() const {
    if (m() != 1) return false;
    for (int a = 0; a < k(); ++a)
      if ((maps_[a].row(0).transpose() - features_[a]).norm() > 1e-12) return false;
    return true;
  }

  // Dueling / graph-dueling games: ground indices of each action.
  std::vector<std::pair<int, int>> pairs;
  // Finite PM embedding data.
  std::optional<FinitePm> finite_pm;

 private:
  // W = U Q with U a basis of V and Q spanning the projected feedback rows.
  Matrix compute_basis() const {
    const Matrix U = theta_.difference_basis();
    if (U.cols() == 0) return Matrix(d(), 0);
    Matrix rows(static_cast<Eigen::Index>(maps_.size()) * m(), U.cols());
    for (std::size_t a = 0; a < maps_.size(); ++a) rows.middleRows(static_cast<Eigen::Index>(a) * m(), m()) = maps_[a] * U;
    const Matrix Q = column_span(rows.transpose());
    return U * Q;
  }

  // a ~ b iff ⟨φ_a − φ_b, θ⟩ vanishes on the affine hull of Θ.
  std::vector<std::vector<int>> compute_duplicates() const {
    const Matrix U = theta_.difference_basis();
    std::vector<int> owner(k(), -1);
    std::vector<std::vector<int>> classes;
    for (int a = 0; a < k(); ++a) {
      if (owner[a] >= 0) continue;
      owner[a] = static_cast<int>(classes.size());
      classes.push_back({a});
      for (int b = a + 1; b < k(); ++b) {
        if (owner[b] >= 0) continue;
        const Vector diff = features_[a] - features_[b];
        const double off_v = (U.transpose() * diff).norm();
        const double at_prior = std::abs(diff.dot(theta_.prior()));
        if (off_v <= 1e-10 && at_prior <= 1e-10 * (1.0 + theta_.prior().norm())) {
          owner[b] = owner[a];
          classes.back().push_back(b);
        }
      }
    }
    return classes;
  }

  std::vector<Vector> features_;
  std::vector<Matrix> maps_;
  std::vector<int> feedback_rows_;
  ParameterSet theta_ = ParameterSet::full_space(1);
  double param_bound_ = 1.0;
  double rho_ = 1.0;
  double scale_ = 1.0;
  double L_ = 0.0;
  Structure structure_ = Structure::generic;
  Matrix basis_;
  std::vector<std::vector<int>> duplicates_;
};

inline double resolve_bound(const ParameterSet& theta, const GameOptions& opt) {
  if (opt.param_bound) return *opt.param_bound;
  return theta.bounded() ? theta.radius_bound() : 1.0;
}

// φ_a = a, M_a = aᵀ / ρ(a). With per-action noise scales the model becomes
// heteroscedastic with unit noise.
inline LinearGame build_linear_bandit(const std::vector<Vector>& features, const GameOptions& opt = {},
                                      const std::vector<double>& noise_scales = {}) {
  if (features.empty()) throw ConfigError("linear bandit needs at least one feature");
  if (!noise_scales.empty() && noise_scales.size() != features.size())
    throw ConfigError("noise scale count must match feature count");
  const int d = static_cast<int>(features.front().size());
  std::vector<Matrix> maps;
  for (std::size_t a = 0; a < features.size(); ++a) {
    if (!features[a].allFinite() || features[a].size() != d) throw ConfigError("non-finite or ragged features");
    const double s = noise_scales.empty() ? 1.0 : noise_scales[a];
    if (!(s > 0.0)) throw ConfigError("noise scales must be positive");
    maps.push_back(features[a].transpose() / s);
  }
  const ParameterSet theta = opt.param_set.value_or(ParameterSet::full_space(d));
  const double rho = noise_scales.empty() ? opt.noise_sigma.value_or(1.0) : 1.0;
  return LinearGame(features, maps, theta, resolve_bound(theta, opt), rho,
                    noise_scales.empty() ? Structure::bandit : Structure::generic);
}

// Actions (a, b) ∈ I×I with φ = φ_a + φ_b and M = (φ_a − φ_b)ᵀ.
inline LinearGame build_dueling(const GroundSet& ground, const GameOptions& opt = {}) {
  ground.validate();
  if (ground.size() < 2) throw ConfigError("dueling needs at least two ground actions");
  std::vector<Vector> features;
  std::vector<Matrix> maps;
  std::vector<std::pair<int, int>> pairs;
  for (int a = 0; a < ground.size(); ++a)
    for (int b = 0; b < ground.size(); ++b) {
      features.push_back(ground.features[a] + ground.features[b]);
      maps.push_back((ground.features[a] - ground.features[b]).transpose());
      pairs.emplace_back(a, b);
    }
  const int d = static_cast<int>(features.front().size());
  const ParameterSet theta = opt.param_set.value_or(ParameterSet::full_space(d));
  LinearGame g(features, maps, theta, resolve_bound(theta, opt), opt.noise_sigma.value_or(1.0), Structure::dueling);
  g.pairs = std::move(pairs);
  return g;
}

// M_a stacks φ_cᵀ over out-neighbours c of a, zero padded to the max degree.
inline LinearGame build_graph_feedback(const GroundSet& ground, const GameOptions& opt = {}) {
  ground.validate();
  const int k = ground.size();
  const auto d = ground.features.front().size();
  std::vector<std::vector<int>> out(k);
  for (auto [a, c] : ground.edges) out[a].push_back(c);
  std::vector<Matrix> maps;
  for (int a = 0; a < k; ++a) {
    Matrix M = Matrix::Zero(std::max<std::size_t>(out[a].size(), 1), d);
    for (std::size_t j = 0; j < out[a].size(); ++j) M.row(j) = ground.features[out[a][j]].transpose();
    maps.push_back(M);
  }
  const ParameterSet theta = opt.param_set.value_or(ParameterSet::full_space(static_cast<int>(d)));
  LinearGame g(ground.features, maps, theta, resolve_bound(theta, opt), opt.noise_sigma.value_or(1.0),
               Structure::graph_feedback);
  return g;
}

// Actions are the edges (a, b) with dueling features.
inline LinearGame build_graph_dueling(const GroundSet& ground, const GameOptions& opt = {}) {
  ground.validate();
  if (ground.edges.empty()) throw ConfigError("graph dueling needs a nonempty edge set");
  std::vector<Vector> features;
  std::vector<Matrix> maps;
  for (auto [a, b] : ground.edges) {
    features.push_back(ground.features[a] + ground.features[b]);
    maps.push_back((ground.features[a] - ground.features[b]).transpose());
  }
  const int d = static_cast<int>(features.front().size());
  const ParameterSet theta = opt.param_set.value_or(ParameterSet::full_space(d));
  LinearGame g(features, maps, theta, resolve_bound(theta, opt), opt.noise_sigma.value_or(1.0),
               Structure::graph_dueling);
  g.pairs = ground.edges;
  return g;
}

// Finite game with reward matrix R (k×d) and signal function Φ (k×d over [m]).
// φ_a is row a of R and (S_a)_{σ,x} = 1{Φ(a,x) = σ}; Θ is the outcome
// simplex and ρ = 2. When Θ is overridden by a set that is not the simplex,
// the signal matrices are centered: the component along 1 of a one-hot
// observation is constant and carries no information about θ.
inline LinearGame embed_finite_pm(const Matrix& R, const Eigen::MatrixXi& signals, int symbols,
                                  const GameOptions& opt = {}) {
  const auto k = R.rows();
  const auto d = R.cols();
  if (k < 1 || d < 1) throw ConfigError("reward matrix must be nonempty");
  if (signals.rows() != k || signals.cols() != d) throw ConfigError("signal matrix shape differs from reward matrix");
  if (!R.allFinite()) throw ConfigError("reward matrix has non-finite entries");
  if (symbols < 1) throw ConfigError("need at least one signal symbol");
  if (signals.size() && (signals.minCoeff() < 0 || signals.maxCoeff() >= symbols))
    throw ConfigError("signal index out of range");
  const ParameterSet theta = opt.param_set.value_or(ParameterSet::simplex(static_cast<int>(d)));
  const bool centered = theta.kind() != ParameterSet::Kind::simplex;
  std::vector<Vector> features;
  std::vector<Matrix> maps;
  for (Eigen::Index a = 0; a < k; ++a) {
    features.push_back(R.row(a).transpose());
    Matrix S = Matrix::Zero(symbols, d);
    for (Eigen::Index x = 0; x < d; ++x) S(signals(a, x), x) = 1.0;
    if (centered) S.array() -= 1.0 / symbols;
    maps.push_back(S);
  }
  LinearGame g(features, maps, theta, resolve_bound(theta, opt), opt.noise_sigma.value_or(2.0), Structure::finite_pm);
  g.finite_pm = FinitePm{signals, symbols, centered};
  return g;
}

// Prices double as outcomes; the customer buys (signal 0) iff price <= value.
// R(a, x) = (a − x)·1{a <= x} − c·1{a > x}.
inline LinearGame build_dynamic_pricing(const std::vector<double>& prices, double cost, const GameOptions& opt = {}) {
  if (prices.empty()) throw ConfigError("dynamic pricing needs prices");
  if (!(cost > 0.0)) throw ConfigError("opportunity cost must be positive");
  const auto n = static_cast<Eigen::Index>(prices.size());
  Matrix R(n, n);
  Eigen::MatrixXi S(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index x = 0; x < n; ++x) {
      const bool buys = prices[a] <= prices[x];
      R(a, x) = buys ? prices[a] - prices[x] : -cost;
      S(a, x) = buys ? 0 : 1;
    }
  return embed_finite_pm(R, S, 2, opt);
}

// k Bernoulli arms as a finite game over the 2^k joint outcomes x ∈ {0,1}^k,
// with R(a, x) = Φ(a, x) = x_a.
inline LinearGame build_bernoulli_bandit(int arms, const GameOptions& opt = {}) {
  if (arms < 1 || arms > 16) throw ConfigError("bernoulli bandit supports 1..16 arms");
  const Eigen::Index d = Eigen::Index{1} << arms;
  Matrix R(arms, d);
  Eigen::MatrixXi S(arms, d);
  for (int a = 0; a < arms; ++a)
    for (Eigen::Index x = 0; x < d; ++x) {
      const int bit = static_cast<int>((x >> a) & 1);
      R(a, x) = bit;
      S(a, x) = bit;
    }
  return embed_finite_pm(R, S, 2, opt);
}

}  // namespace pmids
