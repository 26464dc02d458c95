#pragma once

// Regularized constrained least squares with elliptical confidence sets.

#include <pmids/game.hpp>

#include <boost/math/tools/roots.hpp>

#include <cstdint>

namespace pmids {

struct ConfidenceSet {
  double beta = 0.0;
  double delta = 1.0;
};

// Maximizer and value of a linear function over E_t ∩ Θ.
struct EllipsoidMax {
  double value = 0.0;
  Vector argmax;
};

class Estimator {
 public:
  static constexpr int kRefreshEvery = 256;

  Estimator(const ParameterSet& theta, const Matrix& basis, double lambda, double param_bound, double rho)
      : theta_(theta), W_(basis), lambda_(lambda), B_(param_bound), rho_(rho) {
    if (!(lambda > 0.0)) throw ConfigError("regularizer must be positive");
    const int d = theta.dim();
    V_ = lambda * Matrix::Identity(d, d);
    rhs_ = lambda * theta.prior();
    theta_hat_ = theta.prior();
    theta_unc_ = theta.prior();
    Wt_ = W_.transpose() * V_ * W_;
    logdet_Wt_ = logdet_spd(Wt_);
    refresh_factors();
  }

  // Uses the game's basis, Θ, B, ρ; λ defaults to max(L, 1).
  static Estimator for_game(const LinearGame& g, std::optional<double> lambda = std::nullopt) {
    return Estimator(g.param_set(), g.basis(), lambda.value_or(std::max(g.feature_bound(), 1.0)), g.param_bound(),
                     g.noise_sigma());
  }

  // Adds one observation y = M θ + noise.
  void update(const Matrix& M, const Vector& y) {
    if (M.cols() != dim() || y.size() != M.rows()) throw std::invalid_argument("update: shape mismatch");
    if (!y.allFinite()) throw std::invalid_argument("update: non-finite observation");
    logdet_Wt_ += 2.0 * info_gain(M);
    V_.noalias() += M.transpose() * M;
    rhs_.noalias() += M.transpose() * y;
    const Matrix B = M * W_;
    Wt_.noalias() += B.transpose() * B;
    ++t_;
    if (++since_refresh_ >= kRefreshEvery) {
      refresh_factors();
    } else {
      for (Eigen::Index i = 0; i < M.rows(); ++i) {
        if (M.row(i).squaredNorm() == 0.0) continue;
        cholV_.rankUpdate(Vector(M.row(i).transpose()), 1.0);
        if (W_.cols()) cholW_.rankUpdate(Vector(B.row(i).transpose()), 1.0);
      }
    }
    theta_unc_ = cholV_.solve(rhs_);
    eig_V_.reset();
    theta_hat_ = theta_.project_metric(theta_unc_, V_, theta_.kind() == ParameterSet::Kind::ball ? &eigen_V() : nullptr);
  }

  void update(const LinearGame& g, int a, const Vector& y) { update(g.feedback(a), y); }

  // Number of the current round: 1 before any data.
  std::int64_t t() const { return t_; }
  int dim() const { return theta_.dim(); }
  int rank() const { return static_cast<int>(W_.cols()); }
  double lambda() const { return lambda_; }
  double param_bound() const { return B_; }
  double rho() const { return rho_; }
  const ParameterSet& param_set() const { return theta_; }
  const Matrix& V() const { return V_; }
  const Matrix& W() const { return W_; }
  const Matrix& Wt() const { return Wt_; }
  const Vector& theta_hat() const { return theta_hat_; }
  const Vector& theta_unconstrained() const { return theta_unc_; }
  double logdet_Wt() const { return logdet_Wt_; }

  Vector solve(const Vector& v) const { return cholV_.solve(v); }

  // Eigendecomposition of V, computed on first use after each update.
  const Eigen::SelfAdjointEigenSolver<Matrix>& eigen_V() const {
    if (!eig_V_) eig_V_.emplace(V_);
    return *eig_V_;
  }

  // ‖v‖²_{V⁻¹}
  double feature_uncertainty(const Vector& v) const {
    const Vector z = cholV_.matrixL().solve(v);
    return z.squaredNorm();
  }

  // ½ log det(I + (MW) W_t⁻¹ (MW)ᵀ)
  double info_gain(const Matrix& M) const {
    if (W_.cols() == 0 || M.rows() == 0) return 0.0;
    const Matrix B = M * W_;
    const Matrix Z = cholW_.matrixL().solve(B.transpose());
    Matrix S = Z.transpose() * Z;
    S.diagonal().array() += 1.0;
    return std::max(0.0, 0.5 * logdet_spd(S));
  }

  // ½(log det W_t − r log λ)
  double total_information_gain() const { return 0.5 * (logdet_Wt_ - rank() * std::log(lambda_)); }

  double recompute_logdet_Wt() const {
    if (W_.cols() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Matrix> es(W_.transpose() * V_ * W_);
    return es.eigenvalues().array().log().sum();
  }

  // β^{1/2} = ρ √(2 log 1/δ + log det W_t − r log λ) + √λ B
  double beta(double delta) const {
    if (!(delta > 0.0) || delta > 1.0) throw std::invalid_argument("confidence level must lie in (0, 1]");
    const double inner = std::max(0.0, 2.0 * std::log(1.0 / delta) + 2.0 * total_information_gain());
    const double root = rho_ * std::sqrt(inner) + std::sqrt(lambda_) * B_;
    return root * root;
  }

  ConfidenceSet confidence(double delta) const { return {beta(delta), delta}; }
  // δ_t = 1/t²
  ConfidenceSet confidence_schedule() const {
    const double tt = static_cast<double>(t_);
    return confidence(1.0 / (tt * tt));
  }

  bool covers(const Vector& theta, const ConfidenceSet& conf) const {
    const Vector e = theta_hat_ - theta;
    return e.dot(V_ * e) <= conf.beta * (1.0 + 1e-12);
  }

 private:
  void refresh_factors() {
    cholV_.compute(V_);
    if (W_.cols()) cholW_.compute(Wt_);
    since_refresh_ = 0;
  }

  ParameterSet theta_;
  Matrix W_;
  double lambda_;
  double B_;
  double rho_;
  std::int64_t t_ = 1;
  int since_refresh_ = 0;
  Matrix V_, Wt_;
  Vector rhs_, theta_hat_, theta_unc_;
  double logdet_Wt_ = 0.0;
  Eigen::LLT<Matrix> cholV_, cholW_;
  mutable std::optional<Eigen::SelfAdjointEigenSolver<Matrix>> eig_V_;
};

inline double feature_uncertainty(const Estimator& est, const Vector& v) { return est.feature_uncertainty(v); }
inline double total_information_gain(const Estimator& est) { return est.total_information_gain(); }
inline double confidence_coefficient(const Estimator& est, double delta) { return est.beta(delta); }

// max ⟨v, θ⟩ over {‖θ − θ̂‖²_V <= β} ∩ Θ. FullSpace is closed form. For
// bounded Θ the ellipsoid constraint is dualized: for η > 0 the inner
// maximizer is the V-projection of θ̂ + V⁻¹v/η onto Θ, and η is tuned so the
// maximizer sits on the ellipsoid boundary. The returned value is the dual
// bound, which is never below the true maximum.
inline EllipsoidMax ellipsoid_max_linear(const Estimator& est, const ConfidenceSet& conf, const Vector& v) {
  const Vector& c = est.theta_hat();
  EllipsoidMax out{c.dot(v), c};
  const double unc = est.feature_uncertainty(v);
  if (unc <= 0.0 || conf.beta <= 0.0) return out;
  const Vector dir = est.solve(v);
  const double root_beta = std::sqrt(conf.beta);
  const double norm = std::sqrt(unc);
  if (est.param_set().kind() == ParameterSet::Kind::full_space) {
    out.value = c.dot(v) + root_beta * norm;
    out.argmax = c + (root_beta / norm) * dir;
    return out;
  }
  const ParameterSet& theta = est.param_set();
  const Matrix& V = est.V();
  const auto* eig = theta.kind() == ParameterSet::Kind::ball ? &est.eigen_V() : nullptr;
  auto point = [&](double eta) { return theta.project_metric(c + dir / eta, V, eig); };
  auto dist2 = [&](const Vector& x) {
    const Vector e = x - c;
    return e.dot(V * e);
  };
  auto dual = [&](double eta, const Vector& x) { return v.dot(x) - 0.5 * eta * (dist2(x) - conf.beta); };
  // η₀ puts the unconstrained maximizer on the boundary; the projection only
  // shrinks V-distances, so feasibility holds for all η >= η₀.
  const double eta0 = norm / root_beta;
  const double log_hi = std::log(eta0);
  const Vector vertex = theta.support_point(v);
  if (dist2(vertex) <= conf.beta) {
    out.value = v.dot(vertex);
    out.argmax = vertex;
    return out;
  }
  auto f = [&](double s) { return std::log(std::max(dist2(point(std::exp(s))), 1e-300)) - std::log(conf.beta); };
  if (f(log_hi) >= 0.0) {
    const Vector x = point(eta0);
    out.value = std::max(dual(eta0, x), v.dot(x));
    out.argmax = x;
    return out;
  }
  // f decreases in s. Walk down until the projected point leaves the
  // ellipsoid; past e⁻³⁰ the support value is returned as the bound.
  double upper = log_hi, lower = log_hi - 2.0;
  while (f(lower) < 0.0) {
    upper = lower;
    lower -= 2.0;
    if (lower < log_hi - 30.0) {
      out.value = theta.support(v);
      out.argmax = point(std::exp(upper));
      return out;
    }
  }
  boost::uintmax_t iters = 200;
  auto tol = [](double a, double b) { return std::abs(b - a) <= 1e-12 * (1.0 + std::abs(a)); };
  const auto [s_lo, s_hi] = boost::math::tools::toms748_solve(f, lower, upper, tol, iters);
  // Evaluate both bracket ends; the feasible end gives the argmax.
  const double eta_hi = std::exp(s_hi);
  const double eta_lo = std::exp(s_lo);
  const Vector x_hi = point(eta_hi);
  const Vector x_lo = point(eta_lo);
  out.value = std::min(dual(eta_hi, x_hi), dual(eta_lo, x_lo));
  out.argmax = x_hi;
  out.value = std::max(out.value, v.dot(x_hi));
  return out;
}

}  // namespace pmids
