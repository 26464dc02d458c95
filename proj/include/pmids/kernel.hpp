#pragma once

// Kernel least squares for partial-monitoring feedback in data space, the
// kernelized IDS quantities, and the O(|I|) dueling policy.

#include <pmids/ids.hpp>
#include <pmids/trace.hpp>

#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace pmids {

// ---------------------------------------------------------------------------
// Kernels

struct ScalarKernel {
  std::string name;
  std::function<double(const Vector&, const Vector&)> eval;

  static ScalarKernel linear() {
    return {"linear", [](const Vector& x, const Vector& y) { return x.dot(y); }};
  }
  static ScalarKernel polynomial(int degree, double offset) {
    if (degree < 1) throw ConfigError("polynomial kernel degree must be >= 1");
    if (offset < 0.0) throw ConfigError("polynomial kernel offset must be >= 0");
    return {"polynomial", [=](const Vector& x, const Vector& y) { return std::pow(x.dot(y) + offset, degree); }};
  }
  static ScalarKernel rbf(double bandwidth) {
    if (!(bandwidth > 0.0)) throw ConfigError("rbf bandwidth must be positive");
    return {"rbf", [=](const Vector& x, const Vector& y) {
              return std::exp(-(x - y).squaredNorm() / (2.0 * bandwidth * bandwidth));
            }};
  }

  Matrix gram(const std::vector<Vector>& pts) const {
    const auto n = static_cast<Eigen::Index>(pts.size());
    Matrix G(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i; j < n; ++j) G(i, j) = G(j, i) = eval(pts[i], pts[j]);
    return G;
  }
};

// k(a, b, a', b') = [[k_φ(a,a'), k_φM(a,b')], [k_φM(a',b)ᵀ, k_M(b,b')]]
struct JointKernel {
  int actions = 0;
  int m = 1;
  std::function<double(int, int)> phi;       // ⟨φ_a, φ_a'⟩
  std::function<Matrix(int, int)> feedback;  // M_b M_b'*  (m×m)
  std::function<Vector(int, int)> cross;     // (φ_a M_b'*)ᵀ (m)

  Matrix block(int a, int b, int a2, int b2) const {
    Matrix out(m + 1, m + 1);
    out(0, 0) = phi(a, a2);
    out.block(0, 1, 1, m) = cross(a, b2).transpose();
    out.block(1, 0, m, 1) = cross(a2, b);
    out.block(1, 1, m, m) = feedback(b, b2);
    return out;
  }
};

// Finite-dimensional game: φ and M given explicitly.
inline JointKernel linear_joint_kernel(const LinearGame& g) {
  JointKernel k;
  k.actions = g.k();
  k.m = g.m();
  k.phi = [g](int a, int b) { return g.feature(a).dot(g.feature(b)); };
  k.feedback = [g](int a, int b) -> Matrix { return g.feedback(a) * g.feedback(b).transpose(); };
  k.cross = [g](int a, int b) -> Vector { return g.feedback(b) * g.feature(a); };
  return k;
}

// Bandit over a finite ground set: φ_a = M_a = k_a.
inline JointKernel bandit_joint_kernel(const Matrix& gram) {
  JointKernel k;
  k.actions = static_cast<int>(gram.rows());
  k.m = 1;
  k.phi = [gram](int a, int b) { return gram(a, b); };
  k.feedback = [gram](int a, int b) -> Matrix { return Matrix::Constant(1, 1, gram(a, b)); };
  k.cross = [gram](int a, int b) -> Vector { return Vector::Constant(1, gram(a, b)); };
  return k;
}

// Dueling over a ground set of size n; action (a¹, a²) has index a¹·n + a²,
// φ = k_{a¹} + k_{a²}, M = k_{a¹} − k_{a²}.
inline JointKernel dueling_joint_kernel(const Matrix& gram) {
  const int n = static_cast<int>(gram.rows());
  JointKernel k;
  k.actions = n * n;
  k.m = 1;
  k.phi = [gram, n](int a, int b) {
    const int a1 = a / n, a2 = a % n, b1 = b / n, b2 = b % n;
    return gram(a1, b1) + gram(a2, b1) + gram(a1, b2) + gram(a2, b2);
  };
  k.feedback = [gram, n](int a, int b) -> Matrix {
    const int a1 = a / n, a2 = a % n, b1 = b / n, b2 = b % n;
    return Matrix::Constant(1, 1, gram(a1, b1) - gram(a2, b1) - gram(a1, b2) + gram(a2, b2));
  };
  k.cross = [gram, n](int a, int b) -> Vector {
    const int a1 = a / n, a2 = a % n, b1 = b / n, b2 = b % n;
    return Vector::Constant(1, gram(a1, b1) + gram(a2, b1) - gram(a1, b2) - gram(a2, b2));
  };
  return k;
}

// ---------------------------------------------------------------------------
// Growing Cholesky factor of K + (λ + jitter) I.

class GrowingCholesky {
 public:
  explicit GrowingCholesky(double shift) : shift_(shift) {}

  Eigen::Index size() const { return L_.rows(); }
  const Matrix& factor() const { return L_; }

  // Appends the block [[K, C], [Cᵀ, D]]; `full` is the whole new kernel
  // matrix, used only if the incremental pivot is not positive definite.
  void append(const Matrix& C, const Matrix& D, const Matrix& full) {
    const Eigen::Index n = L_.rows(), m = D.rows();
    Matrix L21t = C;
    if (n > 0) L_.triangularView<Eigen::Lower>().solveInPlace(L21t);
    Matrix S = D;
    S.diagonal().array() += shift_;
    S.noalias() -= L21t.transpose() * L21t;
    Eigen::LLT<Matrix> llt(S);
    if (llt.info() != Eigen::Success) {
      refresh(full);
      return;
    }
    Matrix next = Matrix::Zero(n + m, n + m);
    next.topLeftCorner(n, n) = L_;
    next.bottomLeftCorner(m, n) = L21t.transpose();
    next.bottomRightCorner(m, m) = llt.matrixL();
    L_.swap(next);
  }

  void refresh(const Matrix& K) {
    Matrix A = K;
    A.diagonal().array() += shift_;
    Eigen::LLT<Matrix> llt(A);
    if (llt.info() != Eigen::Success) throw std::runtime_error("kernel matrix factorization failed");
    L_ = llt.matrixL();
  }

  // (K + shift I)⁻¹ r
  Vector solve(const Vector& r) const {
    if (L_.rows() == 0) return Vector::Zero(0);
    Vector x = L_.triangularView<Eigen::Lower>().solve(r);
    L_.triangularView<Eigen::Lower>().transpose().solveInPlace(x);
    return x;
  }

  // L⁻¹ R (columns)
  Matrix half_solve(const Matrix& R) const {
    if (L_.rows() == 0) return Matrix::Zero(0, R.cols());
    return L_.triangularView<Eigen::Lower>().solve(R);
  }

  double logdet() const { return L_.rows() ? 2.0 * L_.diagonal().array().log().sum() : 0.0; }

 private:
  double shift_;
  Matrix L_;
};

inline double kernel_beta(double logdet_ratio, double lambda, double B, double rho, double delta) {
  if (!(delta > 0.0) || delta > 1.0) throw std::invalid_argument("confidence level must lie in (0, 1]");
  const double root = rho * std::sqrt(std::max(0.0, 2.0 * std::log(1.0 / delta) + logdet_ratio)) + std::sqrt(lambda) * B;
  return root * root;
}

// ---------------------------------------------------------------------------
// Kernel least squares for general feedback

class KernelEstimator {
 public:
  KernelEstimator(JointKernel kernel, double lambda, double param_bound, double rho, double jitter = 1e-10)
      : kernel_(std::move(kernel)), lambda_(lambda), B_(param_bound), rho_(rho), chol_(lambda + jitter) {
    if (!(lambda > 0.0)) throw ConfigError("regularizer must be positive");
    if (kernel_.actions < 1 || kernel_.m < 1) throw ConfigError("joint kernel needs actions and feedback rows");
  }

  const JointKernel& kernel() const { return kernel_; }
  std::int64_t t() const { return static_cast<std::int64_t>(history_.size()) + 1; }
  double lambda() const { return lambda_; }
  double param_bound() const { return B_; }
  double rho() const { return rho_; }
  const Matrix& K() const { return K_; }
  const Vector& observations() const { return y_; }

  void update(int b, const Vector& y) {
    const int m = kernel_.m;
    if (b < 0 || b >= kernel_.actions) throw std::invalid_argument("update: unknown action");
    if (y.size() != m || !y.allFinite()) throw std::invalid_argument("update: bad observation");
    const Eigen::Index n = K_.rows();
    Matrix C(n, m);
    for (std::size_t s = 0; s < history_.size(); ++s) C.middleRows(s * m, m) = kernel_.feedback(history_[s], b);
    const Matrix D = kernel_.feedback(b, b);
    K_.conservativeResize(n + m, n + m);
    K_.topRightCorner(n, m) = C;
    K_.bottomLeftCorner(m, n) = C.transpose();
    K_.bottomRightCorner(m, m) = D;
    y_.conservativeResize(n + m);
    y_.tail(m) = y;
    history_.push_back(b);
    chol_.append(C, D, K_);
    alpha_ = chol_.solve(y_);
  }

  // k_t(a) = [φ_a M_{a_s}*]_s
  Vector weights(int a) const {
    const int m = kernel_.m;
    Vector w(K_.rows());
    for (std::size_t s = 0; s < history_.size(); ++s) w.segment(s * m, m) = kernel_.cross(a, history_[s]);
    return w;
  }

  // L_t(a) = M_a Φ_t* (m × m(t−1))
  Matrix feedback_weights(int a) const {
    const int m = kernel_.m;
    Matrix L(m, K_.rows());
    for (std::size_t s = 0; s < history_.size(); ++s) L.middleCols(s * m, m) = kernel_.feedback(a, history_[s]);
    return L;
  }

  double predict(int a) const { return history_.empty() ? 0.0 : weights(a).dot(alpha_); }

  // log det(I + λ⁻¹ K_t)
  double logdet_ratio() const { return chol_.logdet() - static_cast<double>(K_.rows()) * std::log(lambda_); }
  double total_information_gain() const { return 0.5 * logdet_ratio(); }

  double beta(double delta) const { return kernel_beta(logdet_ratio(), lambda_, B_, rho_, delta); }
  ConfidenceSet confidence_schedule() const {
    const double delta = 1.0 / (static_cast<double>(t()) * static_cast<double>(t()));
    return {beta(delta), delta};
  }

  // ψ_t(a, b) = λ⁻¹(ψ(a,b) − ‖(k_t(a) − k_t(b))‖²_{(K+λI)⁻¹})
  double metric(int a, int b) const {
    if (a == b) return 0.0;
    const double base = kernel_.phi(a, a) + kernel_.phi(b, b) - 2.0 * kernel_.phi(a, b);
    if (history_.empty()) return std::max(base, 0.0) / lambda_;
    const Vector r = chol_.half_solve(weights(a) - weights(b));
    return std::max(base - r.squaredNorm(), 0.0) / lambda_;
  }

  // ½ log det(I + λ⁻¹(k_M(a,a) − L_t(a)(K + λI)⁻¹L_t(a)ᵀ))
  double info_gain(int a) const {
    Matrix S = kernel_.feedback(a, a);
    if (!history_.empty()) {
      const Matrix R = chol_.half_solve(feedback_weights(a).transpose());
      S.noalias() -= R.transpose() * R;
    }
    S = 0.5 * (S + S.transpose()) / lambda_;
    if (S.norm() == 0.0) return 0.0;
    S.diagonal().array() += 1.0;
    Eigen::SelfAdjointEigenSolver<Matrix> es(S);
    return 0.5 * es.eigenvalues().cwiseMax(1.0).array().log().sum();
  }

 private:
  JointKernel kernel_;
  double lambda_, B_, rho_;
  GrowingCholesky chol_;
  Matrix K_;
  Vector y_, alpha_;
  std::vector<int> history_;
};

inline double kernel_predict(const KernelEstimator& est, int a) { return est.predict(a); }
inline double kernel_confidence(const KernelEstimator& est, double delta) { return est.beta(delta); }
inline double kernel_metric(const KernelEstimator& est, int a, int b) { return est.metric(a, b); }
inline double kernel_info_gain(const KernelEstimator& est, int a) { return est.info_gain(a); }

// Δ̂(a) = min{max_b f̂(â) + √(β ψ_t(â, b)) − f̂(a), cap} with â = argmax f̂
// (lowest index on ties); cap defaults to B.
inline Vector kernel_gap(const KernelEstimator& est, double beta, std::optional<double> cap = std::nullopt) {
  const int k = est.kernel().actions;
  Vector f(k);
  for (int a = 0; a < k; ++a) f(a) = est.predict(a);
  Eigen::Index best = 0;
  f.maxCoeff(&best);
  const int ahat = static_cast<int>(best);
  double width = 0.0;
  for (int b = 0; b < k; ++b) width = std::max(width, std::sqrt(std::max(beta, 0.0) * est.metric(ahat, b)));
  const double c = cap.value_or(est.param_bound());
  Vector gaps(k);
  for (int a = 0; a < k; ++a) gaps(a) = std::min(f(ahat) + width - f(a), c);
  return gaps.cwiseMax(0.0);
}

inline GapInfoProfile kernel_profile(const KernelEstimator& est, double beta) {
  const int k = est.kernel().actions;
  GapInfoProfile p;
  p.gaps = kernel_gap(est, beta);
  p.infos.resize(k);
  for (int a = 0; a < k; ++a) p.infos(a) = est.info_gain(a);
  Eigen::Index g = 0;
  p.gaps.minCoeff(&g);
  p.greedy = static_cast<int>(g);
  return p;
}

// ---------------------------------------------------------------------------
// Kernelized dueling with utility g on a finite ground set

class DuelingKernelState {
 public:
  DuelingKernelState(Matrix gram, double lambda, double param_bound, double rho, double jitter = 1e-10)
      : G_(std::move(gram)), lambda_(lambda), B_(param_bound), rho_(rho), chol_(lambda + jitter) {
    if (G_.rows() < 1 || G_.rows() != G_.cols()) throw ConfigError("dueling gram matrix must be square");
    if (!(lambda > 0.0)) throw ConfigError("regularizer must be positive");
  }

  int ground() const { return static_cast<int>(G_.rows()); }
  const Matrix& gram() const { return G_; }
  std::int64_t t() const { return static_cast<std::int64_t>(pairs_.size()) + 1; }
  double lambda() const { return lambda_; }
  double param_bound() const { return B_; }
  double rho() const { return rho_; }
  const Matrix& K() const { return K_; }
  const std::vector<std::pair<int, int>>& pairs() const { return pairs_; }

  void update(int a1, int a2, double y) {
    const int n = ground();
    if (a1 < 0 || a2 < 0 || a1 >= n || a2 >= n) throw std::invalid_argument("update: unknown ground action");
    if (!std::isfinite(y)) throw std::invalid_argument("update: non-finite observation");
    const Eigen::Index t = K_.rows();
    Matrix C(t, 1);
    for (Eigen::Index s = 0; s < t; ++s) C(s, 0) = pair_kernel(pairs_[s], {a1, a2});
    const double D = pair_kernel({a1, a2}, {a1, a2});
    K_.conservativeResize(t + 1, t + 1);
    K_.topRightCorner(t, 1) = C;
    K_.bottomLeftCorner(1, t) = C.transpose();
    K_(t, t) = D;
    y_.conservativeResize(t + 1);
    y_(t) = y;
    pairs_.emplace_back(a1, a2);
    chol_.append(C, Matrix::Constant(1, 1, D), K_);
    alpha_ = chol_.solve(y_);
    // Weight matrix for all ground actions: column a holds k_t^g(a).
    Kg_.conservativeResize(t + 1, ground());
    for (int a = 0; a < ground(); ++a) Kg_(t, a) = G_(a, a1) - G_(a, a2);
    half_ = chol_.half_solve(Kg_);
  }

  // k_t^g(a) = [k(a, a_s¹) − k(a, a_s²)]_s
  Vector weights(int a) const { return pairs_.empty() ? Vector::Zero(0) : Vector(Kg_.col(a)); }

  double utility(int a) const { return pairs_.empty() ? 0.0 : Kg_.col(a).dot(alpha_); }
  Vector utilities() const {
    if (pairs_.empty()) return Vector::Zero(ground());
    return Kg_.transpose() * alpha_;
  }

  // ψ_t^g(a, b) = λ⁻¹(ψ^g(a,b) − ‖k_t^g(a) − k_t^g(b)‖²_{(K+λI)⁻¹})
  double psi_g(int a, int b) const {
    if (a == b) return 0.0;
    const double base = G_(a, a) + G_(b, b) - 2.0 * G_(a, b);
    if (pairs_.empty()) return std::max(base, 0.0) / lambda_;
    return std::max(base - (half_.col(a) - half_.col(b)).squaredNorm(), 0.0) / lambda_;
  }

  // ψ_t^g(b, ref) for every b, one pass over the cached half-solve.
  Vector psi_g_to(int ref) const {
    Vector out(ground());
    for (int b = 0; b < ground(); ++b) out(b) = psi_g(b, ref);
    return out;
  }

  double logdet_ratio() const { return chol_.logdet() - static_cast<double>(K_.rows()) * std::log(lambda_); }
  double total_information_gain() const { return 0.5 * logdet_ratio(); }
  double beta(double delta) const { return kernel_beta(logdet_ratio(), lambda_, B_, rho_, delta); }
  ConfidenceSet confidence_schedule() const {
    const double delta = 1.0 / (static_cast<double>(t()) * static_cast<double>(t()));
    return {beta(delta), delta};
  }

 private:
  double pair_kernel(std::pair<int, int> r, std::pair<int, int> s) const {
    return G_(r.first, s.first) - G_(r.second, s.first) - G_(r.first, s.second) + G_(r.second, s.second);
  }

  Matrix G_;
  double lambda_, B_, rho_;
  GrowingCholesky chol_;
  Matrix K_, Kg_, half_;
  Vector y_, alpha_;
  std::vector<std::pair<int, int>> pairs_;
};

inline double dueling_utility_estimate(const DuelingKernelState& s, int a) { return s.utility(a); }
inline double dueling_psi_g(const DuelingKernelState& s, int a, int b) { return s.psi_g(a, b); }

// Mixture of the greedy pair (â, â) and the pair (â, c).
struct DuelingDecision {
  int greedy = 0;
  int partner = 0;
  double p = 0.0;       // probability of (â, c)
  double delta = 0.0;   // δ_t
  double gap = 0.0;     // Δ̂(μ)
  double info = 0.0;    // I(μ)
  double ratio = 0.0;   // Ψ(μ)
};

// p_t(c) = min(2δ / (Δ̂^g(c) − δ), 1); Δ̂^g(c) >= δ always, equality reads as 1.
inline double dueling_tradeoff(double delta, double gap_c) {
  const double denom = gap_c - delta;
  if (denom <= 0.0) return 1.0;
  return std::min(2.0 * delta / denom, 1.0);
}

inline DuelingDecision dueling_policy(const DuelingKernelState& s, double beta) {
  const Vector g = s.utilities();
  Eigen::Index best = 0;
  g.maxCoeff(&best);
  const int ahat = static_cast<int>(best);
  const Vector psi = s.psi_g_to(ahat);
  double delta = 0.0;
  for (int b = 0; b < s.ground(); ++b) delta = std::max(delta, g(b) - g(ahat) + std::sqrt(std::max(beta, 0.0) * psi(b)));
  DuelingDecision d;
  d.greedy = d.partner = ahat;
  d.delta = delta;
  if (delta <= 0.0) return d;
  d.ratio = kInf;
  for (int c = 0; c < s.ground(); ++c) {
    const double info = 0.5 * std::log1p(psi(c));
    if (c == ahat || info <= 0.0) continue;
    const double gap_c = delta + g(ahat) - g(c);
    const double p = dueling_tradeoff(delta, gap_c);
    const double gap = (1.0 - p) * 2.0 * delta + p * (delta + gap_c);
    const double r = gap * gap / (p * info);
    if (r < d.ratio) {
      d.ratio = r;
      d.partner = c;
      d.p = p;
      d.gap = gap;
      d.info = p * info;
    }
  }
  if (d.partner == ahat) d.gap = 2.0 * delta;  // no informative partner
  return d;
}

struct DuelingRunOptions {
  double noise_sigma = 1.0;
};

// Utility g on the ground set; reward of (a¹, a²) is g(a¹) + g(a²).
inline RunResult simulate_dueling(DuelingKernelState state, const Vector& utility, std::int64_t n, std::uint64_t seed,
                                  const DuelingRunOptions& opt = {}) {
  if (utility.size() != state.ground()) throw ConfigError("utility size must match the ground set");
  std::mt19937_64 rng(seed);
  const double top = utility.maxCoeff();
  RunResult res;
  res.policy = "dueling_ids";
  res.seed = seed;
  res.rounds.reserve(static_cast<std::size_t>(n));
  double cum = 0.0;
  for (std::int64_t t = 1; t <= n; ++t) {
    const ConfidenceSet conf = state.confidence_schedule();
    const DuelingDecision d = dueling_policy(state, conf.beta);
    const Vector g_hat = state.utilities();
    PolicyDecision dec{{d.greedy * state.ground() + d.greedy, d.greedy * state.ground() + d.partner}, {1.0 - d.p, d.p}};
    const int pick = sample(dec, rng);
    const int a1 = pick / state.ground(), a2 = pick % state.ground();
    const double inst = 2.0 * top - utility(a1) - utility(a2);
    cum += inst;
    const double gap_est = a2 == d.greedy ? 2.0 * d.delta : d.delta + d.delta + g_hat(d.greedy) - g_hat(a2);
    const double info = 0.5 * std::log1p(state.psi_g(a1, a2));
    state.update(a1, a2, utility(a1) - utility(a2) + gaussian_noise(rng, 1, opt.noise_sigma)(0));
    res.rounds.push_back({t, 0, pick, inst, cum, gap_est, info, d.ratio, -1, conf.beta, state.total_information_gain()});
  }
  return res;
}

}  // namespace pmids
