#pragma once

// Convex parameter sets and the projections used by the estimator.

#include <pmids/core.hpp>

#include <algorithm>
#include <numeric>
#include <optional>
#include <vector>

namespace pmids {

class ParameterSet {
 public:
  enum class Kind { full_space, ball, simplex, box };

  static ParameterSet full_space(int d, std::optional<Vector> prior = std::nullopt) {
    ParameterSet s(Kind::full_space, d);
    s.prior_ = prior ? *prior : Vector::Zero(d);
    return s;
  }
  static ParameterSet ball(const Vector& center, double radius) {
    if (!(radius > 0.0)) throw ConfigError("ball radius must be positive");
    ParameterSet s(Kind::ball, static_cast<int>(center.size()));
    s.center_ = center;
    s.radius_ = radius;
    s.prior_ = center;
    return s;
  }
  // {θ >= 0, Σθ = mass}
  static ParameterSet simplex(int d, double mass = 1.0) {
    if (d < 1 || !(mass > 0.0)) throw ConfigError("simplex needs d >= 1 and positive mass");
    ParameterSet s(Kind::simplex, d);
    s.mass_ = mass;
    s.prior_ = Vector::Constant(d, mass / d);
    return s;
  }
  static ParameterSet box(const Vector& lower, const Vector& upper) {
    if (lower.size() != upper.size() || (upper - lower).minCoeff() < 0.0)
      throw ConfigError("box bounds must satisfy lower <= upper");
    ParameterSet s(Kind::box, static_cast<int>(lower.size()));
    s.lower_ = lower;
    s.upper_ = upper;
    s.prior_ = 0.5 * (lower + upper);
    return s;
  }

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  const Vector& prior() const { return prior_; }
  const Vector& center() const { return center_; }
  double radius() const { return radius_; }
  double mass() const { return mass_; }
  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }
  bool bounded() const { return kind_ != Kind::full_space; }

  // Moves θ₀ inside the set; it must already belong to it.
  void set_prior(const Vector& p) {
    if (p.size() != dim_ || !contains(p, 1e-9)) throw ConfigError("prior estimate outside parameter set");
    prior_ = p;
  }

  std::string name() const {
    switch (kind_) {
      case Kind::full_space: return "full";
      case Kind::ball: return "ball";
      case Kind::simplex: return "simplex";
      case Kind::box: return "box";
    }
    return "?";
  }

  bool contains(const Vector& x, double tol = 1e-8) const {
    switch (kind_) {
      case Kind::full_space: return x.allFinite();
      case Kind::ball: return (x - center_).norm() <= radius_ * (1.0 + tol) + tol;
      case Kind::simplex: return x.minCoeff() >= -tol && std::abs(x.sum() - mass_) <= tol * (1.0 + mass_);
      case Kind::box: return (x - lower_).minCoeff() >= -tol && (upper_ - x).minCoeff() >= -tol;
    }
    return false;
  }

  // sup_{θ∈Θ} ‖θ − θ₀‖.
  double radius_bound() const {
    switch (kind_) {
      case Kind::full_space: return kInf;
      case Kind::ball: return radius_ + (prior_ - center_).norm();
      case Kind::simplex: {
        double best = 0.0;
        for (int i = 0; i < dim_; ++i) {
          Vector v = -prior_;
          v(i) += mass_;
          best = std::max(best, v.norm());
        }
        return best;
      }
      case Kind::box: return (upper_ - prior_).cwiseAbs().cwiseMax((lower_ - prior_).cwiseAbs()).norm();
    }
    return kInf;
  }

  // max_{θ∈Θ} ⟨v, θ⟩.
  double support(const Vector& v) const { return v.dot(support_point(v)); }

  // A maximizer of ⟨v, θ⟩ over Θ (lowest index on ties). FullSpace returns
  // θ₀ when v = 0 and throws otherwise.
  Vector support_point(const Vector& v) const {
    switch (kind_) {
      case Kind::full_space:
        if (v.squaredNorm() == 0.0) return prior_;
        throw std::domain_error("support of the full space is unbounded");
      case Kind::ball: {
        const double n = v.norm();
        return n > 0.0 ? Vector(center_ + radius_ * v / n) : center_;
      }
      case Kind::simplex: {
        Eigen::Index i;
        v.maxCoeff(&i);
        Vector x = Vector::Zero(dim_);
        x(i) = mass_;
        return x;
      }
      case Kind::box: {
        Vector x(dim_);
        for (int i = 0; i < dim_; ++i) x(i) = v(i) > 0.0 ? upper_(i) : (v(i) < 0.0 ? lower_(i) : prior_(i));
        return x;
      }
    }
    return prior_;
  }

  // Orthonormal basis of V = span{θ − ν : θ, ν ∈ Θ}.
  Matrix difference_basis() const {
    switch (kind_) {
      case Kind::full_space:
      case Kind::ball: return Matrix::Identity(dim_, dim_);
      case Kind::simplex: {
        if (dim_ == 1) return Matrix(1, 0);
        Matrix diffs(dim_, dim_ - 1);
        for (int i = 0; i + 1 < dim_; ++i) {
          diffs.col(i).setZero();
          diffs(i, i) = 1.0;
          diffs(dim_ - 1, i) = -1.0;
        }
        return column_span(diffs);
      }
      case Kind::box: {
        std::vector<int> free;
        for (int i = 0; i < dim_; ++i)
          if (upper_(i) > lower_(i)) free.push_back(i);
        Matrix w = Matrix::Zero(dim_, static_cast<Eigen::Index>(free.size()));
        for (std::size_t j = 0; j < free.size(); ++j) w(free[j], static_cast<Eigen::Index>(j)) = 1.0;
        return w;
      }
    }
    return Matrix::Identity(dim_, dim_);
  }

  int affine_dim() const { return static_cast<int>(difference_basis().cols()); }

  // Θ scaled about the origin by s > 0.
  ParameterSet scaled(double s) const {
    ParameterSet out = *this;
    out.prior_ *= s;
    out.center_ *= s;
    out.radius_ *= s;
    out.mass_ *= s;
    out.lower_ *= s;
    out.upper_ *= s;
    return out;
  }

  // Linear description A θ <= b, E θ = f (Box and Simplex only).
  void linear_constraints(Matrix& A, Vector& b, Matrix& E, Vector& f) const {
    const int d = dim_;
    if (kind_ == Kind::simplex) {
      A = -Matrix::Identity(d, d);
      b = Vector::Zero(d);
      E = Matrix::Ones(1, d);
      f = Vector::Constant(1, mass_);
    } else if (kind_ == Kind::box) {
      std::vector<int> free, fixed;
      for (int i = 0; i < d; ++i) (upper_(i) > lower_(i) ? free : fixed).push_back(i);
      A = Matrix::Zero(2 * static_cast<Eigen::Index>(free.size()), d);
      b = Vector::Zero(A.rows());
      for (std::size_t j = 0; j < free.size(); ++j) {
        A(2 * j, free[j]) = 1.0;
        b(2 * j) = upper_(free[j]);
        A(2 * j + 1, free[j]) = -1.0;
        b(2 * j + 1) = -lower_(free[j]);
      }
      E = Matrix::Zero(static_cast<Eigen::Index>(fixed.size()), d);
      f = Vector::Zero(E.rows());
      for (std::size_t j = 0; j < fixed.size(); ++j) {
        E(j, fixed[j]) = 1.0;
        f(j) = lower_(fixed[j]);
      }
    } else {
      throw std::logic_error("linear_constraints: not a polytope");
    }
  }

  // Euclidean projection.
  Vector project(const Vector& x) const {
    switch (kind_) {
      case Kind::full_space: return x;
      case Kind::ball: {
        const Vector r = x - center_;
        const double n = r.norm();
        return n <= radius_ ? x : Vector(center_ + radius_ * r / n);
      }
      case Kind::simplex: return project_simplex(x, mass_);
      case Kind::box: return x.cwiseMax(lower_).cwiseMin(upper_);
    }
    return x;
  }

  // argmin_{θ∈Θ} ‖θ − u‖²_V for SPD V. `eig`, when given, is the
  // eigendecomposition of V and saves recomputing it for the ball.
  Vector project_metric(const Vector& u, const Matrix& V,
                        const Eigen::SelfAdjointEigenSolver<Matrix>* eig = nullptr) const {
    switch (kind_) {
      case Kind::full_space: return u;
      case Kind::ball: return eig ? project_ball_metric(u, *eig) : project_ball_metric(u, Eigen::SelfAdjointEigenSolver<Matrix>(V));
      case Kind::simplex:
      case Kind::box: {
        if (contains(u, 0.0)) return u;
        Matrix A, E;
        Vector b, f;
        linear_constraints(A, b, E, f);
        return qp_active_set(V, u, A, b, E, f, project(u));
      }
    }
    return u;
  }

  // Sort-based Euclidean projection onto {x >= 0, Σx = mass}.
  static Vector project_simplex(const Vector& x, double mass) {
    Vector s = x;
    std::sort(s.data(), s.data() + s.size(), std::greater<double>());
    double cum = 0.0, tau = 0.0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      cum += s(i);
      const double cand = (cum - mass) / static_cast<double>(i + 1);
      if (s(i) - cand > 0.0) tau = cand;
    }
    return (x.array() - tau).cwiseMax(0.0);
  }

  // Primal active-set method for min ½(θ−u)ᵀV(θ−u) s.t. Aθ <= b, Eθ = f,
  // started from a feasible x0. Exact up to linear-solve accuracy.
  static Vector qp_active_set(const Matrix& V, const Vector& u, const Matrix& A, const Vector& b, const Matrix& E,
                              const Vector& f, Vector x, double tol = 1e-12) {
    const Eigen::Index d = x.size();
    const Vector g = V * u;
    std::vector<Eigen::Index> work;
    const double scale = b.size() ? 1.0 + b.cwiseAbs().maxCoeff() : 1.0;
    auto independent_with = [&](Eigen::Index i) {
      Matrix rows(E.rows() + static_cast<Eigen::Index>(work.size()) + 1, d);
      rows.topRows(E.rows()) = E;
      for (std::size_t j = 0; j < work.size(); ++j) rows.row(E.rows() + j) = A.row(work[j]);
      rows.bottomRows(1) = A.row(i);
      Eigen::FullPivLU<Matrix> lu(rows);
      lu.setThreshold(1e-10);
      return lu.rank() == rows.rows();
    };
    for (Eigen::Index i = 0; i < A.rows(); ++i)
      if (A.row(i).dot(x) >= b(i) - 1e-12 * scale && independent_with(i)) work.push_back(i);

    // After a full unblocked step x minimizes over the working set, so the
    // next solve only tests multipliers (its p is round-off).
    bool settled = false;
    for (int iter = 0; iter < 10000; ++iter) {
      const Eigen::Index nc = E.rows() + static_cast<Eigen::Index>(work.size());
      Matrix C(nc, d);
      C.topRows(E.rows()) = E;
      for (std::size_t j = 0; j < work.size(); ++j) C.row(E.rows() + j) = A.row(work[j]);
      Matrix K = Matrix::Zero(d + nc, d + nc);
      K.topLeftCorner(d, d) = V;
      K.topRightCorner(d, nc) = C.transpose();
      K.bottomLeftCorner(nc, d) = C;
      Vector rhs = Vector::Zero(d + nc);
      rhs.head(d) = g - V * x;
      const Vector sol = K.fullPivLu().solve(rhs);
      const Vector p = sol.head(d);
      const Vector mu = sol.tail(nc);  // V(x−u) + Cᵀμ = 0 at p = 0
      double alpha = 1.0;
      Eigen::Index block = -1;
      for (Eigen::Index i = 0; i < A.rows(); ++i) {
        if (std::find(work.begin(), work.end(), i) != work.end()) continue;
        const double ap = A.row(i).dot(p);
        if (ap <= 1e-14) continue;
        const double step = (b(i) - A.row(i).dot(x)) / ap;
        if (step < alpha) {
          alpha = std::max(step, 0.0);
          block = i;
        }
      }
      // A zero step blocked by a row that is numerically dependent on the
      // working set means p is round-off: treat x as stationary.
      const bool stalled = block >= 0 && alpha <= 0.0 && !independent_with(block);
      if (settled || stalled || p.norm() <= tol * (1.0 + x.norm())) {
        settled = false;
        // Multipliers of working inequalities must be nonnegative.
        Eigen::Index worst = -1;
        double most = -1e-12;
        for (std::size_t j = 0; j < work.size(); ++j) {
          const double m = mu(E.rows() + j);
          if (m < most) {
            most = m;
            worst = static_cast<Eigen::Index>(j);
          }
        }
        if (worst < 0) return x;
        work.erase(work.begin() + worst);
        continue;
      }
      x += alpha * p;
      if (block >= 0) {
        if (independent_with(block)) work.push_back(block);
      } else {
        settled = true;
      }
    }
    return x;
  }

 private:
  ParameterSet(Kind k, int d) : kind_(k), dim_(d) {
    if (d < 1) throw ConfigError("parameter dimension must be >= 1");
  }

  Vector project_ball_metric(const Vector& u, const Eigen::SelfAdjointEigenSolver<Matrix>& es) const {
    const Vector w = u - center_;
    if (w.norm() <= radius_) return u;
    // x(μ) = (V + μI)⁻¹ V w; ‖x(μ)‖ decreases in μ; solve ‖x‖ = radius.
    // Newton on 1/‖x(μ)‖ − 1/radius, which is close to linear in μ, kept
    // inside a shrinking bracket.
    const Vector lam = es.eigenvalues();
    const Vector wt = es.eigenvectors().transpose() * w;
    const Eigen::ArrayXd lw2 = (lam.array() * wt.array()).square();
    auto eval = [&](double mu, double& deriv) {
      const Eigen::ArrayXd den = lam.array() + mu;
      const double n2 = (lw2 / den.square()).sum();
      const double dn2 = -2.0 * (lw2 / den.cube()).sum();
      const double inv = 1.0 / std::sqrt(n2);
      deriv = -0.5 * inv * inv * inv * dn2;
      return inv - 1.0 / radius_;
    };
    double lo = 0.0, hi = lam.maxCoeff() * w.norm() / radius_;
    double d = 0.0;
    while (eval(hi, d) < 0.0) hi *= 2.0;
    double mu = hi;
    for (int i = 0; i < 100; ++i) {
      const double h = eval(mu, d);
      if (h == 0.0) {
        lo = hi = mu;
        break;
      }
      (h < 0.0 ? lo : hi) = mu;
      if (hi - lo <= 1e-15 * (1.0 + hi)) break;
      double next = mu - h / d;
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - mu) <= 1e-15 * (1.0 + mu)) {
        mu = next;
        break;
      }
      mu = next;
    }
    // The feasible side of the bracket keeps ‖x‖ <= radius.
    hi = eval(mu, d) >= 0.0 ? mu : hi;
    const Vector xt = (lam.array() * wt.array() / (lam.array() + hi)).matrix();
    return center_ + es.eigenvectors() * xt;
  }

  Kind kind_;
  int dim_;
  Vector prior_;
  Vector center_;
  double radius_ = 0.0;
  double mass_ = 1.0;
  Vector lower_, upper_;
};

}  // namespace pmids
