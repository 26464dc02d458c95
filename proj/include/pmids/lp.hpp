#pragma once

// Dense two-phase simplex for small linear programs over free variables:
//   maximize c^T x  s.t.  A x <= b,  E x = f.
// Bland's rule throughout, so it terminates on degenerate problems. Sized
// for the cell and face programs in geometry.hpp (tens of rows and columns).

#include <pmids/core.hpp>

#include <vector>

namespace pmids::lp {

enum class Status { optimal, infeasible, unbounded };

struct Result {
  Status status = Status::infeasible;
  Vector x;
  double value = -kInf;
};

namespace detail {

class Tableau {
 public:
  Tableau(Eigen::Index rows, Eigen::Index cols) : t_(Matrix::Zero(rows + 1, cols + 1)), basis_(rows, -1) {}

  Matrix& t() { return t_; }
  std::vector<Eigen::Index>& basis() { return basis_; }
  Eigen::Index rows() const { return t_.rows() - 1; }
  Eigen::Index cols() const { return t_.cols() - 1; }
  double& rhs(Eigen::Index i) { return t_(i, cols()); }
  double& cost(Eigen::Index j) { return t_(rows(), j); }

  void pivot(Eigen::Index r, Eigen::Index c) {
    t_.row(r) /= t_(r, c);
    for (Eigen::Index i = 0; i < t_.rows(); ++i) {
      if (i == r) continue;
      const double f = t_(i, c);
      if (f != 0.0) t_.row(i) -= f * t_.row(r);
    }
    basis_[r] = c;
  }

  // Minimizes the cost row over columns [0, allowed). Returns false if unbounded.
  bool minimize(Eigen::Index allowed, double tol) {
    for (int iter = 0; iter < 100000; ++iter) {
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < allowed; ++j) {
        if (cost(j) < -tol) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return true;
      Eigen::Index leave = -1;
      double best = kInf;
      for (Eigen::Index i = 0; i < rows(); ++i) {
        const double a = t_(i, enter);
        if (a <= tol) continue;
        const double ratio = rhs(i) / a;
        if (ratio < best - tol || (ratio <= best + tol && leave >= 0 && basis_[i] < basis_[leave])) {
          best = ratio;
          leave = i;
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
    }
    throw std::runtime_error("lp: iteration limit");
  }

 private:
  Matrix t_;
  std::vector<Eigen::Index> basis_;
};

}  // namespace detail

inline Result maximize(const Vector& c, const Matrix& A, const Vector& b, const Matrix& E, const Vector& f,
                       double tol = 1e-10) {
  const Eigen::Index n = c.size();
  const Eigen::Index ma = A.rows();
  const Eigen::Index me = E.rows();
  const Eigen::Index m = ma + me;
  // Columns: x+ (n), x- (n), slacks (ma), artificials (m).
  const Eigen::Index nx = 2 * n;
  const Eigen::Index ns = nx + ma;
  const Eigen::Index ncol = ns + m;
  detail::Tableau tab(m, ncol);
  Matrix& t = tab.t();
  for (Eigen::Index i = 0; i < m; ++i) {
    const bool ineq = i < ma;
    Eigen::RowVectorXd row = ineq ? Eigen::RowVectorXd(A.row(i)) : Eigen::RowVectorXd(E.row(i - ma));
    double r = ineq ? b(i) : f(i - ma);
    double sign = r < 0.0 ? -1.0 : 1.0;
    t.block(i, 0, 1, n) = sign * row;
    t.block(i, n, 1, n) = -sign * row;
    if (ineq) t(i, nx + i) = sign;
    t(i, ns + i) = 1.0;
    tab.rhs(i) = sign * r;
    tab.basis()[i] = ns + i;
  }
  // Phase 1: minimize the sum of artificials.
  for (Eigen::Index j = 0; j < ns; ++j) tab.cost(j) = -t.col(j).head(m).sum();
  tab.rhs(m) = -t.col(ncol).head(m).sum();
  tab.minimize(ns, tol);
  const double scale = 1.0 + (m > 0 ? t.col(ncol).head(m).cwiseAbs().maxCoeff() : 0.0);
  Result res;
  if (-tab.rhs(m) > 1e-8 * scale) return res;
  // Drive remaining artificials out of the basis; redundant rows stay with a
  // zero right-hand side and are harmless once artificial columns are frozen.
  for (Eigen::Index i = 0; i < m; ++i) {
    if (tab.basis()[i] < ns) continue;
    for (Eigen::Index j = 0; j < ns; ++j) {
      if (std::abs(t(i, j)) > 1e-9) {
        tab.pivot(i, j);
        break;
      }
    }
  }
  // Phase 2 with cost -c on x+ and +c on x- (minimization form).
  Vector cost = Vector::Zero(ncol);
  cost.head(n) = -c;
  cost.segment(n, n) = c;
  t.row(m).setZero();
  for (Eigen::Index j = 0; j < ncol; ++j) t(m, j) = cost(j);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index bi = tab.basis()[i];
    if (cost(bi) != 0.0) t.row(m) -= cost(bi) * t.row(i);
  }
  if (!tab.minimize(ns, tol)) {
    res.status = Status::unbounded;
    res.value = kInf;
    return res;
  }
  Vector z = Vector::Zero(ncol);
  for (Eigen::Index i = 0; i < m; ++i) z(tab.basis()[i]) = tab.rhs(i);
  res.status = Status::optimal;
  res.x = z.head(n) - z.segment(n, n);
  res.value = c.dot(res.x);
  return res;
}

inline Result maximize(const Vector& c, const Matrix& A, const Vector& b, double tol = 1e-10) {
  return maximize(c, A, b, Matrix(0, c.size()), Vector(0), tol);
}

}  // namespace pmids::lp
