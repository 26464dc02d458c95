#pragma once

// Cells, Pareto / degenerate / dominated labels, observability, alignment
// bounds from estimation weights, and the four-way classification.

#include <pmids/game.hpp>
#include <pmids/lp.hpp>

#include <optional>
#include <random>
#include <string>
#include <vector>

namespace pmids {

enum class CellLabel { pareto, degenerate, dominated, duplicate };

inline std::string cell_label_name(CellLabel l) {
  switch (l) {
    case CellLabel::pareto: return "pareto";
    case CellLabel::degenerate: return "degenerate";
    case CellLabel::dominated: return "dominated";
    case CellLabel::duplicate: return "duplicate";
  }
  return "?";
}

enum class GameClass { trivial, easy, hard, hopeless };

inline std::string game_class_name(GameClass c) {
  switch (c) {
    case GameClass::trivial: return "trivial";
    case GameClass::easy: return "easy";
    case GameClass::hard: return "hard";
    case GameClass::hopeless: return "hopeless";
  }
  return "?";
}

struct CellReport {
  std::vector<CellLabel> labels;
  std::vector<int> duplicate_of;  // class representative; itself for representatives
  std::vector<int> dims;          // dim(C_a); −1 when empty
  std::vector<std::optional<Vector>> witness;
  int theta_dim = 0;

  std::vector<int> pareto() const {
    std::vector<int> out;
    for (std::size_t a = 0; a < labels.size(); ++a)
      if (labels[a] == CellLabel::pareto) out.push_back(static_cast<int>(a));
    return out;
  }
};

namespace geometry_detail {

inline constexpr double kMargins[] = {1e-4, 1e-6, 1e-8};
inline constexpr int kWitnesses = 50;
inline constexpr double kRankCutoff = 1e-7;

// Cells of a linear objective over R^d are cones, so the full space is
// probed through the unit ball without changing any label or dimension.
inline ParameterSet cell_domain(const ParameterSet& theta) {
  if (theta.kind() == ParameterSet::Kind::full_space) return ParameterSet::ball(Vector::Zero(theta.dim()), 1.0);
  return theta;
}

// Polyhedron P = {A θ <= b, E θ = f} intersected with Θ.
struct Region {
  Matrix A, E;
  Vector b, f;
};

inline Region with_domain(const ParameterSet& dom, Region r) {
  if (dom.kind() == ParameterSet::Kind::ball) return r;
  Matrix At, Et;
  Vector bt, ft;
  dom.linear_constraints(At, bt, Et, ft);
  Region out;
  out.A.resize(r.A.rows() + At.rows(), dom.dim());
  out.A << r.A, At;
  out.b.resize(r.b.size() + bt.size());
  out.b << r.b, bt;
  out.E.resize(r.E.rows() + Et.rows(), dom.dim());
  out.E << r.E, Et;
  out.f.resize(r.f.size() + ft.size());
  out.f << r.f, ft;
  return out;
}

// Some point of P ∩ Θ, or nothing. On a ball this is the point of P
// closest to the center.
inline std::optional<Vector> feasible_point(const ParameterSet& dom, const Region& region) {
  const Region r = with_domain(dom, region);
  const auto res = lp::maximize(Vector::Zero(dom.dim()), r.A, r.b, r.E, r.f);
  if (res.status == lp::Status::infeasible) return std::nullopt;
  if (dom.kind() != ParameterSet::Kind::ball) return res.x;
  const Vector x = ParameterSet::qp_active_set(Matrix::Identity(dom.dim(), dom.dim()), dom.center(), r.A, r.b, r.E, r.f,
                                               res.x);
  if ((x - dom.center()).norm() > dom.radius() * (1.0 + 1e-10)) return std::nullopt;
  return x;
}

// Up to kWitnesses points of P ∩ Θ spread by random objectives (polytopes)
// or by projecting random points and pulling them into the ball.
inline std::vector<Vector> witnesses(const ParameterSet& dom, const Region& region, const Vector& base,
                                     std::mt19937_64& rng) {
  const Region r = with_domain(dom, region);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<Vector> pts{base};
  for (int i = 0; i < kWitnesses; ++i) {
    Vector u(dom.dim());
    for (auto& x : u) x = n01(rng);
    if (dom.kind() != ParameterSet::Kind::ball) {
      const auto res = lp::maximize(u, r.A, r.b, r.E, r.f);
      if (res.status == lp::Status::optimal) pts.push_back(res.x);
      continue;
    }
    const Vector target = dom.center() + dom.radius() * u.normalized();
    const Vector q = ParameterSet::qp_active_set(Matrix::Identity(dom.dim(), dom.dim()), target, r.A, r.b, r.E, r.f, base);
    // Largest s in [0,1] with base + s(q − base) in the ball.
    const Vector dir = q - base, off = base - dom.center();
    const double aa = dir.squaredNorm(), bb = 2.0 * dir.dot(off), cc = off.squaredNorm() - dom.radius() * dom.radius();
    double s = 1.0;
    if (aa > 0.0) s = std::clamp((-bb + std::sqrt(std::max(bb * bb - 4.0 * aa * cc, 0.0))) / (2.0 * aa), 0.0, 1.0);
    pts.push_back(base + s * dir);
  }
  return pts;
}

inline int affine_rank(const std::vector<Vector>& pts) {
  if (pts.size() < 2) return pts.empty() ? -1 : 0;
  Matrix D(pts.front().size(), static_cast<Eigen::Index>(pts.size()) - 1);
  for (std::size_t i = 1; i < pts.size(); ++i) D.col(static_cast<Eigen::Index>(i) - 1) = pts[i] - pts[0];
  if (D.norm() == 0.0) return 0;
  const Vector sv = Eigen::JacobiSVD<Matrix>(D).singularValues();
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > kRankCutoff * std::max(1.0, sv(0))) ++rank;
  return rank;
}

// Rows −(φ_a − φ_c)/‖φ_a − φ_c‖ θ <= −margin for every c outside a's class.
inline Region cell_region(const LinearGame& g, const std::vector<int>& owner, int a, double margin) {
  std::vector<Vector> rows;
  for (int c = 0; c < g.k(); ++c) {
    if (owner[c] == owner[a]) continue;
    const Vector diff = g.feature(a) - g.feature(c);
    rows.push_back(-diff / diff.norm());
  }
  Region r;
  r.A.resize(static_cast<Eigen::Index>(rows.size()), g.d());
  for (std::size_t i = 0; i < rows.size(); ++i) r.A.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  r.b = Vector::Constant(r.A.rows(), -margin);
  r.E.resize(0, g.d());
  r.f.resize(0);
  return r;
}

inline std::vector<int> owners(const LinearGame& g) {
  std::vector<int> owner(g.k());
  for (const auto& cls : g.duplicate_classes())
    for (int a : cls) owner[a] = cls.front();
  return owner;
}

inline double margin_scale(const ParameterSet& dom) { return std::max(dom.radius_bound(), 1e-12); }

}  // namespace geometry_detail

inline CellReport cell_decomposition(const LinearGame& g, std::uint64_t seed = 0) {
  using namespace geometry_detail;
  const ParameterSet dom = cell_domain(g.param_set());
  const std::vector<int> owner = owners(g);
  std::mt19937_64 rng(seed);
  CellReport rep;
  rep.theta_dim = dom.affine_dim();
  rep.labels.resize(g.k());
  rep.duplicate_of = owner;
  rep.dims.assign(g.k(), -1);
  rep.witness.resize(g.k());
  const double scale = margin_scale(dom);
  for (int a = 0; a < g.k(); ++a) {
    if (owner[a] != a) continue;
    std::optional<Vector> w;
    for (double eps : kMargins)
      if ((w = feasible_point(dom, cell_region(g, owner, a, eps * scale)))) break;
    if (w) {
      rep.labels[a] = CellLabel::pareto;
      rep.dims[a] = rep.theta_dim;
      rep.witness[a] = w;
      continue;
    }
    const Region closed = cell_region(g, owner, a, 0.0);
    w = feasible_point(dom, closed);
    if (!w) {
      rep.labels[a] = CellLabel::dominated;
      continue;
    }
    rep.labels[a] = CellLabel::degenerate;
    rep.witness[a] = w;
    rep.dims[a] = std::min(affine_rank(witnesses(dom, closed, *w, rng)), rep.theta_dim - 1);
  }
  for (int a = 0; a < g.k(); ++a) {
    if (owner[a] == a) continue;
    rep.labels[a] = CellLabel::duplicate;
    rep.dims[a] = rep.dims[owner[a]];
    rep.witness[a] = rep.witness[owner[a]];
  }
  return rep;
}

// Some action whose cell is all of Θ: min_{θ∈Θ} ⟨φ_a − φ_b, θ⟩ >= 0 for all b.
inline std::optional<int> trivial_action(const LinearGame& g) {
  const ParameterSet dom = geometry_detail::cell_domain(g.param_set());
  const double tol = 1e-10 * geometry_detail::margin_scale(dom);
  for (int a = 0; a < g.k(); ++a) {
    bool all = true;
    for (int b = 0; b < g.k() && all; ++b)
      if (b != a) all = -dom.support(g.feature(b) - g.feature(a)) >= -tol * (1.0 + (g.feature(b) - g.feature(a)).norm());
    if (all) return a;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Estimation weights

struct PairWeights {
  int a = 0, b = 0;
  std::vector<int> subset;
  std::vector<Vector> w;   // w_{ab}^c for c in subset (m_c-vectors)
  bool feasible = false;
  bool converged = false;
  double residual = 0.0;   // ‖Proj_V(φ_a − φ_b − Σ M_cᵀ w_c)‖
  double norm_sum = 0.0;   // Σ_c ‖w_c‖

  double bound() const { return norm_sum * norm_sum; }
};

// Minimum Σ_c ‖w_c‖ with Proj_V Σ_c M_cᵀ w_c = Proj_V(φ_a − φ_b), by IRLS
// on the group norm started from the least-norm solution.
inline PairWeights estimation_weights(const LinearGame& g, int a, int b, const std::vector<int>& subset,
                                      int iterations = 200, double smoothing = 1e-9) {
  const Matrix U = geometry_detail::cell_domain(g.param_set()).difference_basis();
  PairWeights out;
  out.a = a;
  out.b = b;
  out.subset = subset;
  const Vector target = U.transpose() * (g.feature(a) - g.feature(b));
  Eigen::Index cols = 0;
  std::vector<Eigen::Index> off;
  for (int c : subset) {
    off.push_back(cols);
    cols += g.feedback(c).rows();
  }
  Matrix A(U.cols(), cols);
  for (std::size_t i = 0; i < subset.size(); ++i)
    A.middleCols(off[i], g.feedback(subset[i]).rows()) = U.transpose() * g.feedback(subset[i]).transpose();
  auto split = [&](const Vector& x) {
    std::vector<Vector> w;
    for (std::size_t i = 0; i < subset.size(); ++i) w.push_back(x.segment(off[i], g.feedback(subset[i]).rows()));
    return w;
  };
  auto group_sum = [&](const Vector& x) {
    double s = 0.0;
    for (const auto& wc : split(x)) s += wc.norm();
    return s;
  };
  const double tnorm = target.norm();
  if (tnorm == 0.0) {
    out.feasible = out.converged = true;
    out.w = split(Vector::Zero(cols));
    return out;
  }
  if (cols == 0) return out;
  Vector x = A.completeOrthogonalDecomposition().solve(target);
  out.residual = (A * x - target).norm();
  if (out.residual > 1e-8 * tnorm) return out;
  out.feasible = true;
  Vector best = x;
  double best_sum = group_sum(x);
  for (int it = 0; it < iterations; ++it) {
    // Weighted least norm: minimize Σ ‖w_c‖² / s_c with s_c = ‖w_c‖ + smoothing.
    Vector s(cols);
    const auto w = split(x);
    for (std::size_t i = 0; i < subset.size(); ++i) s.segment(off[i], w[i].size()).setConstant(w[i].norm() + smoothing);
    const Matrix AS = A * s.asDiagonal();
    const Vector z = (AS * A.transpose()).completeOrthogonalDecomposition().solve(target);
    const Vector next = s.asDiagonal() * (A.transpose() * z);
    const double change = (next - x).norm();
    x = next;
    if ((A * x - target).norm() <= 1e-8 * tnorm) {
      const double sum = group_sum(x);
      if (sum < best_sum) {
        best_sum = sum;
        best = x;
      }
    }
    if (change <= 1e-12 * (1.0 + x.norm())) {
      out.converged = true;
      break;
    }
  }
  // With one row per map the group norm is an L1 norm and the minimum is an
  // LP: maximize −Σu over (w, u) with −u <= w <= u and Aw = target. IRLS
  // only approaches degenerate optima sublinearly, so the LP result replaces
  // it when feasible and smaller.
  if (cols == static_cast<Eigen::Index>(subset.size())) {
    const Eigen::Index n = cols;
    Vector c = Vector::Zero(2 * n);
    c.tail(n).setConstant(-1.0);
    Matrix G = Matrix::Zero(2 * n, 2 * n);
    G.topLeftCorner(n, n) = Matrix::Identity(n, n);
    G.topRightCorner(n, n) = -Matrix::Identity(n, n);
    G.bottomLeftCorner(n, n) = -Matrix::Identity(n, n);
    G.bottomRightCorner(n, n) = -Matrix::Identity(n, n);
    Matrix E = Matrix::Zero(A.rows(), 2 * n);
    E.leftCols(n) = A;
    const auto r = lp::maximize(c, G, Vector::Zero(2 * n), E, target);
    if (r.status == lp::Status::optimal) {
      const Vector w = r.x.head(n);
      const double sum = w.lpNorm<1>();
      if ((A * w - target).norm() <= 1e-8 * tnorm && sum < best_sum) {
        best_sum = sum;
        best = w;
        out.converged = true;
      }
    }
  }
  out.w = split(best);
  out.norm_sum = best_sum;
  out.residual = (A * best - target).norm();
  return out;
}

// ---------------------------------------------------------------------------
// Observability

struct NeighborPair {
  int a = 0, b = 0;
  std::vector<int> local;  // actions whose cells contain C_a ∩ C_b
};

// Pareto representatives a < b whose cells meet in dimension dim(Θ) − 1.
inline std::vector<NeighborPair> neighbor_pairs(const LinearGame& g, const CellReport& cells) {
  using namespace geometry_detail;
  const ParameterSet dom = cell_domain(g.param_set());
  const Matrix U = dom.difference_basis();
  const std::vector<int>& owner = cells.duplicate_of;
  const double scale = margin_scale(dom);
  std::vector<NeighborPair> out;
  std::vector<int> reps;
  for (int a : cells.pareto())
    if (owner[a] == a) reps.push_back(a);
  for (std::size_t i = 0; i < reps.size(); ++i)
    for (std::size_t j = i + 1; j < reps.size(); ++j) {
      const int a = reps[i], b = reps[j];
      const Vector dab = g.feature(a) - g.feature(b);
      const Vector pab = U.transpose() * dab;
      // Constraints whose boundary is the face hyperplane itself only need >= 0.
      std::vector<bool> parallel(g.k(), false);
      for (int c = 0; c < g.k(); ++c) {
        const Vector pac = U.transpose() * (g.feature(a) - g.feature(c));
        if (pac.norm() > 0.0 && pab.norm() > 0.0)
          parallel[c] = std::abs(pac.dot(pab)) >= (1.0 - 1e-9) * pac.norm() * pab.norm();
      }
      std::optional<Vector> face;
      for (double eps : kMargins) {
        Region r;
        std::vector<std::pair<Vector, double>> rows;
        for (int c = 0; c < g.k(); ++c) {
          if (owner[c] == a || owner[c] == b) continue;
          const Vector dac = g.feature(a) - g.feature(c);
          rows.emplace_back(-dac / dac.norm(), parallel[c] ? 0.0 : -eps * scale);
        }
        r.A.resize(static_cast<Eigen::Index>(rows.size()), g.d());
        r.b.resize(r.A.rows());
        for (std::size_t q = 0; q < rows.size(); ++q) {
          r.A.row(static_cast<Eigen::Index>(q)) = rows[q].first.transpose();
          r.b(static_cast<Eigen::Index>(q)) = rows[q].second;
        }
        r.E = (dab / dab.norm()).transpose();
        r.f = Vector::Zero(1);
        if ((face = feasible_point(dom, r))) break;
      }
      if (!face) continue;
      NeighborPair np{a, b, {}};
      for (int c = 0; c < g.k(); ++c) {
        const bool on_face = owner[c] == a || owner[c] == b ||
                             (parallel[c] && std::abs((g.feature(a) - g.feature(c)).dot(*face)) <= 1e-9 * (1.0 + scale));
        if (on_face) np.local.push_back(c);
      }
      out.push_back(std::move(np));
    }
  return out;
}

struct ObservabilityReport {
  CellReport cells;
  std::optional<int> trivial;
  bool globally_observable = false;
  std::vector<PairWeights> global_weights;
  std::vector<NeighborPair> neighbors;
  bool locally_observable = false;
  std::vector<PairWeights> local_weights;
  double global_bound = 0.0;  // max over Pareto pairs of (Σ_c ‖w_c‖)²
  double local_bound = 0.0;   // same, restricted to neighbor-local sets
  GameClass classification = GameClass::hopeless;
  std::string note;
};

inline std::vector<int> all_actions(const LinearGame& g) {
  std::vector<int> all(g.k());
  for (int c = 0; c < g.k(); ++c) all[c] = c;
  return all;
}

inline ObservabilityReport observability(const LinearGame& g, std::uint64_t seed = 0) {
  ObservabilityReport rep;
  rep.cells = cell_decomposition(g, seed);
  rep.trivial = trivial_action(g);
  const std::vector<int> all = all_actions(g);
  std::vector<int> reps;
  for (int a : rep.cells.pareto())
    if (rep.cells.duplicate_of[a] == a) reps.push_back(a);
  rep.globally_observable = true;
  for (std::size_t i = 0; i < reps.size(); ++i)
    for (std::size_t j = i + 1; j < reps.size(); ++j) {
      auto w = estimation_weights(g, reps[i], reps[j], all);
      rep.globally_observable = rep.globally_observable && w.feasible;
      if (w.feasible) rep.global_bound = std::max(rep.global_bound, w.bound());
      rep.global_weights.push_back(std::move(w));
    }
  rep.neighbors = neighbor_pairs(g, rep.cells);
  rep.locally_observable = rep.globally_observable;
  for (const auto& np : rep.neighbors) {
    auto w = estimation_weights(g, np.a, np.b, np.local);
    rep.locally_observable = rep.locally_observable && w.feasible;
    if (w.feasible) rep.local_bound = std::max(rep.local_bound, w.bound());
    rep.local_weights.push_back(std::move(w));
  }
  if (rep.trivial) {
    rep.classification = GameClass::trivial;
  } else if (!rep.globally_observable) {
    rep.classification = GameClass::hopeless;
  } else if (rep.locally_observable) {
    rep.classification = GameClass::easy;
  } else {
    rep.classification = GameClass::hard;
    rep.note = "local status: undetermined (neighbor test failed, global observability holds)";
  }
  return rep;
}

inline bool is_globally_observable(const LinearGame& g) { return observability(g).globally_observable; }
inline GameClass classify_game(const LinearGame& g) { return observability(g).classification; }

enum class AlignmentMode { global, local };

inline double alignment_upper_bound(const LinearGame& g, AlignmentMode mode) {
  const auto rep = observability(g);
  if (!rep.globally_observable) throw HopelessProfile("alignment bound: game is not globally observable");
  if (mode == AlignmentMode::local) {
    if (!rep.locally_observable) throw std::invalid_argument("alignment bound: neighbor-local test fails");
    return rep.local_bound;
  }
  return rep.global_bound;
}

}  // namespace pmids
