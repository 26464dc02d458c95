#pragma once

// Gap estimates, information gains and the IDS / E2D sampling decisions.

#include <pmids/estimation.hpp>

#include <random>
#include <vector>

namespace pmids {

struct GapInfoProfile {
  Vector gaps;
  Vector infos;
  double delta_offset = 0.0;
  int greedy = 0;

  int k() const { return static_cast<int>(gaps.size()); }
};

struct PolicyDecision {
  std::vector<int> support;
  std::vector<double> probs;
  double ratio = 0.0;  // Ψ₂ of the distribution
  int kappa = 2;
  double gap = 0.0;    // Δ̂(μ)
  double info = 0.0;   // I(μ)

  static PolicyDecision dirac(int a) { return {{a}, {1.0}}; }
};

// ---------------------------------------------------------------------------
// Gap estimates

// argmax ⟨φ_a, θ̂⟩, lowest index on ties.
inline int greedy_action(const Estimator& est, const LinearGame& g) {
  return g.best_action(est.theta_hat()).first;
}

// Δ̂(a) = max_b max_{θ∈E} ⟨φ_b − φ_a, θ⟩
inline Vector gap_full(const Estimator& est, const ConfidenceSet& conf, const LinearGame& g) {
  const int k = g.k();
  Vector gaps = Vector::Zero(k);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) {
      if (a == b) continue;
      gaps(a) = std::max(gaps(a), ellipsoid_max_linear(est, conf, g.feature(b) - g.feature(a)).value);
    }
  return gaps;
}

// δ_t = max_b max_E ⟨φ_b − φ_â, θ⟩ for the greedy â.
inline double gap_offset(const Estimator& est, const ConfidenceSet& conf, const LinearGame& g, int greedy) {
  double delta = 0.0;
  for (int b = 0; b < g.k(); ++b)
    if (b != greedy)
      delta = std::max(delta, ellipsoid_max_linear(est, conf, g.feature(b) - g.feature(greedy)).value);
  return delta;
}

// Δ̂(a; â) = δ_t + max_E ⟨φ_â − φ_a, θ⟩; returns the gaps and δ_t.
inline std::pair<Vector, double> gap_relaxed(const Estimator& est, const ConfidenceSet& conf, const LinearGame& g) {
  const int greedy = greedy_action(est, g);
  const double delta = gap_offset(est, conf, g, greedy);
  Vector gaps(g.k());
  for (int a = 0; a < g.k(); ++a)
    gaps(a) = a == greedy ? delta
                          : delta + ellipsoid_max_linear(est, conf, g.feature(greedy) - g.feature(a)).value;
  return {gaps.cwiseMax(0.0), delta};
}

// Largest true gap attainable on Θ (on the ball of radius B around θ₀ when
// Θ is the full space). Used as the truncation level.
inline double gap_bound(const LinearGame& g) {
  const ParameterSet& theta = g.param_set();
  double best = 0.0;
  for (int a = 0; a < g.k(); ++a)
    for (int b = 0; b < g.k(); ++b) {
      const Vector v = g.feature(b) - g.feature(a);
      const double s = theta.bounded() ? theta.support(v) : v.dot(theta.prior()) + g.param_bound() * v.norm();
      best = std::max(best, s);
    }
  return best;
}

// Δ̃(a; â) = min{δ_t + ⟨φ_â − φ_a, θ̂⟩, cap}. The default cap is gap_bound
// on bounded Θ and +∞ on the full space, where the confidence ellipsoid is
// not clipped and estimated gaps can exceed any fixed level.
inline Vector gap_truncated(const Estimator& est, const ConfidenceSet& conf, const LinearGame& g,
                            std::optional<double> cap = std::nullopt) {
  const int greedy = greedy_action(est, g);
  const double delta = gap_offset(est, conf, g, greedy);
  const double c = cap.value_or(g.param_set().bounded() ? gap_bound(g) : kInf);
  Vector gaps(g.k());
  for (int a = 0; a < g.k(); ++a)
    gaps(a) = std::min(delta + (g.feature(greedy) - g.feature(a)).dot(est.theta_hat()), c);
  return gaps.cwiseMax(0.0);
}

// ---------------------------------------------------------------------------
// Information gains

// I_t(a) = ½ log det(I + (M_a W) W_t⁻¹ (M_a W)ᵀ)
inline double info_logdet(const Estimator& est, const LinearGame& g, int a) { return est.info_gain(g.feedback(a)); }

inline Vector info_logdet(const Estimator& est, const LinearGame& g) {
  Vector out(g.k());
  for (int a = 0; a < g.k(); ++a) out(a) = info_logdet(est, g, a);
  return out;
}

// Actions that are optimal for some θ ∈ E_t pass this pairwise test
// (necessary condition): max_E ⟨φ_a − φ_b, θ⟩ >= 0 for every b.
inline std::vector<int> plausible_actions(const Estimator& est, const ConfidenceSet& conf, const LinearGame& g) {
  std::vector<int> out;
  for (int a = 0; a < g.k(); ++a) {
    bool ok = true;
    for (int b = 0; b < g.k() && ok; ++b)
      if (b != a && ellipsoid_max_linear(est, conf, g.feature(a) - g.feature(b)).value < -1e-12) ok = false;
    if (ok) out.push_back(a);
  }
  return out;
}

// J_t(a) = β⁻¹ · ½‖M_a(θ⁺ − θ⁻)‖². The pair objective separates, so θ⁺
// and θ⁻ are the two ellipsoid maximizers for the widest plausible pair.
inline Vector info_directed(const Estimator& est, const ConfidenceSet& conf, const LinearGame& g,
                            const std::vector<int>& plausible) {
  Vector out = Vector::Zero(g.k());
  if (conf.beta <= 0.0 || plausible.size() < 2) return out;
  double width = -kInf;
  Vector omega = Vector::Zero(g.d());
  for (int a : plausible)
    for (int b : plausible) {
      if (a >= b) continue;
      const Vector v = g.feature(b) - g.feature(a);
      const EllipsoidMax up = ellipsoid_max_linear(est, conf, v);
      const EllipsoidMax down = ellipsoid_max_linear(est, conf, -v);
      const double w = v.dot(up.argmax - down.argmax);
      if (w > width) {
        width = w;
        omega = up.argmax - down.argmax;
      }
    }
  for (int a = 0; a < g.k(); ++a) out(a) = 0.5 * (g.feedback(a) * omega).squaredNorm() / conf.beta;
  return out;
}

// ---------------------------------------------------------------------------
// Ratio minimization

// Optimal weight on the larger-gap action when mixing two actions with
// 0 < Δ₁ <= Δ₂. Δ₁/0 is read as +∞.
inline double tradeoff_closed_form(double d1, double d2, double i1, double i2) {
  if (!(d1 > 0.0)) throw std::invalid_argument("tradeoff_closed_form: needs positive first gap");
  if (d2 < d1) throw std::invalid_argument("tradeoff_closed_form: needs d1 <= d2");
  if (i1 < 0.0 || i2 < 0.0) throw std::invalid_argument("tradeoff_closed_form: negative information");
  if (i2 - i1 <= 1e-15) return 0.0;
  const double first = d2 > d1 ? d1 / (d2 - d1) : kInf;
  const double p = first - 2.0 * i1 / (i2 - i1);
  return std::clamp(p, 0.0, 1.0);
}

// x / 0 = ∞ for x > 0 and 0 / 0 = 0.
inline double ratio_value(double gap, double info, int kappa = 2) {
  const double num = std::pow(gap, kappa);
  if (info <= 0.0) return num > 0.0 ? kInf : 0.0;
  return num / info;
}

// Ψ_κ(μ) = Δ̂(μ)^κ / I(μ) for a full probability vector.
inline double information_ratio(const Vector& probs, const GapInfoProfile& prof, int kappa = 2) {
  if (kappa < 2) throw std::invalid_argument("information_ratio: kappa must be >= 2");
  if (probs.size() != prof.k()) throw std::invalid_argument("information_ratio: size mismatch");
  return ratio_value(probs.dot(prof.gaps.cwiseMax(0.0)), probs.dot(prof.infos), kappa);
}

inline double information_ratio(const PolicyDecision& dec, const GapInfoProfile& prof, int kappa = 2) {
  Vector p = Vector::Zero(prof.k());
  for (std::size_t i = 0; i < dec.support.size(); ++i) p(dec.support[i]) += dec.probs[i];
  return information_ratio(p, prof, kappa);
}

namespace detail {

inline void check_profile(const GapInfoProfile& prof) {
  if (prof.k() < 1 || prof.infos.size() != prof.gaps.size()) throw std::invalid_argument("profile: bad sizes");
  if (!prof.gaps.allFinite() || !prof.infos.allFinite()) throw std::invalid_argument("profile: non-finite entries");
}

inline PolicyDecision finish(PolicyDecision d, const GapInfoProfile& prof) {
  // Drop zero-mass atoms so the support lists only played actions.
  PolicyDecision out = d;
  out.support.clear();
  out.probs.clear();
  for (std::size_t i = 0; i < d.support.size(); ++i)
    if (d.probs[i] > 0.0) {
      out.support.push_back(d.support[i]);
      out.probs.push_back(d.probs[i]);
    }
  double gap = 0.0, info = 0.0;
  for (std::size_t i = 0; i < out.support.size(); ++i) {
    gap += out.probs[i] * std::max(prof.gaps(out.support[i]), 0.0);
    info += out.probs[i] * std::max(prof.infos(out.support[i]), 0.0);
  }
  out.gap = gap;
  out.info = info;
  out.ratio = ratio_value(gap, info);
  return out;
}

// Handles zero gaps and the all-zero-information cases shared by the IDS
// variants. Returns true when `out` holds the final decision.
inline bool degenerate_case(const GapInfoProfile& prof, PolicyDecision& out) {
  const Vector gaps = prof.gaps.cwiseMax(0.0);
  int zero = -1;
  for (int a = 0; a < prof.k(); ++a)
    if (gaps(a) == 0.0 && (zero < 0 || prof.infos(a) > prof.infos(zero))) zero = a;
  if (zero >= 0) {
    if (prof.infos(zero) <= 0.0 && prof.greedy >= 0 && prof.greedy < prof.k() && gaps(prof.greedy) == 0.0)
      zero = prof.greedy;
    out = finish(PolicyDecision::dirac(zero), prof);
    return true;
  }
  if (prof.infos.maxCoeff() <= 0.0) throw HopelessProfile("every action with positive gap has zero information");
  return false;
}

struct PairChoice {
  int first = -1, second = -1;
  double p = 0.0, ratio = kInf;
};

// Best mixture of a and b (either order).
inline PairChoice best_mixture(const Vector& gaps, const Vector& infos, int a, int b) {
  PairChoice c;
  int lo = a, hi = b;
  if (gaps(b) < gaps(a)) std::swap(lo, hi);
  const double d1 = std::max(gaps(lo), kGapFloor), d2 = std::max(gaps(hi), kGapFloor);
  const double p = tradeoff_closed_form(d1, std::max(d1, d2), infos(lo), infos(hi));
  c.first = lo;
  c.second = hi;
  c.p = p;
  c.ratio = ratio_value((1.0 - p) * gaps(lo) + p * gaps(hi), (1.0 - p) * infos(lo) + p * infos(hi));
  return c;
}

}  // namespace detail

// Exact minimizer of Ψ₂ over all distributions: scans every Dirac and every
// pair with the closed-form trade-off (an optimum with support <= 2 exists).
inline PolicyDecision ids_exact(const GapInfoProfile& prof) {
  detail::check_profile(prof);
  PolicyDecision out;
  if (detail::degenerate_case(prof, out)) return out;
  const Vector gaps = prof.gaps.cwiseMax(0.0);
  const Vector& infos = prof.infos;
  detail::PairChoice best;
  for (int a = 0; a < prof.k(); ++a) {
    const double r = ratio_value(gaps(a), infos(a));
    if (r < best.ratio) best = {a, a, 0.0, r};
  }
  for (int a = 0; a < prof.k(); ++a)
    for (int b = a + 1; b < prof.k(); ++b) {
      const auto c = detail::best_mixture(gaps, infos, a, b);
      if (c.ratio < best.ratio) best = c;
    }
  if (best.first == best.second) return detail::finish(PolicyDecision::dirac(best.first), prof);
  return detail::finish({{best.first, best.second}, {1.0 - best.p, best.p}}, prof);
}

// Mixes the minimum-gap action with the best single partner. Within a
// factor 4/3 of the exact ratio.
inline PolicyDecision ids_approximate(const GapInfoProfile& prof) {
  detail::check_profile(prof);
  PolicyDecision out;
  if (detail::degenerate_case(prof, out)) return out;
  const Vector gaps = prof.gaps.cwiseMax(0.0);
  const Vector& infos = prof.infos;
  Eigen::Index lead = 0;
  gaps.minCoeff(&lead);
  const int ahat = static_cast<int>(lead);
  detail::PairChoice best{ahat, ahat, 0.0, ratio_value(gaps(ahat), infos(ahat))};
  for (int b = 0; b < prof.k(); ++b) {
    if (b == ahat) continue;
    const auto c = detail::best_mixture(gaps, infos, ahat, b);
    if (c.ratio < best.ratio) best = c;
  }
  if (best.first == best.second) return detail::finish(PolicyDecision::dirac(best.first), prof);
  return detail::finish({{best.first, best.second}, {1.0 - best.p, best.p}}, prof);
}

// Dirac on argmin Δ̂(a) − λ I(a).
inline PolicyDecision e2d_policy(const GapInfoProfile& prof, double lambda) {
  detail::check_profile(prof);
  if (!(lambda > 0.0)) throw std::invalid_argument("e2d_policy: trade-off must be positive");
  int best = 0;
  double val = kInf;
  for (int a = 0; a < prof.k(); ++a) {
    const double v = std::max(prof.gaps(a), 0.0) - lambda * prof.infos(a);
    if (v < val) {
      val = v;
      best = a;
    }
  }
  return detail::finish(PolicyDecision::dirac(best), prof);
}

// Draws one action from the decision.
template <class Rng>
int sample(const PolicyDecision& dec, Rng& rng) {
  if (dec.support.empty()) throw std::invalid_argument("sample: empty decision");
  if (dec.support.size() == 1) return dec.support[0];
  const double u = std::generate_canonical<double, 53>(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < dec.support.size(); ++i) {
    acc += dec.probs[i];
    if (u < acc) return dec.support[i];
  }
  return dec.support.back();
}

}  // namespace pmids
