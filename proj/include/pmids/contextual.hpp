#pragma once

// Context-indexed games: conditional IDS (per observed context) and
// contextual IDS (joint over the known context distribution, Frank-Wolfe).

#include <pmids/ids.hpp>
#include <pmids/trace.hpp>

#include <optional>
#include <random>
#include <vector>

namespace pmids {

struct ContextSpec {
  std::vector<Vector> features;
  std::vector<Matrix> maps;
};

// All (z, a) pairs are stored as one flattened LinearGame so that a single
// estimator, rescaling and basis serve every context.
class ContextualGame {
 public:
  ContextualGame(const std::vector<ContextSpec>& contexts, const Vector& chi, const ParameterSet& theta,
                 std::optional<double> param_bound = std::nullopt, double noise_sigma = 1.0)
      : chi_(chi), joint_(flatten(contexts, theta, param_bound, noise_sigma)) {
    if (contexts.empty()) throw ConfigError("contextual game needs at least one context");
    if (chi.size() != static_cast<Eigen::Index>(contexts.size())) throw ConfigError("context distribution size");
    if ((chi.array() < 0.0).any() || std::abs(chi.sum() - 1.0) > 1e-9)
      throw ConfigError("context distribution must be nonnegative and sum to one");
    int off = 0;
    for (const auto& c : contexts) {
      if (c.features.empty()) throw ConfigError("every context needs an action");
      offsets_.push_back(off);
      off += static_cast<int>(c.features.size());
    }
    offsets_.push_back(off);
  }

  // One context carrying the whole game.
  static ContextualGame single(const LinearGame& g) {
    ContextSpec c;
    for (int a = 0; a < g.k(); ++a) {
      c.features.push_back(g.feature(a));
      c.maps.push_back(g.feedback(a));
    }
    return ContextualGame({c}, Vector::Ones(1), g.param_set(), g.param_bound(), g.noise_sigma());
  }

  int contexts() const { return static_cast<int>(chi_.size()); }
  int actions(int z) const { return offsets_[z + 1] - offsets_[z]; }
  int index(int z, int a) const { return offsets_[z] + a; }
  const Vector& chi() const { return chi_; }
  const LinearGame& joint() const { return joint_; }
  const Vector& feature(int z, int a) const { return joint_.feature(index(z, a)); }
  const Matrix& feedback(int z, int a) const { return joint_.feedback(index(z, a)); }

  // Best action in context z under an internal-units parameter.
  std::pair<int, double> best_action(int z, const Vector& theta) const {
    int best = 0;
    double val = -kInf;
    for (int a = 0; a < actions(z); ++a) {
      const double r = feature(z, a).dot(theta);
      if (r > val) {
        val = r;
        best = a;
      }
    }
    return {best, val};
  }

 private:
  static LinearGame flatten(const std::vector<ContextSpec>& contexts, const ParameterSet& theta,
                            std::optional<double> param_bound, double noise_sigma) {
    std::vector<Vector> f;
    std::vector<Matrix> m;
    for (const auto& c : contexts) {
      if (c.features.size() != c.maps.size()) throw ConfigError("context features and maps differ in count");
      f.insert(f.end(), c.features.begin(), c.features.end());
      m.insert(m.end(), c.maps.begin(), c.maps.end());
    }
    if (f.empty()) throw ConfigError("contextual game has no actions");
    GameOptions opt;
    opt.param_bound = param_bound;
    return LinearGame(f, m, theta, resolve_bound(theta, opt), noise_sigma);
  }

  Vector chi_;
  LinearGame joint_;
  std::vector<int> offsets_;
};

// ξ(a | z); one distribution per context.
struct ContextPolicy {
  std::vector<Vector> xi;
};

struct ContextualProfile {
  std::vector<Vector> gaps;   // Δ̂(a, z)
  std::vector<Vector> infos;  // I(a, z)
  std::vector<int> greedy;    // argmax_a ⟨φ_a^z, θ̂⟩
};

inline ContextualProfile contextual_profile(const Estimator& est, const ConfidenceSet& conf,
                                            const ContextualGame& cg) {
  ContextualProfile p;
  for (int z = 0; z < cg.contexts(); ++z) {
    const int k = cg.actions(z);
    Vector gaps = Vector::Zero(k), infos(k);
    for (int a = 0; a < k; ++a) {
      for (int b = 0; b < k; ++b)
        if (b != a)
          gaps(a) = std::max(gaps(a), ellipsoid_max_linear(est, conf, cg.feature(z, b) - cg.feature(z, a)).value);
      infos(a) = est.info_gain(cg.feedback(z, a));
    }
    p.gaps.push_back(gaps);
    p.infos.push_back(infos);
    p.greedy.push_back(cg.best_action(z, est.theta_hat()).first);
  }
  return p;
}

inline GapInfoProfile context_slice(const ContextualProfile& p, int z) {
  return {p.gaps[z], p.infos[z], 0.0, p.greedy[z]};
}

// IDS on the observed context alone. Throws HopelessProfile when every
// positive-gap action in z carries no information.
inline PolicyDecision conditional_ids(const ContextualProfile& p, int z) { return ids_exact(context_slice(p, z)); }

inline PolicyDecision conditional_ids(const Estimator& est, const ConfidenceSet& conf, const ContextualGame& cg,
                                      int z) {
  return conditional_ids(contextual_profile(est, conf, cg), z);
}

// Ψ(ξ, χ) = (Σ_z χ(z) Σ_a ξ(a|z) Δ̂(a,z))² / Σ_z χ(z) Σ_a ξ(a|z) (I(a,z) + ε)
inline double contextual_ratio(const ContextPolicy& pol, const ContextualProfile& p, const Vector& chi,
                               double eps = 0.0) {
  double gap = 0.0, info = 0.0;
  for (std::size_t z = 0; z < p.gaps.size(); ++z) {
    gap += chi(z) * pol.xi[z].dot(p.gaps[z].cwiseMax(0.0));
    info += chi(z) * (pol.xi[z].dot(p.infos[z]) + eps);
  }
  return ratio_value(gap, info);
}

// Frank-Wolfe over the product of simplices with step 2/(k+2), started from
// the uniform kernel. Information is smoothed to I + ε.
inline ContextPolicy contextual_ids_frank_wolfe(const ContextualProfile& p, const Vector& chi, int iterations,
                                                double eps, std::vector<double>* trace = nullptr) {
  if (iterations < 1) throw std::invalid_argument("frank-wolfe: needs at least one iteration");
  if (eps < 0.0) throw std::invalid_argument("frank-wolfe: smoothing must be nonnegative");
  const std::size_t Z = p.gaps.size();
  ContextPolicy pol;
  for (std::size_t z = 0; z < Z; ++z) {
    const auto k = p.gaps[z].size();
    pol.xi.push_back(Vector::Constant(k, 1.0 / static_cast<double>(k)));
  }
  for (int it = 1; it <= iterations; ++it) {
    double dbar = 0.0, ibar = 0.0;
    for (std::size_t z = 0; z < Z; ++z) {
      dbar += chi(z) * pol.xi[z].dot(p.gaps[z].cwiseMax(0.0));
      ibar += chi(z) * (pol.xi[z].dot(p.infos[z]) + eps);
    }
    if (ibar <= 0.0) {
      if (dbar > 0.0) throw HopelessProfile("contextual profile has no information");
      break;
    }
    const double step = 2.0 / (it + 2.0);
    for (std::size_t z = 0; z < Z; ++z) {
      // Gradient up to the positive factor Ψ / (Δ̄ Ī); the χ(z) weight does
      // not change the per-context argmin and is dropped.
      Eigen::Index best = 0;
      double val = kInf;
      for (Eigen::Index a = 0; a < p.gaps[z].size(); ++a) {
        const double g = 2.0 * std::max(p.gaps[z](a), 0.0) * dbar * ibar - (p.infos[z](a) + eps) * dbar * dbar;
        if (g < val) {
          val = g;
          best = a;
        }
      }
      pol.xi[z] *= 1.0 - step;
      pol.xi[z](best) += step;
    }
    if (trace) trace->push_back(contextual_ratio(pol, p, chi, eps));
  }
  return pol;
}

inline ContextPolicy contextual_ids_frank_wolfe(const Estimator& est, const ConfidenceSet& conf,
                                                const ContextualGame& cg, int iterations,
                                                std::optional<double> eps = std::nullopt) {
  return contextual_ids_frank_wolfe(contextual_profile(est, conf, cg), cg.chi(), iterations,
                                    eps.value_or(1.0 / static_cast<double>(est.t())));
}

enum class ContextualPolicyKind { conditional, frank_wolfe };

struct ContextualRunOptions {
  std::optional<double> lambda;
  std::optional<int> fw_iteration_cap;  // K = min(t², cap); default cap 5000
  std::optional<double> noise_sigma;    // defaults to the game's ρ
};

// Contexts z_t ∼ χ; regret Σ ⟨φ^{z_t}_{a*(z_t)} − φ^{z_t}_{a_t}, θ*⟩ with θ*
// in original units. Conditional IDS plays greedily on contexts whose
// profile is hopeless (no information at any positive-gap action).
inline RunResult simulate_contextual(const ContextualGame& cg, ContextualPolicyKind kind, const Vector& theta_star,
                                     std::int64_t n, std::uint64_t seed, const ContextualRunOptions& opt = {}) {
  const LinearGame& g = cg.joint();
  const Vector theta = g.to_internal(theta_star);
  if (!g.param_set().contains(theta, 1e-9)) throw ConfigError("true parameter outside the parameter set");
  std::mt19937_64 rng(seed);
  std::discrete_distribution<int> draw_context(cg.chi().data(), cg.chi().data() + cg.chi().size());
  Estimator est = Estimator::for_game(g, opt.lambda);
  const double sigma = opt.noise_sigma.value_or(g.noise_sigma());
  const long cap = opt.fw_iteration_cap.value_or(5000);
  RunResult res;
  res.policy = kind == ContextualPolicyKind::conditional ? "conditional_ids" : "contextual_ids_fw";
  res.seed = seed;
  res.rounds.reserve(static_cast<std::size_t>(n));
  double cum = 0.0;
  for (std::int64_t t = 1; t <= n; ++t) {
    const ConfidenceSet conf = est.confidence_schedule();
    const ContextualProfile prof = contextual_profile(est, conf, cg);
    // A single context consumes no randomness, so runs match the plain loop.
    const int z = cg.contexts() == 1 ? 0 : draw_context(rng);
    PolicyDecision dec;
    double ratio = 0.0;
    if (kind == ContextualPolicyKind::conditional) {
      try {
        dec = conditional_ids(prof, z);
        ratio = dec.ratio;
      } catch (const HopelessProfile&) {
        dec = PolicyDecision::dirac(prof.greedy[z]);
        ratio = kInf;
      }
    } else {
      const int K = static_cast<int>(std::min<long>(static_cast<long>(t) * t, cap));
      const double eps = 1.0 / static_cast<double>(t);
      const ContextPolicy pol = contextual_ids_frank_wolfe(prof, cg.chi(), K, eps);
      for (Eigen::Index a = 0; a < pol.xi[z].size(); ++a)
        if (pol.xi[z](a) > 0.0) {
          dec.support.push_back(static_cast<int>(a));
          dec.probs.push_back(pol.xi[z](a));
        }
      ratio = contextual_ratio(pol, prof, cg.chi(), eps);
    }
    const int a = sample(dec, rng);
    const double inst = cg.best_action(z, theta).second - cg.feature(z, a).dot(theta);
    cum += inst;
    const Matrix& M = cg.feedback(z, a);
    const double info = est.info_gain(M);
    const int covered = est.covers(theta, conf) ? 1 : 0;
    est.update(M, M * theta + gaussian_noise(rng, M.rows(), sigma));
    res.rounds.push_back(
        {t, z, a, inst, cum, prof.gaps[z](a), info, ratio, covered, conf.beta, est.total_information_gain()});
  }
  return res;
}

}  // namespace pmids
