#pragma once

// Per-round records shared by every simulator.

#include <pmids/core.hpp>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace pmids {

// One round. The persisted trace keeps t, action, regret, cumulative,
// gap_est, info, ratio and covered; the rest is in-memory diagnostics.
struct RoundRecord {
  std::int64_t t = 0;
  int context = 0;
  int action = 0;
  double regret = 0.0;      // instantaneous, in original reward units
  double cumulative = 0.0;
  double gap_est = 0.0;     // Δ̂_t(a_t)
  double info = 0.0;        // I_t(a_t); sums to γ_n
  double ratio = 0.0;       // Ψ of the decision; NaN when the policy has none
  int covered = -1;         // θ* ∈ E_t as 1/0; −1 when not checkable
  double beta = 0.0;
  double gamma = 0.0;       // total information gain after the update
  double gap_mix = std::numeric_limits<double>::quiet_NaN();     // Δ̂_t(μ_t)
  double gap_greedy = std::numeric_limits<double>::quiet_NaN();  // Δ̂_t(â_t)
};

struct RunResult {
  std::string policy;
  std::uint64_t seed = 0;
  std::vector<RoundRecord> rounds;
  bool aborted = false;
  std::string note;
  double wall_seconds = 0.0;

  double regret() const { return rounds.empty() ? 0.0 : rounds.back().cumulative; }
  // Cumulative regret after n rounds (prefix of the run).
  double regret_at(std::size_t n) const {
    if (n == 0 || rounds.empty()) return 0.0;
    return rounds[std::min(n, rounds.size()) - 1].cumulative;
  }
};

inline Vector gaussian_noise(std::mt19937_64& rng, Eigen::Index m, double sigma) {
  Vector e = Vector::Zero(m);
  if (sigma <= 0.0) return e;
  std::normal_distribution<double> g(0.0, sigma);
  for (Eigen::Index i = 0; i < m; ++i) e(i) = g(rng);
  return e;
}

}  // namespace pmids
