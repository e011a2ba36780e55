#pragma once

#include <vector>

#include "mabmdp/mdp.hpp"
#include "mabmdp/rng.hpp"

namespace fixtures {

using namespace mabmdp;

// One-action chain [[1-p, p], [q, 1-q]] paying reward_of_state[s] on leaving s.
inline FiniteMdp two_state(double p, double q, std::vector<double> reward_of_state = {0.0, 1.0}) {
  FiniteMdp m(2, 1);
  const double P[2][2] = {{1 - p, p}, {q, 1 - q}};
  for (std::size_t s = 0; s < 2; ++s)
    for (std::size_t n = 0; n < 2; ++n)
      if (P[s][n] > 0) m.add_outcome(s, 0, n, P[s][n], RewardDistribution::deterministic(reward_of_state[s]));
  return m;
}

inline ExpertPolicy only_action(std::size_t states, std::size_t actions = 1, std::size_t a = 0,
                                std::string id = "e") {
  return ExpertPolicy::deterministic(std::move(id), std::vector<ActionIndex>(states, a), actions);
}

inline ExpertPolicy uniform_policy(std::size_t states, std::size_t actions, std::string id = "uniform") {
  ExpertPolicy p;
  p.id = std::move(id);
  p.probs = Matrix::Constant(static_cast<Eigen::Index>(states), static_cast<Eigen::Index>(actions),
                             1.0 / static_cast<double>(actions));
  return p;
}

// Dense random MDP: every transition positive, reward distributions with two
// support points, so every induced chain is ergodic.
inline FiniteMdp random_mdp(Rng& rng, std::size_t S, std::size_t A) {
  FiniteMdp m(S, A);
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t a = 0; a < A; ++a) {
      std::vector<double> w(S);
      double total = 0;
      for (auto& x : w) total += (x = 0.05 + rng.uniform());
      for (std::size_t n = 0; n < S; ++n) {
        const double v0 = rng.uniform(), v1 = rng.uniform(), q = 0.1 + 0.8 * rng.uniform();
        m.add_outcome(s, a, n, w[n] / total, RewardDistribution{{v0, v1}, {q, 1 - q}});
      }
    }
  Vector mu0 = Vector::Constant(static_cast<Eigen::Index>(S), 1.0 / static_cast<double>(S));
  m.set_initial(mu0);
  return m;
}

inline ExpertPolicy random_policy(Rng& rng, std::size_t S, std::size_t A, std::string id = "random") {
  ExpertPolicy p;
  p.id = std::move(id);
  p.probs.resize(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(A));
  for (Eigen::Index s = 0; s < p.probs.rows(); ++s) {
    for (Eigen::Index a = 0; a < p.probs.cols(); ++a) p.probs(s, a) = 0.05 + rng.uniform();
    p.probs.row(s) /= p.probs.row(s).sum();
  }
  return p;
}

}  // namespace fixtures
