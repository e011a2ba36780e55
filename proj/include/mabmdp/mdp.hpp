#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mabmdp/rng.hpp"

namespace mabmdp {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using StateIndex = std::size_t;
using ActionIndex = std::size_t;

// Absolute tolerance for every "sums to one" check.
inline constexpr double kStochasticTol = 1e-9;

// Finite distribution over reward values in [0, 1].
struct RewardDistribution {
  std::vector<double> values;
  std::vector<double> probs;

  static RewardDistribution deterministic(double value) { return {{value}, {1.0}}; }

  double mean() const;
  bool is_deterministic() const { return values.size() == 1; }

  friend bool operator==(const RewardDistribution&, const RewardDistribution&) = default;
};

// One entry of the sparse kernel row P(s, a, .).
struct Outcome {
  StateIndex next = 0;
  double prob = 0.0;
  RewardDistribution reward;

  friend bool operator==(const Outcome&, const Outcome&) = default;
};

// Finite MDP with transition kernel P, reward kernel R, observation kernel O
// and initial distribution mu0.
//
// P(s, a, .) is stored sparsely as the list of outcomes with nonzero
// probability; each outcome carries the reward distribution of its
// (s, a, s') triple. The observation kernel defaults to the identity on
// states. Construction does not validate; call validate_mdp().
class FiniteMdp {
 public:
  FiniteMdp() = default;
  FiniteMdp(std::size_t n_states, std::size_t n_actions);
  FiniteMdp(std::size_t n_states, std::size_t n_actions, std::size_t n_obs);

  std::size_t n_states() const { return n_states_; }
  std::size_t n_actions() const { return n_actions_; }
  std::size_t n_obs() const { return static_cast<std::size_t>(observation_.cols()); }

  // Throws std::invalid_argument on bad indices or a repeated (s, a, next).
  void add_outcome(StateIndex s, ActionIndex a, StateIndex next, double prob,
                   RewardDistribution reward = RewardDistribution::deterministic(0.0));
  void set_outcomes(StateIndex s, ActionIndex a, std::vector<Outcome> outcomes);
  const std::vector<Outcome>& outcomes(StateIndex s, ActionIndex a) const;

  // Dense lookup of P(s, a, next); zero when absent.
  double transition(StateIndex s, ActionIndex a, StateIndex next) const;
  // sum_{s'} P(s, a, s') E[R(s, a, s')]
  double mean_reward(StateIndex s, ActionIndex a) const;

  const Matrix& observation() const { return observation_; }
  void set_observation(Matrix observation);
  bool observation_is_identity() const;

  const Vector& initial() const { return initial_; }
  void set_initial(Vector initial);

  friend bool operator==(const FiniteMdp& a, const FiniteMdp& b);

 private:
  std::size_t index(StateIndex s, ActionIndex a) const { return s * n_actions_ + a; }

  std::size_t n_states_ = 0;
  std::size_t n_actions_ = 0;
  std::vector<std::vector<Outcome>> rows_;
  Matrix observation_;
  Vector initial_;
};

// Stationary stochastic policy pi_e(s, a).
struct ExpertPolicy {
  std::string id;
  Matrix probs;  // n_states x n_actions

  std::size_t n_states() const { return static_cast<std::size_t>(probs.rows()); }
  std::size_t n_actions() const { return static_cast<std::size_t>(probs.cols()); }

  // Deterministic policy from one action per state.
  static ExpertPolicy deterministic(std::string id, std::span<const ActionIndex> actions,
                                    std::size_t n_actions);
};

struct Trajectory {
  std::vector<StateIndex> states;         // s_0 .. s_T
  std::vector<ActionIndex> actions;       // a_0 .. a_{T-1}
  std::vector<double> rewards;            // r_0 .. r_{T-1}
  std::vector<std::size_t> observations;  // y_0 .. y_T
};

struct Violation {
  enum class Kind { dimension, negative_entry, row_sum, reward_range, reward_sum, index };
  Kind kind;
  std::string message;
};

// Every stochasticity invariant violation, with indices. Empty iff valid.
std::vector<Violation> validate_mdp(const FiniteMdp& mdp);
std::vector<Violation> validate_policy(const ExpertPolicy& policy, const FiniteMdp& mdp);

// Throws std::invalid_argument carrying the first violation.
void require_valid(const FiniteMdp& mdp);
void require_valid(const ExpertPolicy& policy, const FiniteMdp& mdp);

// pi_e(s, a) = sum_y obs_map(y, a) O(s, y).
ExpertPolicy reduce_observation_expert(const Matrix& obs_map, const Matrix& observation,
                                       std::string id = "reduced");

struct Rollout {
  double avg_reward = 0.0;
  StateIndex final_state = 0;
  Trajectory trajectory;  // empty unless requested
};

// Follows `policy` for exactly T steps from s0; avg_reward is (1/T) sum r_t.
//
// Sampling is inverse-CDF over each row's cumulative probabilities. Draw
// order per step: action, next state, reward, observation; a draw is skipped
// when the distribution has a single support point, so deterministic parts
// of the model consume no randomness.
Rollout run_expert(const FiniteMdp& mdp, const ExpertPolicy& policy, StateIndex s0,
                   std::size_t T, Rng& rng, bool record_trajectory = true);

// Samples an index from mu0.
StateIndex sample_initial_state(const FiniteMdp& mdp, Rng& rng);

}  // namespace mabmdp
