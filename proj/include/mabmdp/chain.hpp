#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mabmdp/kernels.hpp"
#include "mabmdp/mdp.hpp"

namespace mabmdp {

class NotErgodicError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NoConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised in strict mode when the measured mixing constant exceeds the
// configured one.
class MixingConstantError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// State chain of an expert: P~(s, s') = sum_a P(s, a, s') pi(s, a).
struct InducedChain {
  Matrix kernel;

  std::size_t size() const { return static_cast<std::size_t>(kernel.rows()); }
};

struct ErgodicityReport {
  bool irreducible = false;
  bool aperiodic = false;
  std::size_t components = 0;  // strongly connected components
  std::size_t period = 0;      // gcd of cycle lengths when irreducible

  bool ergodic() const { return irreducible && aperiodic; }
};

struct MixingConstants {
  double c = 0.0;              // C_e
  double k = 0.0;              // K_e = C_e / (1 - alpha_e)
  double empirical_sup = 0.0;  // max_{s,t} ||P~^t(s,.) - mu||_1 / alpha^t
  std::size_t horizon = 0;
};

struct MixingOptions {
  // C_e is never reported below this value; 2 bounds any L1 distance
  // between distributions.
  double c_floor = 2.0;
  // Throw MixingConstantError instead of raising C_e above c_floor.
  bool strict = false;
  // Distances at or below this are numerically converged and do not enter
  // the supremum; geometric-mixing checks use the same absolute slack.
  double distance_floor = 1e-10;
  Execution execution = Execution::parallel;
};

struct ChainOptions {
  double stationary_tol = 1e-13;
  std::size_t max_iterations = 1'000'000;
  // Mixing horizon is max(10 * ceil(1 / (1 - alpha)), min_horizon).
  std::size_t min_horizon = 256;
  MixingOptions mixing;
};

// Per-expert analysis record.
struct MixingProfile {
  std::string expert_id;
  Vector stationary;         // mu_e
  double slem = 0.0;         // alpha_e
  double mix_const = 0.0;    // C_e
  double k_const = 0.0;      // K_e
  double steady_reward = 0.0;
  double gap = 0.0;          // Delta_e
  double empirical_c = 0.0;
  std::size_t horizon = 0;
  bool irreducible = false;
  bool aperiodic = false;
};

InducedChain induced_chain(const FiniteMdp& mdp, const ExpertPolicy& policy);

// Irreducibility from strong connectivity of the positive-entry digraph;
// aperiodicity holds when every strongly connected component that contains a
// cycle has period 1.
ErgodicityReport check_ergodicity(const InducedChain& chain);

// Power iteration from the uniform vector until ||mu P - mu||_1 <= tol.
Vector stationary_distribution(const InducedChain& chain, double tol = 1e-10,
                               std::size_t max_iterations = 1'000'000,
                               Execution execution = Execution::parallel);

// Second-largest eigenvalue modulus of the kernel (dense eigensolver).
double slem(const InducedChain& chain);

// 10 * ceil(1 / (1 - alpha)): the smallest admissible mixing horizon.
std::size_t default_mixing_horizon(double alpha);

// Certified C_e over t in [0, horizon] and every degenerate start state.
// alpha == 0 uses the convention C_e = c_floor.
MixingConstants mixing_constants(const InducedChain& chain, const Vector& stationary,
                                 double alpha, std::size_t horizon,
                                 const MixingOptions& options = {});

// r_pi(s) = sum_a pi(s, a) sum_{s'} P(s, a, s') E[R(s, a, s')]
Vector policy_reward(const FiniteMdp& mdp, const ExpertPolicy& policy);

double steady_state_reward(const FiniteMdp& mdp, const ExpertPolicy& policy, const Vector& stationary);

// Exact E[(1/T) sum_{t<T} r_t | s_0 = s0] by propagating the state
// distribution through the induced chain.
double expected_avg_reward_from_state(const FiniteMdp& mdp, const ExpertPolicy& policy,
                                      StateIndex s0, std::size_t T,
                                      Execution execution = Execution::parallel);

// Same quantity for every T in [1, max_T]; element T-1 holds horizon T.
std::vector<double> expected_avg_reward_curve(const InducedChain& chain, const Vector& reward,
                                              StateIndex s0, std::size_t max_T,
                                              Execution execution = Execution::parallel);

struct GapReport {
  std::size_t best = 0;  // lowest index among maximisers
  std::vector<double> gaps;
};

GapReport gaps(std::span<const double> steady_rewards);
GapReport gaps(std::span<const MixingProfile> profiles);
// Writes Delta_e into each profile; returns e*.
std::size_t assign_gaps(std::span<MixingProfile> profiles);

// Full analysis of one expert. Throws NotErgodicError for non-ergodic chains.
MixingProfile profile_expert(const FiniteMdp& mdp, const ExpertPolicy& policy,
                             const ChainOptions& options = {});
std::vector<MixingProfile> profile_experts(const FiniteMdp& mdp, std::span<const ExpertPolicy> experts,
                                           const ChainOptions& options = {});

}  // namespace mabmdp
