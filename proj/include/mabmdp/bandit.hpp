#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mabmdp/mdp.hpp"
#include "mabmdp/rng.hpp"

namespace mabmdp {

// T_n = max(T0, round(T0 + c n)).
struct HorizonSchedule {
  std::size_t t0 = 4;
  double slope = 0.1;

  friend bool operator==(const HorizonSchedule&, const HorizonSchedule&) = default;
};

std::size_t horizon(const HorizonSchedule& schedule, std::size_t n);

// c^e_{k,n} = K_e / T0 + sqrt(8 ln(n) / k). Throws for k == 0 or n == 0.
double confidence_bound(double k_const, std::size_t t0, std::size_t pulls, std::size_t n);

// Per-expert statistics of a running bandit.
struct BanditState {
  explicit BanditState(std::size_t n_experts) : pulls(n_experts, 0), reward_sums(n_experts, 0.0) {}

  std::vector<std::size_t> pulls;   // k_e
  std::vector<double> reward_sums;  // S_e, sum of per-iteration average rewards
  std::size_t iteration = 0;        // n
  std::uint64_t elapsed = 0;        // t_n, MDP steps so far

  std::size_t n_experts() const { return pulls.size(); }
  void record(std::size_t expert, double avg_reward, std::size_t steps);
};

// Expert-selection strategy plugged into run_mab.
class Selector {
 public:
  virtual ~Selector() = default;
  virtual std::size_t select(const BanditState& state) = 0;
  virtual std::string name() const = 0;
};

// UCB index S_e/k_e + c^e_{k_e,n}, after one round-robin pass over the
// experts. Ties go to the lowest index.
std::size_t select_ucb(const BanditState& state, std::span<const double> k_constants,
                       const HorizonSchedule& schedule);

class UcbSelector final : public Selector {
 public:
  UcbSelector(std::vector<double> k_constants, HorizonSchedule schedule);

  std::size_t select(const BanditState& state) override {
    return select_ucb(state, k_constants_, schedule_);
  }
  std::string name() const override { return "ucb"; }

  // Index of expert e; requires k_e >= 1 and n >= 1.
  double index(const BanditState& state, std::size_t expert) const;
  const std::vector<double>& k_constants() const { return k_constants_; }

 private:
  std::vector<double> k_constants_;
  HorizonSchedule schedule_;
};

// Always picks the same expert.
class FixedSelector final : public Selector {
 public:
  explicit FixedSelector(std::size_t expert) : expert_(expert) {}
  std::size_t select(const BanditState&) override { return expert_; }
  std::string name() const override { return "fixed"; }

 private:
  std::size_t expert_;
};

struct IterationRecord {
  std::size_t n = 0;
  std::size_t expert = 0;
  std::size_t horizon = 0;       // T_n
  StateIndex start_state = 0;    // s_{t_n}
  StateIndex final_state = 0;    // state handed to iteration n + 1
  double avg_reward = 0.0;       // R_n
  std::uint64_t elapsed = 0;     // t_n
};

// Replaces the environment dynamics before iteration `iteration` runs.
struct DynamicsEvent {
  std::size_t iteration = 0;
  FiniteMdp mdp;
  std::string label;
};

struct RunLog {
  std::vector<IterationRecord> records;
  std::vector<std::vector<double>> step_rewards;  // per iteration, when retained
  std::size_t n_experts = 0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  HorizonSchedule schedule;
  std::string selector;
  std::vector<std::size_t> event_iterations;

  std::size_t size() const { return records.size(); }
  // t_N: MDP steps after the last iteration.
  std::uint64_t total_steps() const;
};

struct RunOptions {
  bool keep_step_rewards = false;
};

// Runs the generic bandit-over-MDP loop for `iterations` iterations. The
// environment state carries over between iterations; the first state is
// drawn from mu0. Events are applied just before their iteration.
RunLog run_mab(const FiniteMdp& mdp, std::span<const ExpertPolicy> experts,
               const HorizonSchedule& schedule, Selector& selector, std::size_t iterations, Rng& rng,
               std::span<const DynamicsEvent> events = {}, const RunOptions& options = {});

}  // namespace mabmdp
