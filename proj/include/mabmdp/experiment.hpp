#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mabmdp/bandit.hpp"
#include "mabmdp/chain.hpp"
#include "mabmdp/regret.hpp"

namespace mabmdp {

// How the UCB selector's K_e are chosen from the per-expert mixing analysis.
//   per_expert: each expert uses its own K_e.
//   pooled:     every expert uses max_e K_e. Still an upper confidence bound
//               for each expert; the common K/T0 offset then cancels in the
//               argmax instead of swamping small reward gaps.
enum class KMode { per_expert, pooled };

struct EventSpec {
  std::size_t iteration = 0;
  // Exactly one of these: re-permute the actions of the base MDP, or load a
  // replacement MDP file.
  std::vector<std::size_t> permutation;
  std::string mdp_file;
  std::string label;

  friend bool operator==(const EventSpec&, const EventSpec&) = default;
};

// Experiment config file (JSON):
//
//   {
//     "format": "mabmdp-experiment", "version": 1,
//     "name": "t0_4",
//     "source": {"grid": "gridworld_5x5.grid"}
//            | {"mdp": "m.json", "experts": ["e1.json", ...]},
//     "schedule": {"t0": 4, "c": 0.1},
//     "iterations": 5000,
//     "seeds": [1, 2, ...],
//     "events": [{"iteration": 5000, "permutation": [0, 3, 2, 1], "label": "..."}
//              | {"iteration": 5000, "mdp": "m2.json"}],
//     "k_mode": "pooled" | "per_expert",
//     "discount": 0.95,
//     "workers": 1,
//     "out_dir": "out"
//   }
//
// Relative paths are resolved against the config file's directory when it
// is loaded, so a saved spec always holds absolute paths. "grid": "default"
// names the shipped benchmark layout.
struct ExperimentSpec {
  std::string name = "experiment";
  std::string grid_file;
  std::string mdp_file;
  std::vector<std::string> expert_files;
  HorizonSchedule schedule;
  std::size_t iterations = 5000;
  std::vector<std::uint64_t> seeds{1};
  std::vector<EventSpec> events;
  KMode k_mode = KMode::per_expert;
  double discount = 0.95;  // trainer discount for grid experts
  std::size_t workers = 1;
  std::string out_dir = "out";

  // Problems with the spec; empty when valid. Checks referenced files exist.
  std::vector<std::string> validate() const;

  friend bool operator==(const ExperimentSpec&, const ExperimentSpec&) = default;
};

std::filesystem::path default_grid_path();

std::string spec_to_json(const ExperimentSpec& spec);
// base_dir resolves relative paths. Throws ParseError.
ExperimentSpec spec_from_json(const std::string& text, const std::filesystem::path& base_dir,
                              const std::string& source = "<string>");
ExperimentSpec load_spec(const std::filesystem::path& path);
void save_spec(const ExperimentSpec& spec, const std::filesystem::path& path);

// The MDP, experts and events of a spec with the chain analysis of every
// dynamics epoch (epoch 0 is the base MDP, epoch i follows event i-1 in
// iteration order).
struct PreparedExperiment {
  FiniteMdp mdp;
  std::vector<ExpertPolicy> experts;
  std::vector<DynamicsEvent> events;
  std::vector<std::vector<MixingProfile>> epoch_profiles;
  std::vector<double> selector_k;  // K_e handed to the UCB selector

  const std::vector<MixingProfile>& profiles() const { return epoch_profiles.front(); }
  // R* of the epoch in force at each iteration.
  std::vector<double> r_star_by_iteration(std::size_t iterations) const;
};

// Throws ParseError, std::invalid_argument (validation) or NotErgodicError.
PreparedExperiment prepare_experiment(const ExperimentSpec& spec, const ChainOptions& options = {});

struct ExperimentResult {
  std::vector<RunLog> logs;  // in seed order
  std::vector<RegretCurve> regrets;
  AggregateCurve aggregate;
  // UCB bound per n from the base epoch; empty when it does not apply
  // (gap precondition fails or the dynamics change mid-run).
  std::vector<double> theory_bound;
  std::optional<std::string> bound_note;  // why theory_bound is empty
  std::vector<std::uint64_t> times;        // t_n for n = 0..N
  std::vector<double> mean_cumulative_reward;  // at each t_n
};

// Runs every seed. Execution::parallel spreads seeds over spec.workers
// OpenMP threads; Execution::serial is the single-threaded reference. Both
// give identical results.
ExperimentResult run_experiment(const ExperimentSpec& spec, const PreparedExperiment& prepared,
                                Execution execution = Execution::parallel);

// CSV renderings of an experiment; headers are fixed:
//   runlog:      n,expert,T_n,start_state,avg_reward,t_n
//   regret:      n,regret
//   aggregate:   n,mean_regret,std_regret,theory_bound
//   reward_time: t,mean_cumulative_reward
//   profiles:    expert_id,alpha,C,K,steady_reward,gap,irreducible,aperiodic
std::string runlog_csv(const RunLog& log);
std::string regret_csv(const RegretCurve& curve);
std::string aggregate_csv(const ExperimentResult& result);
std::string reward_time_csv(const ExperimentResult& result);
std::string profiles_csv(const std::vector<MixingProfile>& profiles);

// Writes runlog_seed<s>.csv and regret_seed<s>.csv per seed, then
// aggregate.csv, reward_vs_time.csv and profiles.csv, each atomically.
// Each dynamics event adds profiles_epoch<i>.csv for the MDP it installs.
void write_experiment(const std::filesystem::path& dir, const PreparedExperiment& prepared,
                      const ExperimentResult& result);

// Mean regret of several experiments aligned on n: n,t0_<a>,t0_<b>,...
std::string combined_csv(const std::vector<ExperimentSpec>& specs,
                         const std::vector<ExperimentResult>& results);
// Long format: t0,t,mean_cumulative_reward
std::string combined_reward_time_csv(const std::vector<ExperimentSpec>& specs,
                                     const std::vector<ExperimentResult>& results);

// The benchmark set on the shipped grid: a T0 sweep over {4, 16, 64} with
// c = 0.1, 10 seeds and N = 5000, and a perturbation run at T0 = 4 whose
// dynamics switch at iteration 5000 to the actions the second expert was
// trained on.
std::vector<ExperimentSpec> canonical_experiments(const std::filesystem::path& grid = default_grid_path());

}  // namespace mabmdp
