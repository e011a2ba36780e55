#include "mabmdp/bandit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mabmdp {

std::size_t horizon(const HorizonSchedule& schedule, std::size_t n) {
  if (schedule.t0 == 0) throw std::invalid_argument("horizon: T0 must be positive");
  if (schedule.slope < 0.0) throw std::invalid_argument("horizon: slope must be nonnegative");
  const double raw = static_cast<double>(schedule.t0) + schedule.slope * static_cast<double>(n);
  const auto rounded = static_cast<std::size_t>(std::llround(raw));
  return std::max(schedule.t0, rounded);
}

double confidence_bound(double k_const, std::size_t t0, std::size_t pulls, std::size_t n) {
  if (pulls == 0) throw std::invalid_argument("confidence_bound: expert has no pulls yet");
  if (n == 0) throw std::invalid_argument("confidence_bound: iteration must be at least 1");
  if (t0 == 0) throw std::invalid_argument("confidence_bound: T0 must be positive");
  return k_const / static_cast<double>(t0) +
         std::sqrt(8.0 * std::log(static_cast<double>(n)) / static_cast<double>(pulls));
}

void BanditState::record(std::size_t expert, double avg_reward, std::size_t steps) {
  pulls.at(expert) += 1;
  reward_sums[expert] += avg_reward;
  iteration += 1;
  elapsed += steps;
}

std::size_t select_ucb(const BanditState& state, std::span<const double> k_constants,
                       const HorizonSchedule& schedule) {
  const std::size_t E = state.n_experts();
  if (E == 0) throw std::invalid_argument("select_ucb: empty expert set");
  if (k_constants.size() != E) throw std::invalid_argument("select_ucb: one K_e per expert required");
  for (std::size_t e = 0; e < E; ++e)
    if (state.pulls[e] == 0) return e;

  std::size_t best = 0;
  double best_index = -std::numeric_limits<double>::infinity();
  for (std::size_t e = 0; e < E; ++e) {
    const double mean = state.reward_sums[e] / static_cast<double>(state.pulls[e]);
    const double index = mean + confidence_bound(k_constants[e], schedule.t0, state.pulls[e], state.iteration);
    if (index > best_index) {
      best_index = index;
      best = e;
    }
  }
  return best;
}

UcbSelector::UcbSelector(std::vector<double> k_constants, HorizonSchedule schedule)
    : k_constants_(std::move(k_constants)), schedule_(schedule) {
  if (k_constants_.empty()) throw std::invalid_argument("UcbSelector: empty expert set");
}

double UcbSelector::index(const BanditState& state, std::size_t expert) const {
  const double mean = state.reward_sums.at(expert) / static_cast<double>(state.pulls.at(expert));
  return mean + confidence_bound(k_constants_.at(expert), schedule_.t0, state.pulls[expert], state.iteration);
}

std::uint64_t RunLog::total_steps() const {
  if (records.empty()) return 0;
  return records.back().elapsed + records.back().horizon;
}

RunLog run_mab(const FiniteMdp& mdp, std::span<const ExpertPolicy> experts, const HorizonSchedule& schedule,
               Selector& selector, std::size_t iterations, Rng& rng, std::span<const DynamicsEvent> events,
               const RunOptions& options) {
  if (experts.empty()) throw std::invalid_argument("run_mab: no experts");
  if (iterations == 0) throw std::invalid_argument("run_mab: iterations must be at least 1");
  for (const auto& e : experts) require_valid(e, mdp);
  for (const auto& ev : events)
    if (ev.mdp.n_states() != mdp.n_states() || ev.mdp.n_actions() != mdp.n_actions())
      throw std::invalid_argument("run_mab: event '" + ev.label + "' at iteration " +
                                  std::to_string(ev.iteration) + " has dimensions " +
                                  std::to_string(ev.mdp.n_states()) + "x" + std::to_string(ev.mdp.n_actions()) +
                                  ", expected " + std::to_string(mdp.n_states()) + "x" +
                                  std::to_string(mdp.n_actions()));

  std::vector<const DynamicsEvent*> pending;
  for (const auto& ev : events) pending.push_back(&ev);
  std::stable_sort(pending.begin(), pending.end(),
                   [](const DynamicsEvent* a, const DynamicsEvent* b) { return a->iteration < b->iteration; });

  RunLog log;
  log.n_experts = experts.size();
  log.seed = rng.seed();
  log.stream = rng.stream();
  log.schedule = schedule;
  log.selector = selector.name();
  log.records.reserve(iterations);

  const FiniteMdp* env = &mdp;
  auto next_event = pending.begin();
  BanditState state(experts.size());
  StateIndex s = sample_initial_state(mdp, rng);

  for (std::size_t n = 0; n < iterations; ++n) {
    while (next_event != pending.end() && (*next_event)->iteration <= n) {
      env = &(*next_event)->mdp;
      log.event_iterations.push_back(n);
      ++next_event;
    }
    const std::size_t e = selector.select(state);
    if (e >= experts.size()) throw std::out_of_range("run_mab: selector returned an invalid expert");
    const std::size_t T = horizon(schedule, n);
    const Rollout roll = run_expert(*env, experts[e], s, T, rng, options.keep_step_rewards);

    IterationRecord rec;
    rec.n = n;
    rec.expert = e;
    rec.horizon = T;
    rec.start_state = s;
    rec.final_state = roll.final_state;
    rec.avg_reward = roll.avg_reward;
    rec.elapsed = state.elapsed;
    log.records.push_back(rec);
    if (options.keep_step_rewards) log.step_rewards.push_back(roll.trajectory.rewards);

    state.record(e, roll.avg_reward, T);
    s = roll.final_state;
  }
  return log;
}

}  // namespace mabmdp
