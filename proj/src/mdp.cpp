#include "mabmdp/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace mabmdp {

namespace {

std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

bool sums_to_one(double total) { return std::abs(total - 1.0) <= kStochasticTol; }

template <typename Probs>
std::size_t inverse_cdf(const Probs& probs, std::size_t count, double u) {
  double cumulative = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    cumulative += probs(i);
    if (u < cumulative) return i;
  }
  // u landed in the rounding gap above the last cumulative value
  for (std::size_t i = count; i-- > 0;)
    if (probs(i) > 0.0) return i;
  return count - 1;
}

}  // namespace

double RewardDistribution::mean() const {
  double m = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) m += values[i] * probs[i];
  return m;
}

FiniteMdp::FiniteMdp(std::size_t n_states, std::size_t n_actions)
    : FiniteMdp(n_states, n_actions, n_states) {}

FiniteMdp::FiniteMdp(std::size_t n_states, std::size_t n_actions, std::size_t n_obs)
    : n_states_(n_states), n_actions_(n_actions), rows_(n_states * n_actions) {
  if (n_states == 0 || n_actions == 0 || n_obs == 0)
    throw std::invalid_argument("FiniteMdp: state, action and observation counts must be positive");
  observation_ = Matrix::Zero(static_cast<Eigen::Index>(n_states), static_cast<Eigen::Index>(n_obs));
  if (n_obs == n_states) observation_.setIdentity();
  initial_ = Vector::Zero(static_cast<Eigen::Index>(n_states));
  initial_(0) = 1.0;
}

void FiniteMdp::add_outcome(StateIndex s, ActionIndex a, StateIndex next, double prob,
                            RewardDistribution reward) {
  if (s >= n_states_ || a >= n_actions_ || next >= n_states_)
    throw std::invalid_argument("add_outcome: index out of range at (s=" + std::to_string(s) +
                                ",a=" + std::to_string(a) + ",s'=" + std::to_string(next) + ")");
  auto& row = rows_[index(s, a)];
  for (const auto& o : row)
    if (o.next == next)
      throw std::invalid_argument("add_outcome: duplicate outcome (s=" + std::to_string(s) +
                                  ",a=" + std::to_string(a) + ",s'=" + std::to_string(next) + ")");
  row.push_back(Outcome{next, prob, std::move(reward)});
}

void FiniteMdp::set_outcomes(StateIndex s, ActionIndex a, std::vector<Outcome> outcomes) {
  if (s >= n_states_ || a >= n_actions_)
    throw std::invalid_argument("set_outcomes: index out of range");
  rows_[index(s, a)].clear();
  for (auto& o : outcomes) add_outcome(s, a, o.next, o.prob, std::move(o.reward));
}

const std::vector<Outcome>& FiniteMdp::outcomes(StateIndex s, ActionIndex a) const {
  return rows_.at(index(s, a));
}

double FiniteMdp::transition(StateIndex s, ActionIndex a, StateIndex next) const {
  for (const auto& o : outcomes(s, a))
    if (o.next == next) return o.prob;
  return 0.0;
}

double FiniteMdp::mean_reward(StateIndex s, ActionIndex a) const {
  double m = 0.0;
  for (const auto& o : outcomes(s, a)) m += o.prob * o.reward.mean();
  return m;
}

void FiniteMdp::set_observation(Matrix observation) {
  if (static_cast<std::size_t>(observation.rows()) != n_states_ || observation.cols() == 0)
    throw std::invalid_argument("set_observation: expected " + std::to_string(n_states_) +
                                " rows and at least one column");
  observation_ = std::move(observation);
}

bool FiniteMdp::observation_is_identity() const {
  return observation_.rows() == observation_.cols() && observation_.isIdentity(0.0);
}

void FiniteMdp::set_initial(Vector initial) {
  if (static_cast<std::size_t>(initial.size()) != n_states_)
    throw std::invalid_argument("set_initial: expected " + std::to_string(n_states_) + " entries");
  initial_ = std::move(initial);
}

bool operator==(const FiniteMdp& a, const FiniteMdp& b) {
  return a.n_states_ == b.n_states_ && a.n_actions_ == b.n_actions_ && a.rows_ == b.rows_ &&
         a.observation_.rows() == b.observation_.rows() &&
         a.observation_.cols() == b.observation_.cols() && a.observation_ == b.observation_ &&
         a.initial_ == b.initial_;
}

ExpertPolicy ExpertPolicy::deterministic(std::string id, std::span<const ActionIndex> actions,
                                         std::size_t n_actions) {
  ExpertPolicy p{std::move(id), Matrix::Zero(static_cast<Eigen::Index>(actions.size()),
                                             static_cast<Eigen::Index>(n_actions))};
  for (std::size_t s = 0; s < actions.size(); ++s) {
    if (actions[s] >= n_actions) throw std::invalid_argument("deterministic policy: action out of range");
    p.probs(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(actions[s])) = 1.0;
  }
  return p;
}

std::vector<Violation> validate_mdp(const FiniteMdp& mdp) {
  using K = Violation::Kind;
  std::vector<Violation> out;
  const std::size_t S = mdp.n_states(), A = mdp.n_actions();
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t a = 0; a < A; ++a) {
      const std::string where = "(s=" + std::to_string(s) + ",a=" + std::to_string(a) + ")";
      double total = 0.0;
      for (const auto& o : mdp.outcomes(s, a)) {
        const std::string triple = "(s=" + std::to_string(s) + ",a=" + std::to_string(a) +
                                   ",s'=" + std::to_string(o.next) + ")";
        if (o.prob < 0.0)
          out.push_back({K::negative_entry, "negative transition probability " +
                                                short_num(o.prob) + " at " + triple});
        total += o.prob;
        const auto& r = o.reward;
        if (r.values.empty() || r.values.size() != r.probs.size()) {
          out.push_back({K::dimension, "malformed reward distribution at " + triple});
          continue;
        }
        double rtotal = 0.0;
        for (std::size_t i = 0; i < r.values.size(); ++i) {
          if (!(r.values[i] >= 0.0 && r.values[i] <= 1.0))
            out.push_back({K::reward_range, "reward value " + short_num(r.values[i]) +
                                                " outside [0,1] at " + triple});
          if (r.probs[i] < 0.0)
            out.push_back({K::negative_entry, "negative reward probability " +
                                                  short_num(r.probs[i]) + " at " + triple});
          rtotal += r.probs[i];
        }
        if (!sums_to_one(rtotal))
          out.push_back({K::reward_sum, "reward probabilities sum " + short_num(rtotal) +
                                            " ≠ 1 at " + triple});
      }
      if (!sums_to_one(total))
        out.push_back({K::row_sum, "row sum " + short_num(total) + " ≠ 1 at " + where});
    }
  }
  const Matrix& O = mdp.observation();
  for (Eigen::Index s = 0; s < O.rows(); ++s) {
    if ((O.row(s).array() < 0.0).any())
      out.push_back({K::negative_entry, "negative observation probability in row s=" + std::to_string(s)});
    const double total = O.row(s).sum();
    if (!sums_to_one(total))
      out.push_back({K::row_sum, "observation row sum " + short_num(total) + " ≠ 1 at (s=" +
                                     std::to_string(s) + ")"});
  }
  const Vector& mu0 = mdp.initial();
  if ((mu0.array() < 0.0).any())
    out.push_back({K::negative_entry, "negative initial probability"});
  if (!sums_to_one(mu0.sum()))
    out.push_back({K::row_sum, "initial distribution sum " + short_num(mu0.sum()) + " ≠ 1"});
  return out;
}

std::vector<Violation> validate_policy(const ExpertPolicy& policy, const FiniteMdp& mdp) {
  using K = Violation::Kind;
  std::vector<Violation> out;
  if (policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions()) {
    out.push_back({K::dimension, "policy '" + policy.id + "' is " + std::to_string(policy.n_states()) +
                                     "x" + std::to_string(policy.n_actions()) + ", MDP needs " +
                                     std::to_string(mdp.n_states()) + "x" +
                                     std::to_string(mdp.n_actions())});
    return out;
  }
  for (Eigen::Index s = 0; s < policy.probs.rows(); ++s) {
    const auto row = policy.probs.row(s);
    if ((row.array() < 0.0).any() || (row.array() > 1.0).any())
      out.push_back({K::negative_entry, "policy '" + policy.id + "' entry outside [0,1] in row s=" +
                                            std::to_string(s)});
    if (!sums_to_one(row.sum()))
      out.push_back({K::row_sum, "policy '" + policy.id + "' row sum " + short_num(row.sum()) +
                                     " ≠ 1 at (s=" + std::to_string(s) + ")"});
  }
  return out;
}

void require_valid(const FiniteMdp& mdp) {
  const auto v = validate_mdp(mdp);
  if (!v.empty())
    throw std::invalid_argument("invalid MDP: " + v.front().message +
                                (v.size() > 1 ? " (+" + std::to_string(v.size() - 1) + " more)" : ""));
}

void require_valid(const ExpertPolicy& policy, const FiniteMdp& mdp) {
  const auto v = validate_policy(policy, mdp);
  if (!v.empty()) throw std::invalid_argument("invalid policy: " + v.front().message);
}

ExpertPolicy reduce_observation_expert(const Matrix& obs_map, const Matrix& observation,
                                       std::string id) {
  if (obs_map.rows() != observation.cols())
    throw std::invalid_argument("reduce_observation_expert: observation map has " +
                                std::to_string(obs_map.rows()) + " rows but the kernel has " +
                                std::to_string(observation.cols()) + " observations");
  return ExpertPolicy{std::move(id), observation * obs_map};
}

StateIndex sample_initial_state(const FiniteMdp& mdp, Rng& rng) {
  const Vector& mu0 = mdp.initial();
  const auto n = static_cast<std::size_t>(mu0.size());
  if ((mu0.array() > 0.0).count() == 1) {
    Eigen::Index idx;
    mu0.maxCoeff(&idx);
    return static_cast<StateIndex>(idx);
  }
  return inverse_cdf([&](std::size_t i) { return mu0(static_cast<Eigen::Index>(i)); }, n, rng.uniform());
}

Rollout run_expert(const FiniteMdp& mdp, const ExpertPolicy& policy, StateIndex s0, std::size_t T,
                   Rng& rng, bool record_trajectory) {
  if (s0 >= mdp.n_states())
    throw std::out_of_range("run_expert: start state " + std::to_string(s0) + " out of range");
  if (T == 0) throw std::invalid_argument("run_expert: horizon must be positive");
  if (policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions())
    throw std::invalid_argument("run_expert: policy dimensions do not match the MDP");

  const std::size_t A = mdp.n_actions();
  const bool identity_obs = mdp.observation_is_identity();
  const Matrix& O = mdp.observation();

  auto observe = [&](StateIndex s) -> std::size_t {
    if (identity_obs) return s;
    const auto row = O.row(static_cast<Eigen::Index>(s));
    if ((row.array() > 0.0).count() == 1) {
      Eigen::Index idx;
      row.maxCoeff(&idx);
      return static_cast<std::size_t>(idx);
    }
    return inverse_cdf([&](std::size_t i) { return row(static_cast<Eigen::Index>(i)); },
                       static_cast<std::size_t>(row.size()), rng.uniform());
  };

  Rollout out;
  Trajectory& tr = out.trajectory;
  if (record_trajectory) {
    tr.states.reserve(T + 1);
    tr.actions.reserve(T);
    tr.rewards.reserve(T);
    tr.observations.reserve(T + 1);
    tr.states.push_back(s0);
    tr.observations.push_back(observe(s0));
  }

  StateIndex s = s0;
  double total = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    const auto prow = policy.probs.row(static_cast<Eigen::Index>(s));
    ActionIndex a;
    if ((prow.array() > 0.0).count() == 1) {
      Eigen::Index idx;
      prow.maxCoeff(&idx);
      a = static_cast<ActionIndex>(idx);
    } else {
      a = inverse_cdf([&](std::size_t i) { return prow(static_cast<Eigen::Index>(i)); }, A,
                      rng.uniform());
    }

    const auto& row = mdp.outcomes(s, a);
    const Outcome& o =
        row.size() == 1
            ? row.front()
            : row[inverse_cdf([&](std::size_t i) { return row[i].prob; }, row.size(), rng.uniform())];
    const double r =
        o.reward.is_deterministic()
            ? o.reward.values.front()
            : o.reward.values[inverse_cdf([&](std::size_t i) { return o.reward.probs[i]; },
                                          o.reward.probs.size(), rng.uniform())];
    total += r;
    s = o.next;
    if (record_trajectory) {
      tr.actions.push_back(a);
      tr.rewards.push_back(r);
      tr.states.push_back(s);
      tr.observations.push_back(observe(s));
    }
  }
  out.avg_reward = total / static_cast<double>(T);
  out.final_state = s;
  return out;
}

}  // namespace mabmdp
