#include "mabmdp/chain.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <queue>

#include <Eigen/Eigenvalues>

namespace mabmdp {

namespace {

using Adjacency = std::vector<std::vector<std::size_t>>;

Adjacency positive_graph(const Matrix& P, bool transpose) {
  const auto n = static_cast<std::size_t>(P.rows());
  Adjacency adj(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (P(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) > 0.0)
        transpose ? adj[j].push_back(i) : adj[i].push_back(j);
  return adj;
}

// Kosaraju with explicit stacks; returns the component id of every vertex.
std::vector<std::size_t> strong_components(const Adjacency& fwd, const Adjacency& rev,
                                           std::size_t& count) {
  const std::size_t n = fwd.size();
  std::vector<char> seen(n, 0);
  std::vector<std::size_t> order;
  order.reserve(n);
  for (std::size_t root = 0; root < n; ++root) {
    if (seen[root]) continue;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{root, 0}};
    seen[root] = 1;
    while (!stack.empty()) {
      auto& [v, next] = stack.back();
      if (next < fwd[v].size()) {
        const std::size_t w = fwd[v][next++];
        if (!seen[w]) {
          seen[w] = 1;
          stack.emplace_back(w, 0);
        }
      } else {
        order.push_back(v);
        stack.pop_back();
      }
    }
  }
  constexpr auto unset = static_cast<std::size_t>(-1);
  std::vector<std::size_t> comp(n, unset);
  count = 0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if (comp[*it] != unset) continue;
    std::vector<std::size_t> stack{*it};
    comp[*it] = count;
    while (!stack.empty()) {
      const std::size_t v = stack.back();
      stack.pop_back();
      for (std::size_t w : rev[v])
        if (comp[w] == unset) {
          comp[w] = count;
          stack.push_back(w);
        }
    }
    ++count;
  }
  return comp;
}

void require_ergodic(const InducedChain& chain, const char* who) {
  const auto report = check_ergodicity(chain);
  if (!report.ergodic())
    throw NotErgodicError(std::string(who) + ": induced chain is not ergodic (irreducible=" +
                          (report.irreducible ? "true" : "false") +
                          ", aperiodic=" + (report.aperiodic ? "true" : "false") + ")");
}

}  // namespace

InducedChain induced_chain(const FiniteMdp& mdp, const ExpertPolicy& policy) {
  if (policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions())
    throw std::invalid_argument("induced_chain: policy is " + std::to_string(policy.n_states()) + "x" +
                                std::to_string(policy.n_actions()) + ", MDP is " +
                                std::to_string(mdp.n_states()) + "x" + std::to_string(mdp.n_actions()));
  const auto S = static_cast<Eigen::Index>(mdp.n_states());
  InducedChain chain{Matrix::Zero(S, S)};
  for (std::size_t s = 0; s < mdp.n_states(); ++s)
    for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
      const double w = policy.probs(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a));
      if (w == 0.0) continue;
      for (const auto& o : mdp.outcomes(s, a))
        chain.kernel(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(o.next)) += w * o.prob;
    }
  return chain;
}

ErgodicityReport check_ergodicity(const InducedChain& chain) {
  const Adjacency fwd = positive_graph(chain.kernel, false);
  const Adjacency rev = positive_graph(chain.kernel, true);
  const std::size_t n = fwd.size();

  ErgodicityReport report;
  const auto comp = strong_components(fwd, rev, report.components);
  report.irreducible = report.components == 1;

  // Period of each component: gcd over internal edges u->v of
  // level(u) + 1 - level(v), with BFS levels from a component root.
  constexpr auto unset = static_cast<std::size_t>(-1);
  std::vector<std::size_t> level(n, unset);
  std::vector<std::size_t> period(report.components, 0);
  for (std::size_t root = 0; root < n; ++root) {
    if (level[root] != unset) continue;
    const std::size_t c = comp[root];
    level[root] = 0;
    std::queue<std::size_t> q;
    q.push(root);
    std::size_t g = 0;
    std::vector<std::size_t> members;
    while (!q.empty()) {
      const std::size_t u = q.front();
      q.pop();
      members.push_back(u);
      for (std::size_t v : fwd[u]) {
        if (comp[v] != c) continue;
        if (level[v] == unset) {
          level[v] = level[u] + 1;
          q.push(v);
        }
      }
    }
    for (std::size_t u : members)
      for (std::size_t v : fwd[u])
        if (comp[v] == c) {
          const auto diff = static_cast<long long>(level[u]) + 1 - static_cast<long long>(level[v]);
          g = std::gcd(g, static_cast<std::size_t>(std::llabs(diff)));
        }
    period[c] = g;  // 0 means the component has no cycle
  }
  report.aperiodic = std::all_of(period.begin(), period.end(), [](std::size_t p) { return p == 0 || p == 1; });
  if (report.irreducible) report.period = period.front();
  return report;
}

Vector stationary_distribution(const InducedChain& chain, double tol, std::size_t max_iterations,
                               Execution execution) {
  require_ergodic(chain, "stationary_distribution");
  const auto n = static_cast<Eigen::Index>(chain.size());
  Vector mu = Vector::Constant(n, 1.0 / static_cast<double>(n));
  Vector next(n);
  for (std::size_t it = 0; it < max_iterations; ++it) {
    kernels::propagate(execution, mu, chain.kernel, next);
    const double residual = (next - mu).lpNorm<1>();
    if (residual <= tol) return mu;
    mu = next / next.sum();
  }
  throw NoConvergenceError("stationary_distribution: no convergence to tolerance " + std::to_string(tol) +
                           " within " + std::to_string(max_iterations) + " iterations");
}

double slem(const InducedChain& chain) {
  require_ergodic(chain, "slem");
  const auto n = chain.kernel.rows();
  if (n == 1) return 0.0;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(Eigen::MatrixXd(chain.kernel), false);
  if (solver.info() != Eigen::Success) throw NoConvergenceError("slem: eigenvalue computation failed");
  const Eigen::VectorXcd ev = solver.eigenvalues();
  // Drop the Perron eigenvalue (the one closest to 1) and take the largest
  // remaining modulus.
  Eigen::Index perron = 0;
  double closest = std::abs(ev(0) - 1.0);
  for (Eigen::Index i = 1; i < ev.size(); ++i)
    if (std::abs(ev(i) - 1.0) < closest) {
      closest = std::abs(ev(i) - 1.0);
      perron = i;
    }
  double alpha = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (i != perron) alpha = std::max(alpha, std::abs(ev(i)));
  if (alpha < 1e-12) alpha = 0.0;  // rank-one kernels: eigensolver round-off
  if (alpha >= 1.0) throw NotErgodicError("slem: second eigenvalue has modulus 1");
  return alpha;
}

std::size_t default_mixing_horizon(double alpha) {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw std::invalid_argument("default_mixing_horizon: alpha must be in [0,1)");
  return 10 * static_cast<std::size_t>(std::ceil(1.0 / (1.0 - alpha)));
}

MixingConstants mixing_constants(const InducedChain& chain, const Vector& stationary, double alpha,
                                 std::size_t horizon, const MixingOptions& options) {
  require_ergodic(chain, "mixing_constants");
  if (horizon < default_mixing_horizon(alpha))
    throw std::invalid_argument("mixing_constants: horizon " + std::to_string(horizon) +
                                " is below 10*ceil(1/(1-alpha)) = " +
                                std::to_string(default_mixing_horizon(alpha)));
  const auto n = static_cast<Eigen::Index>(chain.size());
  if (stationary.size() != n) throw std::invalid_argument("mixing_constants: stationary vector size mismatch");

  Matrix dist = Matrix::Identity(n, n);
  Matrix next(n, n);
  Vector d(n);
  kernels::row_l1_distance(options.execution, dist, stationary, d);
  double sup = d.maxCoeff();  // t = 0
  const double log_alpha = alpha > 0.0 ? std::log(alpha) : 0.0;

  for (std::size_t t = 1; t <= horizon; ++t) {
    kernels::advance_rows(options.execution, dist, chain.kernel, next);
    std::swap(dist, next);
    kernels::row_l1_distance(options.execution, dist, stationary, d);
    const double worst = d.maxCoeff();
    if (worst <= options.distance_floor) break;  // L1 distance to mu never increases
    if (alpha == 0.0)
      throw MixingConstantError("mixing_constants: SLEM is 0 but the chain has not mixed after " +
                                std::to_string(t) + " step(s)");
    sup = std::max(sup, std::exp(std::log(worst) - static_cast<double>(t) * log_alpha));
  }

  MixingConstants out;
  out.empirical_sup = sup;
  out.horizon = horizon;
  if (options.strict && sup > options.c_floor)
    throw MixingConstantError("mixing_constants: measured constant " + std::to_string(sup) +
                              " exceeds the configured C = " + std::to_string(options.c_floor));
  out.c = std::max(options.c_floor, sup);
  out.k = out.c / (1.0 - alpha);
  return out;
}

Vector policy_reward(const FiniteMdp& mdp, const ExpertPolicy& policy) {
  if (policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions())
    throw std::invalid_argument("policy_reward: policy dimensions do not match the MDP");
  Vector r = Vector::Zero(static_cast<Eigen::Index>(mdp.n_states()));
  for (std::size_t s = 0; s < mdp.n_states(); ++s)
    for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
      const double w = policy.probs(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a));
      if (w != 0.0) r(static_cast<Eigen::Index>(s)) += w * mdp.mean_reward(s, a);
    }
  return r;
}

double steady_state_reward(const FiniteMdp& mdp, const ExpertPolicy& policy, const Vector& stationary) {
  if (static_cast<std::size_t>(stationary.size()) != mdp.n_states())
    throw std::invalid_argument("steady_state_reward: stationary vector has " +
                                std::to_string(stationary.size()) + " entries, MDP has " +
                                std::to_string(mdp.n_states()) + " states");
  return std::clamp(stationary.dot(policy_reward(mdp, policy)), 0.0, 1.0);
}

std::vector<double> expected_avg_reward_curve(const InducedChain& chain, const Vector& reward,
                                              StateIndex s0, std::size_t max_T, Execution execution) {
  const auto n = static_cast<Eigen::Index>(chain.size());
  if (s0 >= chain.size())
    throw std::out_of_range("expected_avg_reward: start state " + std::to_string(s0) + " out of range");
  if (max_T == 0) throw std::invalid_argument("expected_avg_reward: horizon must be positive");
  if (reward.size() != n) throw std::invalid_argument("expected_avg_reward: reward vector size mismatch");
  Vector mu = Vector::Zero(n), next(n);
  mu(static_cast<Eigen::Index>(s0)) = 1.0;
  std::vector<double> out;
  out.reserve(max_T);
  double total = 0.0;
  for (std::size_t t = 0; t < max_T; ++t) {
    total += mu.dot(reward);
    out.push_back(total / static_cast<double>(t + 1));
    if (t + 1 < max_T) {
      kernels::propagate(execution, mu, chain.kernel, next);
      std::swap(mu, next);
    }
  }
  return out;
}

double expected_avg_reward_from_state(const FiniteMdp& mdp, const ExpertPolicy& policy, StateIndex s0,
                                      std::size_t T, Execution execution) {
  if (s0 >= mdp.n_states())
    throw std::out_of_range("expected_avg_reward_from_state: start state " + std::to_string(s0) +
                            " out of range");
  return expected_avg_reward_curve(induced_chain(mdp, policy), policy_reward(mdp, policy), s0, T,
                                   execution)
      .back();
}

GapReport gaps(std::span<const double> steady_rewards) {
  if (steady_rewards.empty()) throw std::invalid_argument("gaps: no experts");
  GapReport out;
  for (std::size_t e = 1; e < steady_rewards.size(); ++e)
    if (steady_rewards[e] > steady_rewards[out.best]) out.best = e;
  const double best = steady_rewards[out.best];
  out.gaps.reserve(steady_rewards.size());
  for (double r : steady_rewards) out.gaps.push_back(best - r);
  return out;
}

GapReport gaps(std::span<const MixingProfile> profiles) {
  std::vector<double> rewards;
  rewards.reserve(profiles.size());
  for (const auto& p : profiles) rewards.push_back(p.steady_reward);
  return gaps(rewards);
}

std::size_t assign_gaps(std::span<MixingProfile> profiles) {
  const auto report = gaps(std::span<const MixingProfile>(profiles.data(), profiles.size()));
  for (std::size_t e = 0; e < profiles.size(); ++e) profiles[e].gap = report.gaps[e];
  return report.best;
}

MixingProfile profile_expert(const FiniteMdp& mdp, const ExpertPolicy& policy, const ChainOptions& options) {
  const InducedChain chain = induced_chain(mdp, policy);
  const auto ergodicity = check_ergodicity(chain);
  MixingProfile p;
  p.expert_id = policy.id;
  p.irreducible = ergodicity.irreducible;
  p.aperiodic = ergodicity.aperiodic;
  if (!ergodicity.ergodic())
    throw NotErgodicError("expert '" + policy.id + "': induced chain is not ergodic (irreducible=" +
                          (p.irreducible ? "true" : "false") + ", aperiodic=" +
                          (p.aperiodic ? "true" : "false") + ")");
  p.stationary = stationary_distribution(chain, options.stationary_tol, options.max_iterations,
                                         options.mixing.execution);
  p.slem = slem(chain);
  p.horizon = std::max(default_mixing_horizon(p.slem), options.min_horizon);
  const auto mc = mixing_constants(chain, p.stationary, p.slem, p.horizon, options.mixing);
  p.mix_const = mc.c;
  p.k_const = mc.k;
  p.empirical_c = mc.empirical_sup;
  p.steady_reward = steady_state_reward(mdp, policy, p.stationary);
  return p;
}

std::vector<MixingProfile> profile_experts(const FiniteMdp& mdp, std::span<const ExpertPolicy> experts,
                                           const ChainOptions& options) {
  if (experts.empty()) throw std::invalid_argument("profile_experts: no experts");
  std::vector<MixingProfile> out;
  out.reserve(experts.size());
  for (const auto& e : experts) out.push_back(profile_expert(mdp, e, options));
  assign_gaps(out);
  return out;
}

}  // namespace mabmdp
