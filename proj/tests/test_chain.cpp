#include <doctest.h>

#include <cmath>
#include <complex>
#include <functional>

#include "fixtures.hpp"
#include "mabmdp/chain.hpp"
#include "mabmdp/kernels.hpp"

using namespace mabmdp;
using fixtures::only_action;

namespace {

InducedChain chain_of(std::initializer_list<std::initializer_list<double>> rows) {
  InducedChain c;
  c.kernel.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    Eigen::Index k = 0;
    for (double v : row) c.kernel(r, k++) = v;
    ++r;
  }
  return c;
}

// Stationary vector from the linear system mu^T (P - I) = 0, sum mu = 1.
Vector solve_stationary(const Matrix& P) {
  const auto n = P.rows();
  Eigen::MatrixXd A(n + 1, n);
  A.topRows(n) = (P - Matrix::Identity(n, n)).transpose();
  A.row(n).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n + 1);
  b(n) = 1.0;
  return A.colPivHouseholderQr().solve(b);
}

// E[(1/T) sum r_t | s0] by enumerating every (action, next state) path.
double enumerate_avg_reward(const FiniteMdp& m, const ExpertPolicy& pi, StateIndex s0, std::size_t T) {
  std::function<double(StateIndex, std::size_t)> go = [&](StateIndex s, std::size_t left) -> double {
    if (left == 0) return 0.0;
    double total = 0.0;
    for (std::size_t a = 0; a < m.n_actions(); ++a) {
      const double pa = pi.probs(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a));
      if (pa == 0.0) continue;
      for (const auto& o : m.outcomes(s, a)) total += pa * o.prob * (o.reward.mean() + go(o.next, left - 1));
    }
    return total;
  };
  return go(s0, T) / static_cast<double>(T);
}

}  // namespace

TEST_CASE("induced_chain") {
  FiniteMdp m(2, 2);
  m.add_outcome(0, 0, 0, 1.0);
  m.add_outcome(1, 0, 1, 1.0);
  m.add_outcome(0, 1, 1, 1.0);
  m.add_outcome(1, 1, 0, 1.0);

  const auto det = induced_chain(m, only_action(2, 2, 1));
  CHECK(det.kernel(0, 1) == 1.0);
  CHECK(det.kernel(1, 0) == 1.0);

  const auto mixed = induced_chain(m, fixtures::uniform_policy(2, 2));
  CHECK(mixed.kernel.isApprox(Matrix::Constant(2, 2, 0.5)));

  Rng gen(5);
  for (int i = 0; i < 10; ++i) {
    const auto rm = fixtures::random_mdp(gen, 5, 3);
    const auto c = induced_chain(rm, fixtures::random_policy(gen, 5, 3));
    for (Eigen::Index s = 0; s < 5; ++s) CHECK(std::abs(c.kernel.row(s).sum() - 1.0) < 1e-12);
    CHECK((c.kernel.array() >= 0.0).all());
  }
  CHECK_THROWS_AS(induced_chain(m, only_action(3, 2)), std::invalid_argument);
}

TEST_CASE("check_ergodicity") {
  const auto id = check_ergodicity(chain_of({{1, 0}, {0, 1}}));
  CHECK_FALSE(id.irreducible);
  CHECK(id.components == 2);

  const auto flip = check_ergodicity(chain_of({{0, 1}, {1, 0}}));
  CHECK(flip.irreducible);
  CHECK_FALSE(flip.aperiodic);
  CHECK(flip.period == 2);

  const auto cyc3 = check_ergodicity(chain_of({{0, 1, 0}, {0, 0, 1}, {1, 0, 0}}));
  CHECK(cyc3.period == 3);

  // Cycles of length 2 and 3 through state 0 give gcd 1.
  const auto mixed = check_ergodicity(chain_of({{0, 0.5, 0.5, 0}, {1, 0, 0, 0}, {0, 0, 0, 1}, {1, 0, 0, 0}}));
  CHECK(mixed.ergodic());

  CHECK(check_ergodicity(chain_of({{0.9, 0.1}, {0.2, 0.8}})).ergodic());
}

TEST_CASE("stationary_distribution") {
  const auto sym = stationary_distribution(chain_of({{0.5, 0.5}, {0.5, 0.5}}));
  CHECK(sym(0) == doctest::Approx(0.5));
  CHECK(sym(1) == doctest::Approx(0.5));

  const auto two = stationary_distribution(chain_of({{0.9, 0.1}, {0.2, 0.8}}), 1e-14);
  CHECK(two(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(two(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  CHECK_THROWS_AS(stationary_distribution(chain_of({{1, 0}, {0, 1}})), NotErgodicError);
  CHECK_THROWS_AS(stationary_distribution(chain_of({{0.9, 0.1}, {0.2, 0.8}}), 1e-14, 3), NoConvergenceError);

  Rng gen(17);
  for (int i = 0; i < 10; ++i) {
    const auto m = fixtures::random_mdp(gen, 6, 2);
    const auto c = induced_chain(m, fixtures::random_policy(gen, 6, 2));
    const double tol = 1e-12;
    const Vector mu = stationary_distribution(c, tol);
    CHECK((c.kernel.transpose() * mu - mu).lpNorm<1>() <= tol * 1.0001);
    CHECK(std::abs(mu.sum() - 1.0) < 1e-12);
    CHECK((mu - solve_stationary(c.kernel)).lpNorm<1>() < 1e-10);
  }
}

TEST_CASE("slem") {
  CHECK(slem(chain_of({{0.9, 0.1}, {0.2, 0.8}})) == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(slem(chain_of({{0.5, 0.5}, {0.5, 0.5}})) == 0.0);
  InducedChain u;
  u.kernel = Matrix::Constant(6, 6, 1.0 / 6.0);
  CHECK(slem(u) == 0.0);
  CHECK_THROWS_AS(slem(chain_of({{0, 1}, {1, 0}})), NotErgodicError);

  // Circulant chains have eigenvalues a + b w + c w^2 over the cube roots of
  // unity w, so the SLEM is |a + b w + c w^2| at w = exp(2 pi i / 3).
  Rng gen(3);
  for (int i = 0; i < 10; ++i) {
    double a = gen.uniform() + 0.1, b = gen.uniform() + 0.1, c = gen.uniform() + 0.1;
    const double s = a + b + c;
    a /= s, b /= s, c /= s;
    const std::complex<double> w = std::polar(1.0, 2.0 * M_PI / 3.0);
    const double expected = std::abs(a + b * w + c * w * w);
    CHECK(slem(chain_of({{a, b, c}, {c, a, b}, {b, c, a}})) == doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("mixing_constants") {
  SUBCASE("rank-one chain uses the convention C = 2") {
    const auto c = chain_of({{0.5, 0.5}, {0.5, 0.5}});
    const auto mc = mixing_constants(c, stationary_distribution(c), 0.0, 10);
    CHECK(mc.c == 2.0);
    CHECK(mc.k == 2.0);
  }
  SUBCASE("two-state chain satisfies the geometric bound by brute force") {
    const auto c = chain_of({{0.9, 0.1}, {0.2, 0.8}});
    const Vector mu = stationary_distribution(c, 1e-14);
    const double alpha = slem(c);
    const auto mc = mixing_constants(c, mu, alpha, 200);
    CHECK(mc.k == mc.c / (1.0 - alpha));
    Matrix Pt = Matrix::Identity(2, 2);
    for (int t = 0; t <= 200; ++t) {
      for (Eigen::Index s = 0; s < 2; ++s) {
        const double dist = (Pt.row(s).transpose() - mu).lpNorm<1>();
        REQUIRE(dist <= mc.c * std::pow(alpha, t) + 1e-10);
      }
      Pt = Pt * c.kernel;
    }
  }
  SUBCASE("horizon below 10/(1-alpha) is rejected") {
    const auto c = chain_of({{0.9, 0.1}, {0.2, 0.8}});
    CHECK_THROWS_AS(mixing_constants(c, stationary_distribution(c), 0.7, 33), std::invalid_argument);
    CHECK_NOTHROW(mixing_constants(c, stationary_distribution(c), 0.7, 40));
  }
  SUBCASE("K = C / (1 - alpha) on random chains, serial and parallel agree") {
    Rng gen(8);
    for (int i = 0; i < 5; ++i) {
      const auto m = fixtures::random_mdp(gen, 7, 2);
      const auto c = induced_chain(m, fixtures::random_policy(gen, 7, 2));
      const Vector mu = stationary_distribution(c, 1e-13);
      const double alpha = slem(c);
      const std::size_t h = std::max<std::size_t>(default_mixing_horizon(alpha), 64);
      MixingOptions serial;
      serial.execution = Execution::serial;
      const auto a = mixing_constants(c, mu, alpha, h, serial);
      const auto b = mixing_constants(c, mu, alpha, h);
      CHECK(a.k == a.c / (1.0 - alpha));
      CHECK(a.c >= 2.0);
      CHECK(std::abs(a.empirical_sup - b.empirical_sup) <= 1e-9 * a.empirical_sup);
    }
  }
}

TEST_CASE("steady_state_reward") {
  SUBCASE("constant reward") {
    FiniteMdp m(3, 2);
    Rng gen(4);
    const auto base = fixtures::random_mdp(gen, 3, 2);
    for (std::size_t s = 0; s < 3; ++s)
      for (std::size_t a = 0; a < 2; ++a)
        for (const auto& o : base.outcomes(s, a)) m.add_outcome(s, a, o.next, o.prob, RewardDistribution::deterministic(0.3));
    const auto pi = fixtures::random_policy(gen, 3, 2);
    const auto mu = stationary_distribution(induced_chain(m, pi));
    CHECK(steady_state_reward(m, pi, mu) == doctest::Approx(0.3).epsilon(1e-12));
  }
  SUBCASE("two-state chain with state rewards (0, 1)") {
    const auto m = fixtures::two_state(0.1, 0.2);
    const auto pi = only_action(2);
    const auto mu = stationary_distribution(induced_chain(m, pi), 1e-14);
    const double r = steady_state_reward(m, pi, mu);
    CHECK(r == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    // A single 10^6-step rollout. The asymptotic variance of a two-state
    // chain average is mu0 mu1 (1 + lambda) / (1 - lambda), lambda = 0.7.
    Rng rng(31);
    const double avg = run_expert(m, pi, 0, 1'000'000, rng, false).avg_reward;
    const double sigma = std::sqrt((2.0 / 9.0) * 1.7 / 0.3 / 1e6);
    CHECK(std::abs(avg - r) <= 3.0 * sigma);
  }
  SUBCASE("stochastic rewards use their mean") {
    FiniteMdp m(1, 1);
    m.add_outcome(0, 0, 0, 1.0, RewardDistribution{{0.0, 1.0}, {0.25, 0.75}});
    const Vector mu = Vector::Ones(1);
    CHECK(steady_state_reward(m, only_action(1), mu) == doctest::Approx(0.75));
  }
}

TEST_CASE("expected_avg_reward_from_state") {
  Rng gen(21);
  const auto m = fixtures::random_mdp(gen, 3, 2);
  const auto pi = fixtures::random_policy(gen, 3, 2);

  SUBCASE("T = 1 is the one-step expected reward") {
    const Vector r = policy_reward(m, pi);
    for (std::size_t s = 0; s < 3; ++s)
      CHECK(expected_avg_reward_from_state(m, pi, s, 1) == doctest::Approx(r(static_cast<Eigen::Index>(s))));
  }
  SUBCASE("path enumeration oracle") {
    for (std::size_t s = 0; s < 3; ++s)
      for (std::size_t T = 1; T <= 5; ++T)
        CHECK(expected_avg_reward_from_state(m, pi, s, T) ==
              doctest::Approx(enumerate_avg_reward(m, pi, s, T)).epsilon(1e-12));
  }
  SUBCASE("curve agrees with the point query, serial and parallel") {
    const auto c = induced_chain(m, pi);
    const auto serial = expected_avg_reward_curve(c, policy_reward(m, pi), 2, 64, Execution::serial);
    const auto par = expected_avg_reward_curve(c, policy_reward(m, pi), 2, 64, Execution::parallel);
    for (std::size_t T = 1; T <= 64; T *= 2) {
      CHECK(serial[T - 1] == doctest::Approx(expected_avg_reward_from_state(m, pi, 2, T)).epsilon(1e-12));
      CHECK(std::abs(serial[T - 1] - par[T - 1]) < 1e-13);
    }
  }
  SUBCASE("Monte-Carlo oracle") {
    const std::size_t T = 6;
    const double exact = expected_avg_reward_from_state(m, pi, 1, T);
    Rng rng(1000);
    double sum = 0.0, sq = 0.0;
    constexpr int kRuns = 100000;
    for (int i = 0; i < kRuns; ++i) {
      const double x = run_expert(m, pi, 1, T, rng, false).avg_reward;
      sum += x;
      sq += x * x;
    }
    const double mean = sum / kRuns;
    const double se = std::sqrt((sq / kRuns - mean * mean) / kRuns);
    CHECK(std::abs(mean - exact) <= 3.0 * se);
  }
  SUBCASE("constant reward") {
    FiniteMdp cm(2, 1);
    cm.add_outcome(0, 0, 1, 1.0, RewardDistribution::deterministic(0.3));
    cm.add_outcome(1, 0, 0, 0.5, RewardDistribution::deterministic(0.3));
    cm.add_outcome(1, 0, 1, 0.5, RewardDistribution::deterministic(0.3));
    for (std::size_t T : {1u, 3u, 10u}) CHECK(expected_avg_reward_from_state(cm, only_action(2), 1, T) ==
                                              doctest::Approx(0.3).epsilon(1e-14));
  }
  CHECK_THROWS_AS(expected_avg_reward_from_state(m, pi, 3, 4), std::out_of_range);
}

TEST_CASE("transient error stays within the mixing bound on random models") {
  Rng gen(55);
  for (int i = 0; i < 10; ++i) {
    const auto m = fixtures::random_mdp(gen, 5, 2);
    const auto pi = fixtures::random_policy(gen, 5, 2);
    const auto prof = profile_expert(m, pi);
    for (std::size_t s = 0; s < 5; ++s)
      for (std::size_t T = 1; T <= 256; T *= 2) {
        const double gap = std::abs(prof.steady_reward - expected_avg_reward_from_state(m, pi, s, T));
        const double bound = prof.mix_const / static_cast<double>(T) * (1.0 - std::pow(prof.slem, T)) / (1.0 - prof.slem);
        REQUIRE(gap <= bound + 1e-12);
        REQUIRE(gap <= prof.k_const / static_cast<double>(T) + 1e-12);
      }
  }
}

TEST_CASE("gaps") {
  const double single[] = {0.4};
  CHECK(gaps(single).best == 0);
  CHECK(gaps(single).gaps == std::vector<double>{0.0});

  const double table[] = {0.74, 0.03, 0.08, 0.09};
  const auto g = gaps(table);
  CHECK(g.best == 0);
  CHECK(g.gaps[1] == doctest::Approx(0.71));
  CHECK(g.gaps[2] == doctest::Approx(0.66));
  CHECK(g.gaps[3] == doctest::Approx(0.65));

  const double tie[] = {0.2, 0.5, 0.5};
  const auto t = gaps(tie);
  CHECK(t.best == 1);
  CHECK(t.gaps[1] == 0.0);
  CHECK(t.gaps[2] == 0.0);

  CHECK_THROWS_AS(gaps(std::span<const double>()), std::invalid_argument);
}

TEST_CASE("profile_expert") {
  const auto m = fixtures::two_state(0.1, 0.2);
  const auto p = profile_expert(m, only_action(2, 1, 0, "only"));
  CHECK(p.expert_id == "only");
  CHECK(p.slem == doctest::Approx(0.7));
  CHECK(p.k_const == p.mix_const / (1.0 - p.slem));
  CHECK(p.irreducible);
  CHECK(p.aperiodic);
  CHECK(p.steady_reward == doctest::Approx(1.0 / 3.0));

  FiniteMdp stuck(2, 1);
  stuck.add_outcome(0, 0, 0, 1.0);
  stuck.add_outcome(1, 0, 1, 1.0);
  CHECK_THROWS_AS(profile_expert(stuck, only_action(2)), NotErgodicError);
}

TEST_CASE("serial and parallel kernels agree") {
  Rng gen(99);
  for (int n : {1, 7, 40, 130}) {
    Matrix P(n, n), D(n, n);
    Vector v(n), mu(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) P(i, j) = gen.uniform(), D(i, j) = gen.uniform();
      P.row(i) /= P.row(i).sum();
      v(i) = gen.uniform();
      mu(i) = gen.uniform();
    }
    Vector a(n), b(n);
    kernels::propagate_serial(v, P, a);
    kernels::propagate_parallel(v, P, b);
    CHECK((a - b).lpNorm<Eigen::Infinity>() <= 1e-12);
    CHECK((a - P.transpose() * v).lpNorm<Eigen::Infinity>() <= 1e-12);

    Matrix x(n, n), y(n, n);
    kernels::advance_rows_serial(D, P, x);
    kernels::advance_rows_parallel(D, P, y);
    CHECK((x - y).lpNorm<Eigen::Infinity>() <= 1e-12);
    CHECK((x - D * P).lpNorm<Eigen::Infinity>() <= 1e-12);

    kernels::row_l1_distance_serial(D, mu, a);
    kernels::row_l1_distance_parallel(D, mu, b);
    CHECK((a - b).lpNorm<Eigen::Infinity>() <= 1e-12);
    CHECK(a(0) == doctest::Approx((D.row(0).transpose() - mu).lpNorm<1>()));
  }
}
