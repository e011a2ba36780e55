#include <doctest.h>

#include <array>

#include "fixtures.hpp"
#include "mabmdp/chain.hpp"
#include "mabmdp/experiment.hpp"
#include "mabmdp/gridworld.hpp"
#include "mabmdp/mdp_io.hpp"

using namespace mabmdp;

namespace {

constexpr std::size_t kUp = 0, kRight = 1, kDown = 2, kLeft = 3;

double reward_to(const FiniteMdp& m, std::size_t s, std::size_t a, std::size_t next) {
  for (const auto& o : m.outcomes(s, a))
    if (o.next == next) return o.reward.mean();
  return -1.0;
}

}  // namespace

TEST_CASE("1x2 grid pushes off-grid moves into the other cell") {
  const auto cfg = parse_grid_layout("[grid]\nS.\n");
  const auto m = build_gridworld(cfg);
  CHECK(validate_mdp(m).empty());
  for (std::size_t a = 0; a < 4; ++a) {
    CHECK(m.transition(0, a, 1) == doctest::Approx(1.0));
    CHECK(m.transition(1, a, 0) == doctest::Approx(1.0));
  }
  CHECK(m.initial()(0) == 1.0);
  CHECK(m.observation_is_identity());
}

TEST_CASE("2x2 grid matches hand enumeration") {
  // S T
  // . .
  const auto m = build_gridworld(parse_grid_layout("[grid]\nST\n..\n"));
  REQUIRE(validate_mdp(m).empty());

  // Trap, action up: escape mass 0.02 leaves the grid and splits over the
  // two in-grid neighbours.
  CHECK(m.transition(1, kUp, 1) == doctest::Approx(0.98));
  CHECK(m.transition(1, kUp, 0) == doctest::Approx(0.01));
  CHECK(m.transition(1, kUp, 3) == doctest::Approx(0.01));
  CHECK(m.transition(1, kLeft, 1) == doctest::Approx(0.98));
  CHECK(m.transition(1, kLeft, 0) == doctest::Approx(0.02));
  CHECK(m.transition(1, kLeft, 3) == 0.0);

  // Start cell, action right: 0.97 right, slips up and left leave the grid
  // (0.005 to each neighbour apiece), slip down 0.01.
  CHECK(m.transition(0, kRight, 1) == doctest::Approx(0.98));
  CHECK(m.transition(0, kRight, 2) == doctest::Approx(0.02));
  CHECK(m.transition(0, kRight, 0) == 0.0);
  CHECK(m.transition(0, kDown, 2) == doctest::Approx(0.98));

  // Rewards follow the destination cell.
  CHECK(reward_to(m, 0, kRight, 1) == 0.0);
  CHECK(reward_to(m, 0, kRight, 2) == doctest::Approx(0.1));
  CHECK(reward_to(m, 1, kUp, 1) == 0.0);
}

TEST_CASE("reward keyed on the origin cell") {
  auto cfg = parse_grid_layout("[grid]\nSG\n[params]\nreward_on = origin\n");
  CHECK(cfg.reward_key == RewardKey::origin);
  const auto m = build_gridworld(cfg);
  CHECK(reward_to(m, 1, kLeft, 0) == 1.0);
  CHECK(reward_to(m, 0, kRight, 1) == doctest::Approx(0.1));
}

TEST_CASE("layout parsing and formatting") {
  const std::string text =
      "# comment\n[grid]\nS.G\nT..\n\n[params]\np_slip = 0.06\np_escape=0.1\n"
      "[experts]\na = up right down left\nb = 2 1 0 3\n";
  const auto cfg = parse_grid_layout(text);
  CHECK(cfg.width == 3);
  CHECK(cfg.height == 2);
  CHECK(cfg.tile(2) == Tile::green);
  CHECK(cfg.tile(3) == Tile::trap);
  CHECK(cfg.p_slip == 0.06);
  CHECK(cfg.p_escape == 0.1);
  REQUIRE(cfg.experts.size() == 2);
  CHECK(cfg.experts[1].action_to_direction == std::array<std::size_t, 4>{2, 1, 0, 3});
  CHECK(parse_grid_layout(format_grid_layout(cfg)) == cfg);

  auto error_of = [](const std::string& t) {
    try {
      parse_grid_layout(t, "g");
    } catch (const ParseError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(error_of("[grid]\nS.x\n").find("g:2") != std::string::npos);
  CHECK(error_of("[grid]\nS..\n..\n").find("cells") != std::string::npos);
  CHECK(error_of("[grid]\nS.S\n").find("start") != std::string::npos);
  CHECK(error_of("[grid]\n...\n").find("start") != std::string::npos);
  CHECK(error_of("[grid]\nS.\n[params]\nwind = 2\n").find("wind") != std::string::npos);
  CHECK(error_of("[grid]\nS.\n[params]\np_slip = 1.5\n").find("p_slip") != std::string::npos);
  CHECK(error_of("[grid]\nS.\n[experts]\ne = up up down left\n").find("permutation") != std::string::npos);
  CHECK(error_of("[grid]\nS.\n[experts]\ne = up north down left\n").find("north") != std::string::npos);
  CHECK(error_of("[grid]\nS.\n[extras]\n").find("extras") != std::string::npos);
  CHECK(error_of("[params]\np_slip = 0.1\n").find("[grid]") != std::string::npos);
}

TEST_CASE("permute_actions") {
  const auto m = build_gridworld(load_grid_layout(default_grid_path()));
  const std::array<std::size_t, 4> identity{0, 1, 2, 3};
  CHECK(permute_actions(m, identity) == m);

  const std::array<std::size_t, 4> swap{1, 0, 2, 3};
  const auto once = permute_actions(m, swap);
  CHECK_FALSE(once == m);
  CHECK(permute_actions(once, swap) == m);
  CHECK(once.transition(0, 0, 1) == m.transition(0, 1, 1));

  const auto cfg = load_grid_layout(default_grid_path());
  std::vector<FiniteMdp> trained_on;
  for (const auto& e : cfg.experts) trained_on.push_back(permute_actions(m, e.action_to_direction));
  for (std::size_t i = 0; i < trained_on.size(); ++i)
    for (std::size_t j = i + 1; j < trained_on.size(); ++j) CHECK_FALSE(trained_on[i] == trained_on[j]);

  const std::array<std::size_t, 4> not_bijective{0, 0, 2, 3};
  CHECK_THROWS_AS(permute_actions(m, not_bijective), std::invalid_argument);
  const std::array<std::size_t, 3> short_map{0, 1, 2};
  CHECK_THROWS_AS(permute_actions(m, short_map), std::invalid_argument);
}

TEST_CASE("train_expert") {
  SUBCASE("one state picks the largest immediate reward") {
    FiniteMdp m(1, 4);
    const double r[4] = {0.2, 0.9, 0.1, 0.3};
    for (std::size_t a = 0; a < 4; ++a) m.add_outcome(0, a, 0, 1.0, RewardDistribution::deterministic(r[a]));
    const auto p = train_expert(m);
    CHECK(p.probs(0, 1) == 1.0);
  }
  SUBCASE("two states: the rewarding action wins everywhere") {
    // Action 0 moves to state 1 paying 1, action 1 moves to state 0 paying 0.
    FiniteMdp m(2, 2);
    for (std::size_t s = 0; s < 2; ++s) {
      m.add_outcome(s, 0, 1, 1.0, RewardDistribution::deterministic(1.0));
      m.add_outcome(s, 1, 0, 1.0, RewardDistribution::deterministic(0.0));
    }
    const auto p = train_expert(m, 0.95);
    CHECK(p.probs(0, 0) == 1.0);
    CHECK(p.probs(1, 0) == 1.0);
  }
  SUBCASE("ties go to the lowest action") {
    FiniteMdp m(1, 3);
    for (std::size_t a = 0; a < 3; ++a) m.add_outcome(0, a, 0, 1.0, RewardDistribution::deterministic(0.5));
    CHECK(train_expert(m).probs(0, 0) == 1.0);
  }
  SUBCASE("iteration cap") {
    FiniteMdp m(1, 1);
    m.add_outcome(0, 0, 0, 1.0, RewardDistribution::deterministic(1.0));
    CHECK_THROWS_AS(train_expert(m, 0.95, 1e-9, "x", 3), NoConvergenceError);
    CHECK_THROWS_AS(train_expert(m, 1.0), std::invalid_argument);
  }
}

TEST_CASE("default benchmark grid") {
  const auto cfg = load_grid_layout(default_grid_path());
  CHECK(cfg.width == 5);
  CHECK(cfg.height == 5);
  REQUIRE(cfg.experts.size() == 4);
  const auto m = build_gridworld(cfg);
  REQUIRE(validate_mdp(m).empty());
  const auto experts = train_grid_experts(cfg);

  for (const auto& e : experts) CHECK(check_ergodicity(induced_chain(m, e)).ergodic());

  const auto profiles = profile_experts(m, experts);
  const auto g = gaps(std::span<const MixingProfile>(profiles));
  CHECK(profiles[g.best].expert_id == "e1");
  for (std::size_t e = 1; e < profiles.size(); ++e) CHECK(profiles[e].gap > 0.0);

  // The perturbation swaps left and right; the new dynamics favour e2.
  const auto specs = canonical_experiments();
  const auto& event = specs.back().events.front();
  const auto moved = permute_actions(m, event.permutation);
  for (const auto& e : experts) CHECK(check_ergodicity(induced_chain(moved, e)).ergodic());
  const auto after = profile_experts(moved, experts);
  const auto g2 = gaps(std::span<const MixingProfile>(after));
  CHECK(g2.best != g.best);
  CHECK(after[g2.best].expert_id == "e2");

  // Strict mode refuses a measured constant above the floor of 2.
  ChainOptions strict;
  strict.mixing.strict = true;
  CHECK(profiles[0].empirical_c > 2.0);
  CHECK_THROWS_AS(profile_expert(m, experts[0], strict), MixingConstantError);
}

TEST_CASE("canonical experiments") {
  const auto specs = canonical_experiments();
  std::vector<std::size_t> t0s;
  for (const auto& s : specs) {
    CHECK(s.schedule.slope == 0.1);
    CHECK(s.seeds.size() == 10);
    CHECK(s.validate().empty());
    if (s.events.empty()) t0s.push_back(s.schedule.t0);
  }
  CHECK(t0s == std::vector<std::size_t>{4, 16, 64});
  const auto& p = specs.back();
  REQUIRE(p.events.size() == 1);
  CHECK(p.events[0].iteration == 5000);
  CHECK(p.iterations > 5000);
}
