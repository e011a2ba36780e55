#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mabmdp/mdp.hpp"

namespace mabmdp {

enum class Tile : char { normal = '.', trap = 'T', green = 'G', start = 'S' };

// Actions of the unpermuted grid move in these directions.
enum class Direction : std::size_t { up = 0, right = 1, down = 2, left = 3 };
inline constexpr std::size_t kGridActions = 4;

enum class RewardKey { destination, origin };

// An expert is trained on the grid with action a moving in direction
// action_to_direction[a].
struct GridExpertSpec {
  std::string id;
  std::array<std::size_t, kGridActions> action_to_direction{0, 1, 2, 3};

  friend bool operator==(const GridExpertSpec&, const GridExpertSpec&) = default;
};

struct GridworldConfig {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<Tile> tiles;  // row-major, row 0 at the top
  double p_slip = 0.03;     // normal cells: mass split evenly over the other three directions
  double p_escape = 0.02;   // trap cells: move as chosen, otherwise stay
  double reward_green = 1.0;
  double reward_trap = 0.0;
  double reward_normal = 0.1;
  RewardKey reward_key = RewardKey::destination;
  std::vector<GridExpertSpec> experts;

  std::size_t state(std::size_t row, std::size_t col) const { return row * width + col; }
  Tile tile(std::size_t s) const { return tiles.at(s); }
  // Problems with the configuration; empty when valid.
  std::vector<std::string> validate() const;
  std::size_t start_state() const;

  friend bool operator==(const GridworldConfig&, const GridworldConfig&) = default;
};

// Layout file:
//
//   [grid]
//   S....
//   TTT.T
//   [params]
//   p_slip = 0.03
//   reward_on = destination      # or origin
//   [experts]
//   e1 = up right down left      # direction of actions 0..3
//
// '#' starts a comment. Unlisted parameters keep their defaults.
GridworldConfig parse_grid_layout(std::string_view text, const std::string& source = "<string>");
GridworldConfig load_grid_layout(const std::filesystem::path& path);
std::string format_grid_layout(const GridworldConfig& config);

// Cells are states; action a moves in direction a. Normal cells follow the
// chosen direction with 1 - p_slip and each other direction with p_slip/3;
// trap cells stay with 1 - p_escape and follow the chosen direction
// otherwise. A move off the grid is redistributed evenly over the in-grid
// neighbours. Rewards are deterministic, keyed on the destination (or origin)
// tile; mu0 is the start cell and observations are the identity.
FiniteMdp build_gridworld(const GridworldConfig& config);

// P'(s, a, .) = P(s, perm[a], .), rewards likewise.
FiniteMdp permute_actions(const FiniteMdp& mdp, std::span<const std::size_t> perm);

// Discounted value iteration on mean rewards until the sup-norm update is
// below tol, then the greedy deterministic policy (ties to the lowest action).
ExpertPolicy train_expert(const FiniteMdp& mdp, double discount = 0.95, double tol = 1e-9,
                          std::string id = "expert", std::size_t max_iterations = 1'000'000);

// One expert per GridExpertSpec, each trained on its action-permuted grid.
std::vector<ExpertPolicy> train_grid_experts(const GridworldConfig& config, double discount = 0.95,
                                             double tol = 1e-9);

std::string direction_name(std::size_t direction);

}  // namespace mabmdp
