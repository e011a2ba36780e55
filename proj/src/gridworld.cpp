#include "mabmdp/gridworld.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "mabmdp/chain.hpp"
#include "mabmdp/mdp_io.hpp"

namespace mabmdp {

namespace {

constexpr std::array<const char*, kGridActions> kDirectionNames{"up", "right", "down", "left"};
constexpr std::array<int, kGridActions> kRowStep{-1, 0, 1, 0};
constexpr std::array<int, kGridActions> kColStep{0, 1, 0, -1};

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

double parse_number(const std::string& value, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ParseError(where + ": expected a number, got '" + value + "'");
  }
}

std::size_t parse_direction(const std::string& token, const std::string& where) {
  for (std::size_t d = 0; d < kGridActions; ++d)
    if (token == kDirectionNames[d] || token == std::to_string(d)) return d;
  throw ParseError(where + ": unknown direction '" + token + "'");
}

std::string fmt_param(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string direction_name(std::size_t direction) { return kDirectionNames.at(direction); }

std::vector<std::string> GridworldConfig::validate() const {
  std::vector<std::string> out;
  if (width == 0 || height == 0) out.push_back("grid must have positive width and height");
  if (tiles.size() != width * height)
    out.push_back("tile map has " + std::to_string(tiles.size()) + " cells, expected " +
                  std::to_string(width * height));
  const auto starts = std::count(tiles.begin(), tiles.end(), Tile::start);
  if (starts != 1) out.push_back("grid needs exactly one start cell, found " + std::to_string(starts));
  auto unit = [&](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) out.push_back(std::string(name) + " must lie in [0,1]");
  };
  unit(p_slip, "p_slip");
  unit(p_escape, "p_escape");
  unit(reward_green, "reward_green");
  unit(reward_trap, "reward_trap");
  unit(reward_normal, "reward_normal");
  for (const auto& e : experts) {
    auto sorted = e.action_to_direction;
    std::sort(sorted.begin(), sorted.end());
    if (sorted != std::array<std::size_t, kGridActions>{0, 1, 2, 3})
      out.push_back("expert '" + e.id + "' action map is not a permutation of the four directions");
  }
  return out;
}

std::size_t GridworldConfig::start_state() const {
  const auto it = std::find(tiles.begin(), tiles.end(), Tile::start);
  if (it == tiles.end()) throw std::invalid_argument("grid has no start cell");
  return static_cast<std::size_t>(it - tiles.begin());
}

GridworldConfig parse_grid_layout(std::string_view text, const std::string& source) {
  GridworldConfig cfg;
  std::string section;
  std::vector<std::string> rows;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string where = source + ":" + std::to_string(line_no);
    std::string line = raw.substr(0, raw.find('#'));
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(where + ": malformed section header");
      section = line.substr(1, line.size() - 2);
      if (section != "grid" && section != "params" && section != "experts")
        throw ParseError(where + ": unknown section [" + section + "]");
      continue;
    }
    if (section == "grid") {
      for (char ch : line)
        if (ch != '.' && ch != 'T' && ch != 'G' && ch != 'S')
          throw ParseError(where + ": unknown cell code '" + std::string(1, ch) + "'");
      if (!rows.empty() && line.size() != rows.front().size())
        throw ParseError(where + ": grid row has " + std::to_string(line.size()) + " cells, expected " +
                         std::to_string(rows.front().size()));
      rows.push_back(line);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos || section.empty()) throw ParseError(where + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section == "params") {
      if (key == "p_slip") cfg.p_slip = parse_number(value, where);
      else if (key == "p_escape") cfg.p_escape = parse_number(value, where);
      else if (key == "reward_green") cfg.reward_green = parse_number(value, where);
      else if (key == "reward_trap") cfg.reward_trap = parse_number(value, where);
      else if (key == "reward_normal") cfg.reward_normal = parse_number(value, where);
      else if (key == "reward_on") {
        if (value == "destination") cfg.reward_key = RewardKey::destination;
        else if (value == "origin") cfg.reward_key = RewardKey::origin;
        else throw ParseError(where + ": reward_on must be 'destination' or 'origin'");
      } else {
        throw ParseError(where + ": unknown parameter '" + key + "'");
      }
    } else {
      GridExpertSpec spec;
      spec.id = key;
      std::istringstream tokens(value);
      std::string tok;
      std::size_t a = 0;
      while (tokens >> tok) {
        if (a == kGridActions) throw ParseError(where + ": expert '" + key + "' maps more than 4 actions");
        spec.action_to_direction[a++] = parse_direction(tok, where);
      }
      if (a != kGridActions) throw ParseError(where + ": expert '" + key + "' must map exactly 4 actions");
      cfg.experts.push_back(spec);
    }
  }
  if (rows.empty()) throw ParseError(source + ": missing [grid] section");
  cfg.height = rows.size();
  cfg.width = rows.front().size();
  for (const auto& r : rows)
    for (char ch : r) cfg.tiles.push_back(static_cast<Tile>(ch));
  const auto problems = cfg.validate();
  if (!problems.empty()) throw ParseError(source + ": " + problems.front());
  return cfg;
}

GridworldConfig load_grid_layout(const std::filesystem::path& path) {
  return parse_grid_layout(read_text_file(path), path.string());
}

std::string format_grid_layout(const GridworldConfig& config) {
  std::ostringstream os;
  os << "[grid]\n";
  for (std::size_t r = 0; r < config.height; ++r) {
    for (std::size_t c = 0; c < config.width; ++c) os << static_cast<char>(config.tiles[config.state(r, c)]);
    os << '\n';
  }
  os << "\n[params]\n"
     << "p_slip = " << fmt_param(config.p_slip) << '\n'
     << "p_escape = " << fmt_param(config.p_escape) << '\n'
     << "reward_green = " << fmt_param(config.reward_green) << '\n'
     << "reward_trap = " << fmt_param(config.reward_trap) << '\n'
     << "reward_normal = " << fmt_param(config.reward_normal) << '\n'
     << "reward_on = " << (config.reward_key == RewardKey::destination ? "destination" : "origin") << '\n';
  if (!config.experts.empty()) {
    os << "\n[experts]\n";
    for (const auto& e : config.experts) {
      os << e.id << " =";
      for (std::size_t d : e.action_to_direction) os << ' ' << kDirectionNames[d];
      os << '\n';
    }
  }
  return os.str();
}

FiniteMdp build_gridworld(const GridworldConfig& config) {
  const auto problems = config.validate();
  if (!problems.empty()) throw std::invalid_argument("build_gridworld: " + problems.front());

  const std::size_t W = config.width, H = config.height, S = W * H;
  FiniteMdp mdp(S, kGridActions);

  auto reward_of = [&](std::size_t s) {
    switch (config.tiles[s]) {
      case Tile::green: return config.reward_green;
      case Tile::trap: return config.reward_trap;
      default: return config.reward_normal;
    }
  };

  for (std::size_t r = 0; r < H; ++r)
    for (std::size_t c = 0; c < W; ++c) {
      const std::size_t s = config.state(r, c);
      std::array<std::size_t, kGridActions> neighbour{};
      std::array<bool, kGridActions> inside{};
      std::size_t n_inside = 0;
      for (std::size_t d = 0; d < kGridActions; ++d) {
        const long rr = static_cast<long>(r) + kRowStep[d];
        const long cc = static_cast<long>(c) + kColStep[d];
        inside[d] = rr >= 0 && cc >= 0 && rr < static_cast<long>(H) && cc < static_cast<long>(W);
        if (inside[d]) {
          neighbour[d] = config.state(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc));
          ++n_inside;
        }
      }

      for (std::size_t a = 0; a < kGridActions; ++a) {
        std::map<std::size_t, double> row;
        auto move = [&](std::size_t d, double p) {
          if (p == 0.0) return;
          if (inside[d]) {
            row[neighbour[d]] += p;
          } else if (n_inside == 0) {
            row[s] += p;
          } else {
            for (std::size_t k = 0; k < kGridActions; ++k)
              if (inside[k]) row[neighbour[k]] += p / static_cast<double>(n_inside);
          }
        };
        if (config.tiles[s] == Tile::trap) {
          row[s] += 1.0 - config.p_escape;
          move(a, config.p_escape);
        } else {
          move(a, 1.0 - config.p_slip);
          for (std::size_t d = 0; d < kGridActions; ++d)
            if (d != a) move(d, config.p_slip / 3.0);
        }
        for (const auto& [next, p] : row) {
          const double rew = config.reward_key == RewardKey::destination ? reward_of(next) : reward_of(s);
          mdp.add_outcome(s, a, next, p, RewardDistribution::deterministic(rew));
        }
      }
    }

  Vector mu0 = Vector::Zero(static_cast<Eigen::Index>(S));
  mu0(static_cast<Eigen::Index>(config.start_state())) = 1.0;
  mdp.set_initial(std::move(mu0));
  return mdp;
}

FiniteMdp permute_actions(const FiniteMdp& mdp, std::span<const std::size_t> perm) {
  const std::size_t A = mdp.n_actions();
  if (perm.size() != A) throw std::invalid_argument("permute_actions: permutation must cover every action");
  std::vector<char> hit(A, 0);
  for (std::size_t a : perm) {
    if (a >= A || hit[a]) throw std::invalid_argument("permute_actions: map is not a bijection");
    hit[a] = 1;
  }
  FiniteMdp out(mdp.n_states(), A, mdp.n_obs());
  for (std::size_t s = 0; s < mdp.n_states(); ++s)
    for (std::size_t a = 0; a < A; ++a) out.set_outcomes(s, a, mdp.outcomes(s, perm[a]));
  out.set_observation(mdp.observation());
  out.set_initial(mdp.initial());
  return out;
}

ExpertPolicy train_expert(const FiniteMdp& mdp, double discount, double tol, std::string id,
                          std::size_t max_iterations) {
  if (!(discount > 0.0 && discount < 1.0)) throw std::invalid_argument("train_expert: discount must be in (0,1)");
  require_valid(mdp);
  const std::size_t S = mdp.n_states(), A = mdp.n_actions();

  auto q_value = [&](const Vector& V, std::size_t s, std::size_t a) {
    double q = 0.0;
    for (const auto& o : mdp.outcomes(s, a))
      q += o.prob * (o.reward.mean() + discount * V(static_cast<Eigen::Index>(o.next)));
    return q;
  };

  Vector V = Vector::Zero(static_cast<Eigen::Index>(S));
  Vector next(static_cast<Eigen::Index>(S));
  bool converged = false;
  for (std::size_t it = 0; it < max_iterations; ++it) {
    for (std::size_t s = 0; s < S; ++s) {
      double best = q_value(V, s, 0);
      for (std::size_t a = 1; a < A; ++a) best = std::max(best, q_value(V, s, a));
      next(static_cast<Eigen::Index>(s)) = best;
    }
    const double delta = (next - V).cwiseAbs().maxCoeff();
    std::swap(V, next);
    if (delta < tol) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw NoConvergenceError("train_expert: value iteration did not reach tolerance within " +
                             std::to_string(max_iterations) + " sweeps");

  std::vector<ActionIndex> greedy(S, 0);
  for (std::size_t s = 0; s < S; ++s) {
    double best = q_value(V, s, 0);
    for (std::size_t a = 1; a < A; ++a) {
      const double q = q_value(V, s, a);
      if (q > best) {
        best = q;
        greedy[s] = a;
      }
    }
  }
  return ExpertPolicy::deterministic(std::move(id), greedy, A);
}

std::vector<ExpertPolicy> train_grid_experts(const GridworldConfig& config, double discount, double tol) {
  if (config.experts.empty()) throw std::invalid_argument("train_grid_experts: layout lists no experts");
  const FiniteMdp base = build_gridworld(config);
  std::vector<ExpertPolicy> out;
  out.reserve(config.experts.size());
  for (const auto& spec : config.experts)
    out.push_back(train_expert(permute_actions(base, spec.action_to_direction), discount, tol, spec.id));
  return out;
}

}  // namespace mabmdp
