#include "mabmdp/mdp_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace mabmdp {

using json = nlohmann::ordered_json;

namespace {

constexpr const char* kMdpFormat = "mabmdp-finite-mdp";
constexpr const char* kExpertFormat = "mabmdp-expert";

json parse_json(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(source + ": " + e.what());
  }
}

const json& field(const json& j, const char* name, const std::string& source) {
  if (!j.is_object() || !j.contains(name))
    throw ParseError(source + ": missing field '" + std::string(name) + "'");
  return j.at(name);
}

template <typename T>
T get_as(const json& j, const std::string& what, const std::string& source) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw ParseError(source + ": field '" + what + "': " + e.what());
  }
}

std::size_t positive_count(const json& j, const char* name, const std::string& source) {
  const auto v = get_as<long long>(field(j, name, source), name, source);
  if (v <= 0) throw ParseError(source + ": field '" + std::string(name) + "' must be positive");
  return static_cast<std::size_t>(v);
}

std::size_t bounded_index(const json& j, std::size_t bound, const std::string& what,
                          const std::string& source) {
  const auto v = get_as<long long>(j, what, source);
  if (v < 0 || static_cast<std::size_t>(v) >= bound)
    throw ParseError(source + ": " + what + " index " + std::to_string(v) + " out of range [0," +
                     std::to_string(bound) + ")");
  return static_cast<std::size_t>(v);
}

Matrix matrix_from_json(const json& j, std::size_t rows, std::size_t cols, const std::string& what,
                        const std::string& source) {
  if (!j.is_array() || j.size() != rows)
    throw ParseError(source + ": field '" + what + "' must be an array of " + std::to_string(rows) + " rows");
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    const auto row = get_as<std::vector<double>>(j[r], what, source);
    if (row.size() != cols)
      throw ParseError(source + ": field '" + what + "' row " + std::to_string(r) + " has " +
                       std::to_string(row.size()) + " entries, expected " + std::to_string(cols));
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
  }
  return m;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

void check_format(const json& j, const char* expected, const std::string& source) {
  const auto fmt = get_as<std::string>(field(j, "format", source), "format", source);
  if (fmt != expected)
    throw ParseError(source + ": field 'format' is '" + fmt + "', expected '" + expected + "'");
  if (j.contains("version") && get_as<int>(j.at("version"), "version", source) != 1)
    throw ParseError(source + ": unsupported version");
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string() + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << contents;
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string mdp_to_json(const FiniteMdp& mdp) {
  json j;
  j["format"] = kMdpFormat;
  j["version"] = 1;
  j["states"] = mdp.n_states();
  j["actions"] = mdp.n_actions();
  j["observations"] = mdp.n_obs();
  json transition = json::array();
  json reward = json::array();
  for (std::size_t s = 0; s < mdp.n_states(); ++s)
    for (std::size_t a = 0; a < mdp.n_actions(); ++a)
      for (const auto& o : mdp.outcomes(s, a)) {
        transition.push_back(json::array({s, a, o.next, o.prob}));
        if (o.reward.is_deterministic() && o.reward.probs.front() == 1.0) {
          reward.push_back(json::array({s, a, o.next, o.reward.values.front()}));
        } else {
          json dist = json::array();
          for (std::size_t i = 0; i < o.reward.values.size(); ++i)
            dist.push_back(json::array({o.reward.values[i], o.reward.probs[i]}));
          reward.push_back(json::array({s, a, o.next, dist}));
        }
      }
  j["transition"] = std::move(transition);
  j["reward"] = std::move(reward);
  if (mdp.observation_is_identity())
    j["observation_kernel"] = "identity";
  else
    j["observation_kernel"] = matrix_to_json(mdp.observation());
  j["initial"] = std::vector<double>(mdp.initial().data(), mdp.initial().data() + mdp.initial().size());
  return j.dump(1) + "\n";
}

FiniteMdp mdp_from_json(const std::string& text, const std::string& source) {
  const json j = parse_json(text, source);
  check_format(j, kMdpFormat, source);
  const std::size_t S = positive_count(j, "states", source);
  const std::size_t A = positive_count(j, "actions", source);
  const std::size_t Y = j.contains("observations") ? positive_count(j, "observations", source) : S;

  FiniteMdp mdp(S, A, Y);
  const json& transition = field(j, "transition", source);
  if (!transition.is_array()) throw ParseError(source + ": field 'transition' must be an array");
  for (std::size_t i = 0; i < transition.size(); ++i) {
    const json& e = transition[i];
    const std::string what = "transition[" + std::to_string(i) + "]";
    if (!e.is_array() || e.size() != 4) throw ParseError(source + ": " + what + " must be [s, a, s', p]");
    const auto s = bounded_index(e[0], S, what + " state", source);
    const auto a = bounded_index(e[1], A, what + " action", source);
    const auto next = bounded_index(e[2], S, what + " next state", source);
    try {
      mdp.add_outcome(s, a, next, get_as<double>(e[3], what, source));
    } catch (const std::invalid_argument& err) {
      throw ParseError(source + ": " + what + ": " + err.what());
    }
  }

  if (j.contains("reward")) {
    const json& reward = j.at("reward");
    if (!reward.is_array()) throw ParseError(source + ": field 'reward' must be an array");
    for (std::size_t i = 0; i < reward.size(); ++i) {
      const json& e = reward[i];
      const std::string what = "reward[" + std::to_string(i) + "]";
      if (!e.is_array() || e.size() != 4) throw ParseError(source + ": " + what + " must be [s, a, s', r]");
      const auto s = bounded_index(e[0], S, what + " state", source);
      const auto a = bounded_index(e[1], A, what + " action", source);
      const auto next = bounded_index(e[2], S, what + " next state", source);
      RewardDistribution dist;
      if (e[3].is_number()) {
        dist = RewardDistribution::deterministic(get_as<double>(e[3], what, source));
      } else {
        if (!e[3].is_array() || e[3].empty())
          throw ParseError(source + ": " + what + " distribution must be a non-empty [[v, p], ...]");
        for (const auto& vp : e[3]) {
          const auto pair = get_as<std::vector<double>>(vp, what, source);
          if (pair.size() != 2) throw ParseError(source + ": " + what + " entries must be [v, p]");
          dist.values.push_back(pair[0]);
          dist.probs.push_back(pair[1]);
        }
      }
      auto row = mdp.outcomes(s, a);
      bool found = false;
      for (auto& o : row)
        if (o.next == next) {
          o.reward = dist;
          found = true;
        }
      if (!found)
        throw ParseError(source + ": " + what + " names (s=" + std::to_string(s) + ",a=" +
                         std::to_string(a) + ",s'=" + std::to_string(next) + ") with no transition entry");
      mdp.set_outcomes(s, a, std::move(row));
    }
  }

  if (j.contains("observation_kernel")) {
    const json& o = j.at("observation_kernel");
    if (o.is_string()) {
      if (o.get<std::string>() != "identity" || Y != S)
        throw ParseError(source + ": field 'observation_kernel' must be \"identity\" (with observations == states) or a matrix");
    } else {
      mdp.set_observation(matrix_from_json(o, S, Y, "observation_kernel", source));
    }
  } else if (Y != S) {
    throw ParseError(source + ": missing field 'observation_kernel'");
  }

  const auto initial = get_as<std::vector<double>>(field(j, "initial", source), "initial", source);
  if (initial.size() != S)
    throw ParseError(source + ": field 'initial' has " + std::to_string(initial.size()) +
                     " entries, expected " + std::to_string(S));
  mdp.set_initial(Eigen::Map<const Vector>(initial.data(), static_cast<Eigen::Index>(S)));
  return mdp;
}

void save_mdp(const FiniteMdp& mdp, const std::filesystem::path& path) {
  write_file_atomic(path, mdp_to_json(mdp));
}

FiniteMdp load_mdp(const std::filesystem::path& path) {
  return mdp_from_json(read_text_file(path), path.string());
}

std::string policy_to_json(const ExpertPolicy& policy) {
  json j;
  j["format"] = kExpertFormat;
  j["version"] = 1;
  j["expert_id"] = policy.id;
  j["states"] = policy.n_states();
  j["actions"] = policy.n_actions();
  j["policy"] = matrix_to_json(policy.probs);
  return j.dump(1) + "\n";
}

ExpertPolicy policy_from_json(const std::string& text, const std::string& source) {
  const json j = parse_json(text, source);
  check_format(j, kExpertFormat, source);
  const json& rows = field(j, "policy", source);
  if (!rows.is_array() || rows.empty() || !rows[0].is_array() || rows[0].empty())
    throw ParseError(source + ": field 'policy' must be a non-empty matrix");
  const std::size_t S = j.contains("states") ? positive_count(j, "states", source) : rows.size();
  const std::size_t A = j.contains("actions") ? positive_count(j, "actions", source) : rows[0].size();
  ExpertPolicy p;
  p.id = j.contains("expert_id") ? get_as<std::string>(j.at("expert_id"), "expert_id", source) : source;
  p.probs = matrix_from_json(rows, S, A, "policy", source);
  return p;
}

void save_policy(const ExpertPolicy& policy, const std::filesystem::path& path) {
  write_file_atomic(path, policy_to_json(policy));
}

ExpertPolicy load_policy(const std::filesystem::path& path) {
  return policy_from_json(read_text_file(path), path.string());
}

}  // namespace mabmdp
