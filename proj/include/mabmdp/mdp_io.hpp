#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "mabmdp/mdp.hpp"

namespace mabmdp {

// Malformed input file. The message names the file, field and, for syntax
// errors, the line and column.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// MDP definition file (JSON):
//
//   {
//     "format": "mabmdp-finite-mdp", "version": 1,
//     "states": S, "actions": A, "observations": Y,
//     "transition": [[s, a, s', p], ...],
//     "reward": [[s, a, s', r], [s, a, s', [[v, p], ...]], ...],
//     "observation_kernel": "identity" | [[O(0,0), ...], ...],
//     "initial": [mu0(0), ...]
//   }
//
// Every reward entry must name a listed transition; transitions without one
// carry a deterministic reward of 0. Numbers are written in shortest
// round-trip form, so load(save(m)) == m.
std::string mdp_to_json(const FiniteMdp& mdp);
FiniteMdp mdp_from_json(const std::string& text, const std::string& source = "<string>");
void save_mdp(const FiniteMdp& mdp, const std::filesystem::path& path);
FiniteMdp load_mdp(const std::filesystem::path& path);

// Expert file (JSON): {"format": "mabmdp-expert", "version": 1,
// "expert_id": "...", "policy": [[pi(0,0), ...], ...]}
std::string policy_to_json(const ExpertPolicy& policy);
ExpertPolicy policy_from_json(const std::string& text, const std::string& source = "<string>");
void save_policy(const ExpertPolicy& policy, const std::filesystem::path& path);
ExpertPolicy load_policy(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace mabmdp
