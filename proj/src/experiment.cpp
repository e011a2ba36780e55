#include "mabmdp/experiment.hpp"

#include <algorithm>
#include <exception>
#include <limits>
#include <set>

#include <json.hpp>

#include "mabmdp/csv.hpp"
#include "mabmdp/gridworld.hpp"
#include "mabmdp/mdp_io.hpp"

namespace mabmdp {

using json = nlohmann::ordered_json;

namespace {

constexpr const char* kSpecFormat = "mabmdp-experiment";

std::string resolve(const std::string& p, const std::filesystem::path& base) {
  if (p.empty()) return p;
  const std::filesystem::path path(p);
  if (path.is_absolute()) return path.lexically_normal().string();
  return (base / path).lexically_normal().string();
}

template <typename T>
T take(const json& j, const char* name, const std::string& source) {
  try {
    return j.at(name).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(source + ": field '" + name + "': " + e.what());
  }
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; }))
      throw ParseError(where + ": unknown field '" + key + "'");
  }
}

const char* k_mode_name(KMode mode) { return mode == KMode::pooled ? "pooled" : "per_expert"; }

double r_star_of(const std::vector<MixingProfile>& profiles) {
  return profiles[gaps(std::span<const MixingProfile>(profiles)).best].steady_reward;
}

}  // namespace

std::filesystem::path default_grid_path() {
  return std::filesystem::path(MABMDP_DATA_DIR) / "gridworld_5x5.grid";
}

std::vector<std::string> ExperimentSpec::validate() const {
  std::vector<std::string> out;
  namespace fs = std::filesystem;
  if (iterations == 0) out.push_back("iterations must be at least 1");
  if (seeds.empty()) out.push_back("at least one seed is required");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
    out.push_back("seeds must be distinct");
  if (schedule.t0 == 0) out.push_back("t0 must be at least 1");
  if (!(schedule.slope >= 0.0)) out.push_back("c must be nonnegative");
  if (workers == 0) out.push_back("workers must be at least 1");
  if (!(discount > 0.0 && discount < 1.0)) out.push_back("discount must lie in (0,1)");
  const bool grid = !grid_file.empty();
  const bool files = !mdp_file.empty();
  if (grid == files) out.push_back("exactly one of a grid layout or an MDP file is required");
  if (grid && !fs::exists(grid_file)) out.push_back("grid file not found: " + grid_file);
  if (files) {
    if (!fs::exists(mdp_file)) out.push_back("MDP file not found: " + mdp_file);
    if (expert_files.empty()) out.push_back("an MDP source needs at least one expert file");
    for (const auto& f : expert_files)
      if (!fs::exists(f)) out.push_back("expert file not found: " + f);
  }
  for (const auto& ev : events) {
    const std::string at = "event at iteration " + std::to_string(ev.iteration);
    if (ev.permutation.empty() == ev.mdp_file.empty())
      out.push_back(at + " needs exactly one of a permutation or an MDP file");
    if (!ev.mdp_file.empty() && !fs::exists(ev.mdp_file)) out.push_back(at + ": MDP file not found: " + ev.mdp_file);
  }
  return out;
}

std::string spec_to_json(const ExperimentSpec& spec) {
  json j;
  j["format"] = kSpecFormat;
  j["version"] = 1;
  j["name"] = spec.name;
  json source;
  if (!spec.grid_file.empty()) {
    source["grid"] = spec.grid_file;
  } else {
    source["mdp"] = spec.mdp_file;
    source["experts"] = spec.expert_files;
  }
  j["source"] = source;
  j["schedule"] = {{"t0", spec.schedule.t0}, {"c", spec.schedule.slope}};
  j["iterations"] = spec.iterations;
  j["seeds"] = spec.seeds;
  json events = json::array();
  for (const auto& ev : spec.events) {
    json e;
    e["iteration"] = ev.iteration;
    if (!ev.permutation.empty()) e["permutation"] = ev.permutation;
    if (!ev.mdp_file.empty()) e["mdp"] = ev.mdp_file;
    if (!ev.label.empty()) e["label"] = ev.label;
    events.push_back(e);
  }
  j["events"] = events;
  j["k_mode"] = k_mode_name(spec.k_mode);
  j["discount"] = spec.discount;
  j["workers"] = spec.workers;
  j["out_dir"] = spec.out_dir;
  return j.dump(2) + "\n";
}

ExperimentSpec spec_from_json(const std::string& text, const std::filesystem::path& base_dir,
                              const std::string& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(source + ": " + e.what());
  }
  if (!j.is_object()) throw ParseError(source + ": top level must be an object");
  reject_unknown(j, {"format", "version", "name", "source", "schedule", "iterations", "seeds", "events", "k_mode",
                     "discount", "workers", "out_dir"},
                 source);
  if (j.value("format", std::string()) != kSpecFormat)
    throw ParseError(source + ": field 'format' must be \"" + kSpecFormat + "\"");
  if (j.value("version", 0) != 1) throw ParseError(source + ": unsupported version");

  ExperimentSpec spec;
  if (j.contains("name")) spec.name = take<std::string>(j, "name", source);

  if (!j.contains("source")) throw ParseError(source + ": missing field 'source'");
  const json& src = j.at("source");
  reject_unknown(src, {"grid", "mdp", "experts"}, source + ": source");
  if (src.contains("grid")) {
    const auto g = take<std::string>(src, "grid", source);
    spec.grid_file = g == "default" ? default_grid_path().string() : resolve(g, base_dir);
  }
  if (src.contains("mdp")) spec.mdp_file = resolve(take<std::string>(src, "mdp", source), base_dir);
  if (src.contains("experts"))
    for (const auto& f : take<std::vector<std::string>>(src, "experts", source))
      spec.expert_files.push_back(resolve(f, base_dir));

  if (j.contains("schedule")) {
    const json& s = j.at("schedule");
    reject_unknown(s, {"t0", "c"}, source + ": schedule");
    if (s.contains("t0")) {
      const auto t0 = take<long long>(s, "t0", source);
      if (t0 < 1) throw ParseError(source + ": field 't0' must be at least 1");
      spec.schedule.t0 = static_cast<std::size_t>(t0);
    }
    if (s.contains("c")) spec.schedule.slope = take<double>(s, "c", source);
  }
  if (j.contains("iterations")) {
    const auto n = take<long long>(j, "iterations", source);
    if (n < 1) throw ParseError(source + ": field 'iterations' must be at least 1");
    spec.iterations = static_cast<std::size_t>(n);
  }
  if (j.contains("seeds")) spec.seeds = take<std::vector<std::uint64_t>>(j, "seeds", source);
  if (j.contains("events")) {
    for (const auto& e : j.at("events")) {
      reject_unknown(e, {"iteration", "permutation", "mdp", "label"}, source + ": event");
      EventSpec ev;
      ev.iteration = take<std::size_t>(e, "iteration", source);
      if (e.contains("permutation")) ev.permutation = take<std::vector<std::size_t>>(e, "permutation", source);
      if (e.contains("mdp")) ev.mdp_file = resolve(take<std::string>(e, "mdp", source), base_dir);
      if (e.contains("label")) ev.label = take<std::string>(e, "label", source);
      spec.events.push_back(std::move(ev));
    }
  }
  if (j.contains("k_mode")) {
    const auto mode = take<std::string>(j, "k_mode", source);
    if (mode == "pooled") spec.k_mode = KMode::pooled;
    else if (mode == "per_expert") spec.k_mode = KMode::per_expert;
    else throw ParseError(source + ": field 'k_mode' must be \"pooled\" or \"per_expert\"");
  }
  if (j.contains("discount")) spec.discount = take<double>(j, "discount", source);
  if (j.contains("workers")) {
    const auto w = take<long long>(j, "workers", source);
    if (w < 1) throw ParseError(source + ": field 'workers' must be at least 1");
    spec.workers = static_cast<std::size_t>(w);
  }
  if (j.contains("out_dir")) spec.out_dir = resolve(take<std::string>(j, "out_dir", source), base_dir);

  const auto problems = spec.validate();
  if (!problems.empty()) throw ParseError(source + ": " + problems.front());
  return spec;
}

ExperimentSpec load_spec(const std::filesystem::path& path) {
  const auto base = std::filesystem::absolute(path).parent_path();
  return spec_from_json(read_text_file(path), base, path.string());
}

void save_spec(const ExperimentSpec& spec, const std::filesystem::path& path) {
  write_file_atomic(path, spec_to_json(spec));
}

std::vector<double> PreparedExperiment::r_star_by_iteration(std::size_t iterations) const {
  std::vector<double> out(iterations);
  std::size_t epoch = 0;
  for (std::size_t m = 0; m < iterations; ++m) {
    while (epoch < events.size() && events[epoch].iteration <= m) ++epoch;
    out[m] = r_star_of(epoch_profiles[epoch]);
  }
  return out;
}

PreparedExperiment prepare_experiment(const ExperimentSpec& spec, const ChainOptions& options) {
  const auto problems = spec.validate();
  if (!problems.empty()) throw std::invalid_argument("experiment '" + spec.name + "': " + problems.front());

  PreparedExperiment out;
  if (!spec.grid_file.empty()) {
    const auto cfg = load_grid_layout(spec.grid_file);
    out.mdp = build_gridworld(cfg);
    out.experts = train_grid_experts(cfg, spec.discount);
  } else {
    out.mdp = load_mdp(spec.mdp_file);
    for (const auto& f : spec.expert_files) out.experts.push_back(load_policy(f));
  }
  require_valid(out.mdp);
  for (const auto& e : out.experts) require_valid(e, out.mdp);

  std::vector<EventSpec> ordered = spec.events;
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const EventSpec& a, const EventSpec& b) { return a.iteration < b.iteration; });
  for (const auto& ev : ordered) {
    DynamicsEvent d;
    d.iteration = ev.iteration;
    d.label = ev.label;
    if (!ev.permutation.empty()) {
      d.mdp = permute_actions(out.mdp, ev.permutation);
      if (d.label.empty()) d.label = "permutation";
    } else {
      d.mdp = load_mdp(ev.mdp_file);
      if (d.label.empty()) d.label = ev.mdp_file;
    }
    require_valid(d.mdp);
    if (d.mdp.n_states() != out.mdp.n_states() || d.mdp.n_actions() != out.mdp.n_actions())
      throw std::invalid_argument("event '" + d.label + "' changes the MDP dimensions");
    out.events.push_back(std::move(d));
  }

  out.epoch_profiles.push_back(profile_experts(out.mdp, out.experts, options));
  for (const auto& ev : out.events) out.epoch_profiles.push_back(profile_experts(ev.mdp, out.experts, options));

  for (const auto& p : out.profiles()) out.selector_k.push_back(p.k_const);
  if (spec.k_mode == KMode::pooled) {
    const double k = *std::max_element(out.selector_k.begin(), out.selector_k.end());
    std::fill(out.selector_k.begin(), out.selector_k.end(), k);
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentSpec& spec, const PreparedExperiment& prepared,
                                Execution execution) {
  const std::size_t runs = spec.seeds.size();
  if (runs == 0) throw std::invalid_argument("run_experiment: no seeds");
  ExperimentResult res;
  res.logs.resize(runs);

  auto one = [&](std::size_t i) {
    UcbSelector selector(prepared.selector_k, spec.schedule);
    Rng rng(spec.seeds[i]);
    res.logs[i] = run_mab(prepared.mdp, prepared.experts, spec.schedule, selector, spec.iterations, rng,
                          prepared.events);
  };

  if (execution == Execution::serial) {
    for (std::size_t i = 0; i < runs; ++i) one(i);
  } else {
    std::vector<std::exception_ptr> errors(runs);
    const int threads = static_cast<int>(std::max<std::size_t>(1, spec.workers));
#pragma omp parallel for num_threads(threads) schedule(dynamic, 1)
    for (long i = 0; i < static_cast<long>(runs); ++i) {
      try {
        one(static_cast<std::size_t>(i));
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  const auto r_star = prepared.r_star_by_iteration(spec.iterations);
  for (const auto& log : res.logs) res.regrets.push_back(cumulative_regret(log, r_star));
  res.aggregate = aggregate_runs(std::span<const RegretCurve>(res.regrets));

  if (!prepared.events.empty()) {
    res.bound_note = "dynamics change mid-run; the UCB bound covers a fixed MDP only";
  } else {
    const auto g = gaps(std::span<const MixingProfile>(prepared.profiles()));
    const std::size_t bad = gap_precondition_violation(g.gaps, prepared.selector_k, spec.schedule.t0);
    if (bad != static_cast<std::size_t>(-1)) {
      res.bound_note = GapTooSmallError(bad, g.gaps[bad], 2.0 * prepared.selector_k[bad] /
                                                               static_cast<double>(spec.schedule.t0))
                           .what();
    } else {
      res.theory_bound.push_back(0.0);
      for (std::size_t n = 1; n <= spec.iterations; ++n)
        res.theory_bound.push_back(ucb_regret_bound(g.gaps, prepared.selector_k, spec.schedule, n));
    }
  }

  const auto& first = res.logs.front();
  for (const auto& rec : first.records) res.times.push_back(rec.elapsed);
  res.times.push_back(first.total_steps());
  res.mean_cumulative_reward.assign(spec.iterations + 1, 0.0);
  for (const auto& log : res.logs) {
    double acc = 0.0;
    for (std::size_t n = 0; n < log.size(); ++n) {
      acc += log.records[n].avg_reward * static_cast<double>(log.records[n].horizon);
      res.mean_cumulative_reward[n + 1] += acc;
    }
  }
  for (double& v : res.mean_cumulative_reward) v /= static_cast<double>(runs);
  return res;
}

std::string runlog_csv(const RunLog& log) {
  CsvTable t({"n", "expert", "T_n", "start_state", "avg_reward", "t_n"});
  for (const auto& r : log.records) {
    t.cell(r.n).cell(r.expert).cell(r.horizon).cell(r.start_state).cell(r.avg_reward).cell(r.elapsed);
    t.end_row();
  }
  return t.str();
}

std::string regret_csv(const RegretCurve& curve) {
  CsvTable t({"n", "regret"});
  for (std::size_t n = 0; n < curve.values.size(); ++n) {
    t.cell(n).cell(curve.values[n]);
    t.end_row();
  }
  return t.str();
}

std::string aggregate_csv(const ExperimentResult& result) {
  CsvTable t({"n", "mean_regret", "std_regret", "theory_bound"});
  const auto nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t n = 0; n < result.aggregate.mean.size(); ++n) {
    t.cell(n).cell(result.aggregate.mean[n]).cell(result.aggregate.std[n]);
    t.cell(result.theory_bound.empty() ? nan : result.theory_bound[n]);
    t.end_row();
  }
  return t.str();
}

std::string reward_time_csv(const ExperimentResult& result) {
  CsvTable t({"t", "mean_cumulative_reward"});
  for (std::size_t n = 0; n < result.times.size(); ++n) {
    t.cell(result.times[n]).cell(result.mean_cumulative_reward[n]);
    t.end_row();
  }
  return t.str();
}

std::string profiles_csv(const std::vector<MixingProfile>& profiles) {
  CsvTable t({"expert_id", "alpha", "C", "K", "steady_reward", "gap", "irreducible", "aperiodic"});
  for (const auto& p : profiles) {
    t.text(p.expert_id).cell(p.slem).cell(p.mix_const).cell(p.k_const).cell(p.steady_reward).cell(p.gap);
    t.cell(p.irreducible).cell(p.aperiodic);
    t.end_row();
  }
  return t.str();
}

void write_experiment(const std::filesystem::path& dir, const PreparedExperiment& prepared,
                      const ExperimentResult& result) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < result.logs.size(); ++i) {
    const std::string seed = std::to_string(result.logs[i].seed);
    write_file_atomic(dir / ("runlog_seed" + seed + ".csv"), runlog_csv(result.logs[i]));
    write_file_atomic(dir / ("regret_seed" + seed + ".csv"), regret_csv(result.regrets[i]));
  }
  write_file_atomic(dir / "aggregate.csv", aggregate_csv(result));
  write_file_atomic(dir / "reward_vs_time.csv", reward_time_csv(result));
  write_file_atomic(dir / "profiles.csv", profiles_csv(prepared.profiles()));
  for (std::size_t i = 1; i < prepared.epoch_profiles.size(); ++i)
    write_file_atomic(dir / ("profiles_epoch" + std::to_string(i) + ".csv"),
                      profiles_csv(prepared.epoch_profiles[i]));
}

std::string combined_csv(const std::vector<ExperimentSpec>& specs, const std::vector<ExperimentResult>& results) {
  if (specs.size() != results.size() || specs.empty())
    throw std::invalid_argument("combined_csv: one result per spec required");
  std::vector<std::string> header{"n"};
  for (const auto& s : specs) header.push_back(s.name);
  const std::size_t len = results.front().aggregate.mean.size();
  for (const auto& r : results)
    if (r.aggregate.mean.size() != len)
      throw std::invalid_argument("combined_csv: experiments have different iteration counts");
  CsvTable t(header);
  for (std::size_t n = 0; n < len; ++n) {
    t.cell(n);
    for (const auto& r : results) t.cell(r.aggregate.mean[n]);
    t.end_row();
  }
  return t.str();
}

std::string combined_reward_time_csv(const std::vector<ExperimentSpec>& specs,
                                     const std::vector<ExperimentResult>& results) {
  if (specs.size() != results.size())
    throw std::invalid_argument("combined_reward_time_csv: one result per spec required");
  CsvTable t({"t0", "t", "mean_cumulative_reward"});
  for (std::size_t i = 0; i < specs.size(); ++i)
    for (std::size_t n = 0; n < results[i].times.size(); ++n) {
      t.cell(specs[i].schedule.t0).cell(results[i].times[n]).cell(results[i].mean_cumulative_reward[n]);
      t.end_row();
    }
  return t.str();
}

std::vector<ExperimentSpec> canonical_experiments(const std::filesystem::path& grid) {
  std::vector<std::uint64_t> seeds(10);
  for (std::size_t i = 0; i < seeds.size(); ++i) seeds[i] = i + 1;

  ExperimentSpec base;
  base.grid_file = grid.string();
  base.schedule.slope = 0.1;
  base.iterations = 5000;
  base.seeds = seeds;
  base.k_mode = KMode::pooled;

  std::vector<ExperimentSpec> out;
  for (std::size_t t0 : {4, 16, 64}) {
    ExperimentSpec s = base;
    s.name = "t0_" + std::to_string(t0);
    s.schedule.t0 = t0;
    s.out_dir = s.name;
    out.push_back(s);
  }

  // Actions now move the way the second expert's training grid did
  // (left and right swapped), so that expert becomes the best one.
  ExperimentSpec p = base;
  p.name = "perturbation";
  p.schedule.t0 = 4;
  p.iterations = 10000;
  p.events.push_back(EventSpec{5000, {0, 3, 2, 1}, "", "swap left/right"});
  p.out_dir = p.name;
  out.push_back(p);
  return out;
}

}  // namespace mabmdp
