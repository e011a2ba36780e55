// mabmdp: analyze expert chains and run bandit-over-MDP experiments.
//
// Exit codes: 0 success, 1 parse/validation error, 2 precondition violation
// (non-ergodic expert, gap too small for the regret bound), 3 runtime failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "mabmdp/chain.hpp"
#include "mabmdp/csv.hpp"
#include "mabmdp/experiment.hpp"
#include "mabmdp/gridworld.hpp"
#include "mabmdp/mdp_io.hpp"
#include "mabmdp/regret.hpp"

namespace fs = std::filesystem;
using namespace mabmdp;

namespace {

enum Exit { kOk = 0, kInvalid = 1, kPrecondition = 2, kRuntime = 3 };

// Raised for a violated precondition the user asked to be fatal.
struct PreconditionFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SourceFlags {
  std::string config;
  std::string grid;
  std::string mdp;
  std::vector<std::string> experts;
  double discount = 0.95;
};

struct RunFlags {
  std::optional<std::uint64_t> seed;
  std::vector<std::uint64_t> seeds;
  std::optional<std::size_t> t0;
  std::optional<double> c;
  std::optional<std::size_t> iterations;
  std::string out;
  std::optional<std::size_t> workers;
  std::string k_mode;
  bool require_bound = false;
};

void add_source_flags(CLI::App* cmd, SourceFlags& f) {
  cmd->add_option("--grid", f.grid, "Grid layout file ('default' for the shipped benchmark)");
  cmd->add_option("--mdp", f.mdp, "MDP definition (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--expert", f.experts, "Expert policy file (JSON); repeatable")->check(CLI::ExistingFile);
  cmd->add_option("--discount", f.discount, "Trainer discount for grid experts");
}

void add_run_flags(CLI::App* cmd, RunFlags& f, bool sweep) {
  cmd->add_option("--seed", f.seed, "Run a single seed");
  cmd->add_option("--seeds", f.seeds, "Seed list, e.g. 1,2,3")->delimiter(',');
  if (!sweep) cmd->add_option("--t0", f.t0, "Initial horizon T0");
  cmd->add_option("--c", f.c, "Horizon slope c");
  cmd->add_option("--iterations", f.iterations, "Bandit iterations N");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--workers", f.workers, "Seeds run concurrently");
  cmd->add_option("--k-mode", f.k_mode, "K_e used by the selector")->check(CLI::IsMember({"pooled", "per_expert"}));
  cmd->add_flag("--require-bound", f.require_bound, "Fail with exit 2 when the regret bound does not apply");
}

ExperimentSpec build_spec(const SourceFlags& src, const RunFlags& run) {
  ExperimentSpec spec;
  if (!src.config.empty()) {
    spec = load_spec(src.config);
  } else if (!src.mdp.empty()) {
    spec.mdp_file = fs::absolute(src.mdp).string();
    for (const auto& e : src.experts) spec.expert_files.push_back(fs::absolute(e).string());
  } else {
    spec.grid_file = src.grid.empty() || src.grid == "default" ? default_grid_path().string()
                                                                : fs::absolute(src.grid).string();
  }
  if (src.config.empty()) spec.discount = src.discount;
  if (run.seed) spec.seeds = {*run.seed};
  if (!run.seeds.empty()) spec.seeds = run.seeds;
  if (run.t0) spec.schedule.t0 = *run.t0;
  if (run.c) spec.schedule.slope = *run.c;
  if (run.iterations) spec.iterations = *run.iterations;
  if (!run.out.empty()) spec.out_dir = run.out;
  if (run.workers) spec.workers = *run.workers;
  if (run.k_mode == "pooled") spec.k_mode = KMode::pooled;
  if (run.k_mode == "per_expert") spec.k_mode = KMode::per_expert;
  const auto problems = spec.validate();
  if (!problems.empty()) throw std::invalid_argument(problems.front());
  return spec;
}

void report_bound(const ExperimentResult& res, bool require_bound) {
  if (!res.bound_note) return;
  if (require_bound) throw PreconditionFailure(*res.bound_note);
  std::cerr << "warning: theory_bound column left empty: " << *res.bound_note << '\n';
}

void print_summary(const std::string& name, const ExperimentSpec& spec, const PreparedExperiment& prep,
                   const ExperimentResult& res) {
  const auto g = gaps(std::span<const MixingProfile>(prep.profiles()));
  const double final_mean = res.aggregate.mean.back();
  std::cerr << name << ": " << spec.seeds.size() << " seeds, N=" << spec.iterations << ", T0=" << spec.schedule.t0
            << ", c=" << format_double(spec.schedule.slope) << ", best expert " << prep.profiles()[g.best].expert_id
            << ", mean r(N)=" << format_double(final_mean) << '\n';
}

int cmd_analyze(const SourceFlags& src, const std::string& out, bool strict) {
  FiniteMdp mdp;
  std::vector<ExpertPolicy> experts;
  if (!src.mdp.empty()) {
    if (src.experts.empty()) throw std::invalid_argument("analyze: --mdp needs at least one --expert");
    mdp = load_mdp(src.mdp);
    for (const auto& f : src.experts) experts.push_back(load_policy(f));
  } else {
    const auto path = src.grid.empty() || src.grid == "default" ? default_grid_path() : fs::path(src.grid);
    const auto cfg = load_grid_layout(path);
    mdp = build_gridworld(cfg);
    experts = train_grid_experts(cfg, src.discount);
  }
  require_valid(mdp);
  for (const auto& e : experts) require_valid(e, mdp);

  bool all_ergodic = true;
  for (const auto& e : experts) {
    const auto rep = check_ergodicity(induced_chain(mdp, e));
    if (!rep.ergodic()) {
      all_ergodic = false;
      std::cerr << "NotErgodic: expert '" << e.id << "' induces a chain that is "
                << (rep.irreducible ? "periodic (period " + std::to_string(rep.period) + ")"
                                    : "reducible (" + std::to_string(rep.components) + " components)")
                << '\n';
    }
  }
  if (!all_ergodic) return kPrecondition;

  ChainOptions opts;
  opts.mixing.strict = strict;
  const auto profiles = profile_experts(mdp, experts, opts);
  const std::string csv = profiles_csv(profiles);
  if (out.empty())
    std::cout << csv;
  else
    write_file_atomic(out, csv);
  return kOk;
}

int cmd_run(const SourceFlags& src, const RunFlags& flags) {
  const ExperimentSpec spec = build_spec(src, flags);
  const auto prep = prepare_experiment(spec);
  const auto res = run_experiment(spec, prep);
  report_bound(res, flags.require_bound);
  write_experiment(spec.out_dir, prep, res);
  print_summary(spec.name, spec, prep, res);
  return kOk;
}

// Runs one experiment per T0 from a shared preparation and writes the
// combined files next to the per-T0 directories.
void run_sweep(const ExperimentSpec& base, const std::vector<std::size_t>& t0s, const fs::path& out,
               bool require_bound) {
  const auto prep = prepare_experiment(base);
  std::vector<ExperimentSpec> specs;
  std::vector<ExperimentResult> results;
  for (std::size_t t0 : t0s) {
    ExperimentSpec s = base;
    s.schedule.t0 = t0;
    s.name = "t0_" + std::to_string(t0);
    s.out_dir = (out / s.name).string();
    auto res = run_experiment(s, prep);
    report_bound(res, require_bound);
    write_experiment(s.out_dir, prep, res);
    print_summary(s.name, s, prep, res);
    specs.push_back(s);
    results.push_back(std::move(res));
  }
  write_file_atomic(out / "combined.csv", combined_csv(specs, results));
  write_file_atomic(out / "reward_vs_time_combined.csv", combined_reward_time_csv(specs, results));
}

int cmd_sweep(const SourceFlags& src, const RunFlags& flags, std::vector<std::size_t> t0s) {
  const ExperimentSpec spec = build_spec(src, flags);
  for (std::size_t t0 : t0s)
    if (t0 == 0) throw std::invalid_argument("sweep: every T0 must be at least 1");
  run_sweep(spec, t0s, spec.out_dir, flags.require_bound);
  return kOk;
}

int cmd_bench(const fs::path& out, const std::string& grid, std::optional<std::size_t> workers, bool export_only) {
  const fs::path grid_path = grid.empty() || grid == "default" ? default_grid_path() : fs::absolute(grid);
  const auto cfg = load_grid_layout(grid_path);
  const auto mdp = build_gridworld(cfg);
  const auto experts = train_grid_experts(cfg);

  fs::create_directories(out / "experts");
  fs::create_directories(out / "configs");
  save_mdp(mdp, out / "gridworld.json");
  for (const auto& e : experts) save_policy(e, out / "experts" / (e.id + ".json"));

  auto specs = canonical_experiments(grid_path);
  for (auto& s : specs) {
    s.out_dir = fs::absolute(out / s.name).string();
    if (workers) s.workers = *workers;
    save_spec(s, out / "configs" / (s.name + ".json"));
  }
  std::cerr << "wrote the benchmark MDP, " << experts.size() << " experts and " << specs.size()
            << " configs to " << out.string() << '\n';
  if (export_only) return kOk;

  // The T0 configs differ only in T0, so they run as one sweep.
  std::vector<std::size_t> t0s;
  for (const auto& s : specs)
    if (s.events.empty()) t0s.push_back(s.schedule.t0);
  ExperimentSpec sweep_base = specs.front();
  run_sweep(sweep_base, t0s, out, false);

  for (const auto& s : specs) {
    if (s.events.empty()) continue;
    const auto prep = prepare_experiment(s);
    const auto res = run_experiment(s, prep);
    write_experiment(s.out_dir, prep, res);
    print_summary(s.name, s, prep, res);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bandit selection among MDP experts: chain analysis and regret experiments"};
  app.require_subcommand(1);

  SourceFlags analyze_src;
  std::string analyze_out;
  bool strict = false;
  auto* analyze = app.add_subcommand("analyze", "Per-expert mixing profile as CSV");
  add_source_flags(analyze, analyze_src);
  analyze->add_option("--out", analyze_out, "Write the CSV here instead of stdout");
  analyze->add_flag("--strict", strict, "Fail when the measured mixing constant exceeds the floor of 2");

  SourceFlags run_src;
  RunFlags run_flags;
  auto* run = app.add_subcommand("run", "Run one experiment over its seeds");
  run->add_option("--config", run_src.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
  add_source_flags(run, run_src);
  add_run_flags(run, run_flags, false);

  SourceFlags sweep_src;
  RunFlags sweep_flags;
  std::vector<std::size_t> sweep_t0s{4, 16, 64};
  auto* sweep = app.add_subcommand("sweep", "Run an experiment for each T0 and combine the curves");
  sweep->add_option("--config", sweep_src.config, "Base experiment config (JSON)")->check(CLI::ExistingFile);
  add_source_flags(sweep, sweep_src);
  add_run_flags(sweep, sweep_flags, true);
  sweep->add_option("--t0", sweep_t0s, "T0 values, e.g. 4,16,64")->delimiter(',');

  std::string bench_out = "bench_out";
  std::string bench_grid;
  std::optional<std::size_t> bench_workers;
  bool export_only = false;
  auto* bench = app.add_subcommand("bench", "Export and run the canonical gridworld experiments");
  bench->add_option("--out", bench_out, "Output directory");
  bench->add_option("--grid", bench_grid, "Grid layout file");
  bench->add_option("--workers", bench_workers, "Seeds run concurrently");
  bench->add_flag("--export-only", export_only, "Write the MDP, experts and configs without running");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }

  try {
    if (*analyze) return cmd_analyze(analyze_src, analyze_out, strict);
    if (*run) return cmd_run(run_src, run_flags);
    if (*sweep) return cmd_sweep(sweep_src, sweep_flags, sweep_t0s);
    if (*bench) return cmd_bench(bench_out, bench_grid, bench_workers, export_only);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const NotErgodicError& e) {
    std::cerr << "NotErgodic: " << e.what() << '\n';
    return kPrecondition;
  } catch (const GapTooSmallError& e) {
    std::cerr << "GapTooSmall: " << e.what() << '\n';
    return kPrecondition;
  } catch (const MixingConstantError& e) {
    std::cerr << "MixingConstant: " << e.what() << '\n';
    return kPrecondition;
  } catch (const PreconditionFailure& e) {
    std::cerr << "precondition: " << e.what() << '\n';
    return kPrecondition;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kOk;
}
