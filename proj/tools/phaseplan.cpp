// Command-line front end: discretize, plan, train, oracle, experiment.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "phaseplan/experiment.hpp"

namespace fs = std::filesystem;
using namespace phaseplan;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitInfeasible = 2;

struct Infeasible : Error {
  using Error::Error;
};

struct Common {
  std::string config;
  int grid_m = 0;
  std::string mode;
};

Json load_config(const std::string& file) { return file.empty() ? two_link_config() : read_json_file(file); }

fs::path config_base(const std::string& file) { return file.empty() ? fs::path(".") : fs::path(file).parent_path(); }

Scenario scenario_from(const Common& c) {
  Scenario sc = load_scenario(load_config(c.config), config_base(c.config));
  if (c.grid_m > 0) sc.grid_m = c.grid_m;
  if (!c.mode.empty()) sc.constraints.mode = parse_mode(c.mode);
  return sc;
}

void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-")
    std::cout << text;
  else
    write_text(out, text);
}

int cmd_discretize(const Common& c, std::optional<double> eps, std::optional<double> sigma,
                   std::optional<double> ds_max, std::optional<int> candidates, const std::string& out) {
  Scenario sc = scenario_from(c);
  if (eps) sc.discretizer.eps = *eps;
  if (sigma) sc.discretizer.sigma = *sigma;
  if (ds_max) sc.discretizer.ds_max = *ds_max;
  if (candidates) sc.discretizer.candidates = *candidates;
  const DiscretePath dp = discretize(sc.model, sc.path, sc.discretizer);
  const PathStats st = path_stats(dp);
  std::fprintf(stderr, "N=%zu max|dq'|=%s max|dq''|=%s max ds=%s\n", st.n, fmt_num(st.max_dq_change).c_str(),
               fmt_num(st.max_ddq_change).c_str(), fmt_num(st.max_ds).c_str());
  emit(out, discrete_path_csv(dp));
  return kExitOk;
}

int cmd_plan(const Common& c, const std::string& out) {
  const Scenario sc = scenario_from(c);
  const DiscretePath dp = discretize(sc.model, sc.path, sc.discretizer);
  const PhaseGrid grid = build_grid(dp, sc.constraints, sc.grid_m);
  const Trajectory t = plan_nigm(grid, dp, sc.constraints);
  std::fprintf(stderr, "N=%zu M=%d mode=%s return=%s execution_time=%s\n", dp.size(), sc.grid_m,
               mode_name(sc.constraints.mode), fmt_num(t.return_value).c_str(), fmt_num(t.exec_time).c_str());
  emit(out, trajectory_csv(t));
  return kExitOk;
}

int cmd_train(const Common& c, Algorithm algo, std::optional<long> episodes, std::optional<std::uint64_t> seed,
              const std::string& prior_flag, const std::string& out_dir) {
  const Json cfg = load_config(c.config);
  const Scenario sc = scenario_from(c);
  RLConfig rl = load_rl(resolve_section(cfg, "rl", config_base(c.config)), algo);
  if (episodes) rl.max_episodes = *episodes;
  if (seed) rl.rng_seed = *seed;
  rl.validate();

  const DiscretePath dp = discretize(sc.model, sc.path, sc.discretizer);
  const PhaseGrid grid = build_grid(dp, sc.constraints, sc.grid_m);
  std::optional<PriorKnowledge> pk;
  if (prior_flag == "on") pk = make_prior(grid, dp, sc.constraints);
  const Environment env(grid, dp, sc.constraints, pk ? std::optional<TerminalPolyline>(pk->terminal) : std::nullopt);
  const TrainResult tr = train(env, rl, algo, pk ? &*pk : nullptr);

  const fs::path dir = out_dir.empty() ? fs::path("out") : fs::path(out_dir);
  write_text(dir / "history.csv", history_csv(tr.history));
  Json stats = stats_json(tr.stats);
  stats["algorithm"] = to_string(algo);
  stats["n"] = dp.size();
  stats["m"] = sc.grid_m;
  stats["mode"] = mode_name(sc.constraints.mode);
  stats["prior"] = pk.has_value();
  if (pk) stats["prior_violations"] = pk->classification.violations();
  write_text(dir / "stats.json", stats.dump(2) + "\n");
  if (!tr.stats.exploit_ok) throw Infeasible("training produced no complete trajectory");
  write_text(dir / "trajectory.csv", trajectory_csv(tr.trajectory));
  std::fprintf(stderr, "%s episodes=%ld first_success=%ld converged=%s return=%s execution_time=%s\n", to_string(algo),
               tr.stats.episodes, tr.stats.first_successful_episode, tr.stats.converged ? "yes" : "no",
               fmt_num(tr.stats.return_value).c_str(), fmt_num(tr.stats.execution_time_s).c_str());
  return kExitOk;
}

int cmd_oracle(const Common& c, const std::string& out) {
  const Scenario sc = scenario_from(c);
  const DiscretePath dp = discretize(sc.model, sc.path, sc.discretizer);
  const Environment env(build_grid(dp, sc.constraints, sc.grid_m), dp, sc.constraints);
  const OracleResult o = dp_oracle(env);
  if (!o.feasible) throw Infeasible("no grid profile reaches the end of the path");
  std::fprintf(stderr, "N=%zu M=%d return=%s execution_time=%s\n", dp.size(), sc.grid_m,
               fmt_num(o.return_value).c_str(), fmt_num(o.trajectory.exec_time).c_str());
  emit(out, trajectory_csv(o.trajectory));
  return kExitOk;
}

int cmd_experiment(const Common& c, std::optional<int> reps, std::optional<std::uint64_t> seed,
                   const std::vector<std::string>& studies, std::optional<long> episodes, const std::string& out_dir) {
  const Json cfg = load_config(c.config);
  Scenario sc = load_scenario(cfg, config_base(c.config));
  if (c.grid_m > 0) sc.grid_m = c.grid_m;
  ExperimentConfig ec = load_experiment(cfg, config_base(c.config));
  if (reps) ec.repetitions = *reps;
  if (seed) ec.seed = *seed;
  if (!studies.empty()) ec.studies = studies;
  if (episodes) ec.iql.max_episodes = ec.iavrl.max_episodes = *episodes;
  ec.validate();
  const RunReport rep = run_experiment(sc, ec);
  const fs::path dir = out_dir.empty() ? fs::path("out") : fs::path(out_dir);
  emit_tables(rep, dir);
  int failed = 0;
  for (const auto& cell : rep.cells)
    for (const auto& r : cell.runs) failed += !r.error.empty();
  std::fprintf(stderr, "wrote %s (%zu cells, %d failed runs)\n", dir.string().c_str(), rep.cells.size(), failed);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-optimal path tracking on a phase-plane grid"};
  app.require_subcommand(1);

  Common common;
  auto add_common = [&common](CLI::App* sub, bool with_mode) {
    sub->add_option("--config", common.config, "JSON config (default: built-in two-link scenario)")
        ->check(CLI::ExistingFile);
    sub->add_option("--grid-m", common.grid_m, "velocity levels M (grid has M+1 rows)")->check(CLI::Range(2, 1 << 24));
    if (with_mode)
      sub->add_option("--mode,--constraints", common.mode, "torque limits")
          ->check(CLI::IsMember({"conservative", "velocity-dependent"}));
  };

  std::string out, out_dir;
  std::optional<double> eps, sigma, ds_max;
  std::optional<int> candidates, reps;
  std::optional<long> episodes;
  std::optional<std::uint64_t> seed;
  std::string prior_flag = "off";
  std::vector<std::string> studies;

  auto* disc = app.add_subcommand("discretize", "selective path discretization");
  add_common(disc, false);
  disc->add_option("--eps", eps, "threshold on |delta q'|");
  disc->add_option("--sigma", sigma, "threshold on |delta q''|");
  disc->add_option("--ds-max", ds_max, "largest spacing");
  disc->add_option("--candidates", candidates, "uniform candidate count");
  disc->add_option("--out", out, "CSV file (default stdout)");

  auto* plan = app.add_subcommand("plan-nigm", "grid numerical-integration planner");
  add_common(plan, true);
  plan->add_option("--out", out, "trajectory CSV (default stdout)");

  auto* oracle = app.add_subcommand("oracle", "exact grid optimum by dynamic programming");
  add_common(oracle, true);
  oracle->add_option("--out", out, "trajectory CSV (default stdout)");

  CLI::App* trains[2];
  const Algorithm algos[2] = {Algorithm::iql, Algorithm::iavrl};
  const char* names[2] = {"train-iql", "train-iavrl"};
  for (int i = 0; i < 2; ++i) {
    trains[i] = app.add_subcommand(names[i], i == 0 ? "tabular Q-learning" : "action-value assignment learning");
    add_common(trains[i], true);
    trains[i]->add_option("--episodes", episodes, "episode cap");
    trains[i]->add_option("--seed", seed, "RNG seed");
    trains[i]->add_option("--prior", prior_flag, "seed from the conservative planner")->check(CLI::IsMember({"on", "off"}));
    trains[i]->add_option("--out-dir", out_dir, "output directory (default ./out)");
  }

  auto* exp = app.add_subcommand("experiment", "run the comparison studies and write tables");
  add_common(exp, false);
  exp->add_option("--repetitions", reps, "repetitions per cell");
  exp->add_option("--seed", seed, "master seed");
  exp->add_option("--studies", studies, "subset of A B C")->check(CLI::IsMember({"A", "B", "C"}));
  exp->add_option("--episodes", episodes, "episode cap for both learners");
  exp->add_option("--out-dir", out_dir, "output directory (default ./out)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*disc) return cmd_discretize(common, eps, sigma, ds_max, candidates, out);
    if (*plan) return cmd_plan(common, out);
    if (*oracle) return cmd_oracle(common, out);
    for (int i = 0; i < 2; ++i)
      if (*trains[i]) return cmd_train(common, algos[i], episodes, seed, prior_flag, out_dir);
    if (*exp) return cmd_experiment(common, reps, seed, studies, episodes, out_dir);
  } catch (const Infeasible& e) {
    std::fprintf(stderr, "infeasible: %s\n", e.what());
    return kExitInfeasible;
  } catch (const PlannerError& e) {
    std::fprintf(stderr, "infeasible: %s\n", e.what());
    return kExitInfeasible;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  }
  return kExitConfig;
}
