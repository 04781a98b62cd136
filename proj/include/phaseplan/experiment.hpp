#pragma once

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "phaseplan/io.hpp"
#include "phaseplan/nigm.hpp"
#include "phaseplan/oracle.hpp"
#include "phaseplan/rl_engine.hpp"

namespace phaseplan {

// ---------------------------------------------------------------------------
// Scenario: everything needed to build a grid environment.

struct Scenario {
  DynamicsModel model;
  JointPath path;
  ConstraintSet constraints;  // mode as configured
  DiscretizerParams discretizer;
  int grid_m = 200;
};

inline Scenario load_scenario(const Json& cfg, const std::filesystem::path& base = ".") {
  const Json model = resolve_section(cfg, "model", base);
  const Json path = resolve_section(cfg, "path", base);
  if (model.empty()) throw ConfigError("config has no model section");
  if (path.empty()) throw ConfigError("config has no path section");
  Scenario sc{load_model(model), load_path(path), load_constraints(model), {}, 200};
  sc.discretizer = load_discretizer(resolve_section(cfg, "discretizer", base));
  sc.grid_m = detail::get_or(resolve_section(cfg, "grid", base), "m", sc.grid_m, "grid");
  if (sc.path.dof() != sc.model.dof || sc.constraints.dof() != sc.model.dof)
    throw ConfigError("model, path and motors disagree on the number of joints");
  try {
    sc.model.validate();
    validate_model_on_path(sc.model, sc.path);
  } catch (const InputError& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  return sc;
}

// Two-link arm on a path with a sharp bend, geared motors whose peak torque
// falls off above half of the maximum speed.
inline constexpr const char* kTwoLinkConfig = R"({
  "model": {
    "type": "planar_2link",
    "gravity": 9.81,
    "links": [
      {"length": 1.0, "mass": 2.0, "com": 0.5, "inertia": 0.1},
      {"length": 0.8, "mass": 1.0, "com": 0.4, "inertia": 0.05}
    ],
    "viscous": [0.5, 0.3],
    "coulomb": [0.4, 0.2],
    "motors": [
      {"breakpoints": [[0, 0.6], [150, 0.6], [300, 0.25]], "rated_speed": 150, "gear_ratio": 100},
      {"breakpoints": [[0, 0.25], [150, 0.25], [300, 0.1]], "rated_speed": 150, "gear_ratio": 100}
    ],
    "mode": "velocity-dependent"
  },
  "path": {"type": "two_link_bend", "step": [0.2, -0.24], "width": 0.02},
  "discretizer": {"eps": 1.0, "sigma": 20.0, "ds_max": 0.04, "candidates": 20001},
  "grid": {"m": 200},
  "rl": {"iql": {"max_episodes": 20000}},
  "experiment": {
    "studies": ["A", "B", "C"],
    "algorithms": ["IQL", "IAVRL"],
    "m_list": [200, 400, 800],
    "c_m_list": [200, 400],
    "repetitions": 10,
    "seed": 1
  }
})";

inline Json two_link_config() { return Json::parse(kTwoLinkConfig); }

inline Scenario two_link_scenario() { return load_scenario(two_link_config()); }

// ---------------------------------------------------------------------------
// Inter-point torque overshoot: the largest torque excess along the
// continuous path when each segment is executed with its constant
// pseudo-acceleration (sdot^2 linear in s). Motor speeds beyond the envelope
// are evaluated at its last breakpoint.

inline double clamped_torque_excess(const PathPoint& p, const ConstraintSet& cs, double sdot, double sddot) {
  const Vector tau = parametric_torque(p.co, sdot, sddot);
  const Vector qdot = p.dq * sdot;
  double worst = 0.0;
  for (int i = 0; i < cs.dof(); ++i) {
    const auto& mc = cs.motors[i];
    double hi = mc.peak_torque(), lo = mc.peak_torque();
    if (cs.mode == TorqueMode::velocity_dependent) {
      const double speed = std::min(std::abs(qdot[i]) * mc.gear_ratio, mc.max_speed());
      hi = mc.envelope(speed, false);
      lo = mc.envelope(speed, true);
    } else if (!mc.symmetric) {
      lo = mc.negative_breakpoints.front().torque;
    }
    worst = std::max({worst, tau[i] - hi * mc.gear_ratio, -lo * mc.gear_ratio - tau[i]});
  }
  return worst;
}

inline double interpoint_overshoot(const DynamicsModel& model, const JointPath& path, const ConstraintSet& cs,
                                   const Trajectory& t, int samples_per_segment = 20) {
  double worst = 0.0;
  for (std::size_t k = 0; k + 1 < t.size(); ++k) {
    const double s0 = t.s[k], s1 = t.s[k + 1];
    for (int j = 0; j <= samples_per_segment; ++j) {
      const double s = s0 + (s1 - s0) * j / samples_per_segment;
      const double v2 = t.sdot[k] * t.sdot[k] + 2.0 * t.sddot[k] * (s - s0);
      const PathPoint p = make_path_point(model, path, s);
      worst = std::max(worst, clamped_torque_excess(p, cs, std::sqrt(std::max(0.0, v2)), t.sddot[k]));
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Experiment configuration and report

struct ExperimentConfig {
  std::vector<std::string> studies{"A", "B", "C"};
  std::vector<Algorithm> algorithms{Algorithm::iql, Algorithm::iavrl};
  std::vector<int> m_list{200, 400, 800};    // study B
  std::vector<int> c_m_list{200, 400};       // study C
  int repetitions = 10;
  std::uint64_t seed = 1;
  int overshoot_samples = 20;
  unsigned threads = 0;  // 0: hardware concurrency
  RLConfig iql = RLConfig::defaults(Algorithm::iql);
  RLConfig iavrl = RLConfig::defaults(Algorithm::iavrl);

  const RLConfig& rl(Algorithm a) const { return a == Algorithm::iql ? iql : iavrl; }

  bool has_study(const std::string& s) const { return std::find(studies.begin(), studies.end(), s) != studies.end(); }

  void validate() const {
    if (repetitions < 1) throw ConfigError("experiment.repetitions must be >= 1");
    for (const auto& s : studies)
      if (s != "A" && s != "B" && s != "C") throw ConfigError("experiment.studies: unknown study '" + s + "'");
    for (int m : m_list)
      if (m < 2) throw ConfigError("experiment.m_list entries must be >= 2");
    for (int m : c_m_list)
      if (m < 2) throw ConfigError("experiment.c_m_list entries must be >= 2");
    if (overshoot_samples < 1) throw ConfigError("experiment.overshoot_samples must be >= 1");
  }
};

inline Algorithm parse_algorithm(const std::string& s) {
  if (s == "IQL" || s == "iql") return Algorithm::iql;
  if (s == "IAVRL" || s == "iavrl") return Algorithm::iavrl;
  throw ConfigError("unknown algorithm '" + s + "'");
}

inline ExperimentConfig load_experiment(const Json& cfg, const std::filesystem::path& base = ".") {
  ExperimentConfig ec;
  const Json ex = resolve_section(cfg, "experiment", base);
  const std::string w = "experiment";
  ec.studies = detail::get_or(ex, "studies", ec.studies, w);
  if (ex.contains("algorithms")) {
    ec.algorithms.clear();
    for (const auto& a : ex.at("algorithms")) ec.algorithms.push_back(parse_algorithm(a.get<std::string>()));
  }
  ec.m_list = detail::get_or(ex, "m_list", ec.m_list, w);
  ec.c_m_list = detail::get_or(ex, "c_m_list", ec.c_m_list, w);
  ec.repetitions = detail::get_or(ex, "repetitions", ec.repetitions, w);
  ec.seed = detail::get_or(ex, "seed", ec.seed, w);
  ec.overshoot_samples = detail::get_or(ex, "overshoot_samples", ec.overshoot_samples, w);
  ec.threads = detail::get_or(ex, "threads", ec.threads, w);
  const Json rl = resolve_section(cfg, "rl", base);
  ec.iql = load_rl(rl, Algorithm::iql);
  ec.iavrl = load_rl(rl, Algorithm::iavrl);
  ec.validate();
  return ec;
}

// One training run, reduced to what the tables need.
struct RunRecord {
  bool ok = false;  // exploit produced a trajectory
  TrainStats stats;
  Trajectory trajectory;
  std::vector<std::pair<long, double>> history;
  std::string error;
};

// All repetitions of one (study, algorithm, M, prior) combination.
struct Cell {
  std::string study;
  Algorithm algorithm = Algorithm::iavrl;
  int m = 0;
  bool prior = false;
  TorqueMode mode = TorqueMode::conservative;
  std::vector<RunRecord> runs;
};

struct GridBaseline {
  int m = 0;
  std::size_t n = 0;
  bool nigm_ok = false;
  double nigm_return = 0.0, nigm_exec = 0.0;
  std::string nigm_error;
  bool reference_ok = false;  // DP oracle within its state cap
  double reference_return = 0.0, reference_exec = 0.0;
  // Study C only
  std::size_t prior_violations = 0;
  std::size_t terminal_begin = 0;
};

struct OvershootReport {
  std::size_t n = 0;
  int m = 0;
  double selective = 0.0;
  double uniform = 0.0;
  double selective_return = 0.0;
  double uniform_return = 0.0;
  std::string error;
};

struct RunReport {
  std::optional<OvershootReport> study_a;
  std::vector<GridBaseline> baselines_b, baselines_c;
  std::vector<Cell> cells;
  std::map<std::string, double> timings;  // wall-clock seconds by label
};

inline double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

// Averages over the repetitions of a cell whose exploit succeeded; the
// episode counters average over all repetitions.
struct CellSummary {
  int successes = 0;  // runs with an exploit trajectory
  int converged = 0;
  double first_successful_episode = 0.0;
  double convergence_episode = 0.0;  // over converged runs
  double computation_steps = 0.0;
  double computation_time_s = 0.0;
  double return_value = 0.0;
  double execution_time_s = 0.0;
};

inline CellSummary summarize(const Cell& c) {
  CellSummary s;
  std::vector<double> first, conv, steps, time, ret, exec;
  for (const auto& r : c.runs) {
    first.push_back(static_cast<double>(r.stats.first_successful_episode));
    steps.push_back(static_cast<double>(r.stats.steps));
    time.push_back(r.stats.computation_time_s);
    if (r.stats.converged) {
      ++s.converged;
      conv.push_back(static_cast<double>(r.stats.convergence_episode));
    }
    if (r.ok) {
      ++s.successes;
      ret.push_back(r.stats.return_value);
      exec.push_back(r.stats.execution_time_s);
    }
  }
  s.first_successful_episode = mean_of(first);
  s.convergence_episode = mean_of(conv);
  s.computation_steps = mean_of(steps);
  s.computation_time_s = mean_of(time);
  s.return_value = mean_of(ret);
  s.execution_time_s = mean_of(exec);
  return s;
}

// ---------------------------------------------------------------------------
// Parallel execution of independent jobs; results land by index.

inline void run_parallel(std::vector<std::function<void()>>& jobs, unsigned threads) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(jobs.size()));
  if (threads <= 1) {
    for (auto& j : jobs) j();
    return;
  }
  std::mutex mu;
  std::size_t next = 0;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      while (true) {
        std::size_t i;
        {
          std::lock_guard<std::mutex> lock(mu);
          if (next >= jobs.size()) return;
          i = next++;
        }
        jobs[i]();
      }
    });
  }
  for (auto& th : pool) th.join();
}

// Stable stream id of a run so every repetition draws its own seed.
inline std::uint64_t run_stream(const std::string& study, Algorithm a, int m, bool prior, int rep) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::uint64_t x) { h = (h ^ x) * 1099511628211ULL; };
  for (char ch : study) mix(static_cast<unsigned char>(ch));
  mix(static_cast<std::uint64_t>(a));
  mix(static_cast<std::uint64_t>(m));
  mix(prior ? 1 : 0);
  mix(static_cast<std::uint64_t>(rep));
  return h;
}

inline RunRecord run_training(const Environment& env, RLConfig cfg, Algorithm a, std::uint64_t seed,
                              const PriorKnowledge* prior) {
  RunRecord rec;
  cfg.rng_seed = seed;
  try {
    TrainResult tr = train(env, cfg, a, prior);
    rec.stats = tr.stats;
    rec.ok = tr.stats.exploit_ok;
    rec.history = std::move(tr.history);
    if (rec.ok) rec.trajectory = std::move(tr.trajectory);
  } catch (const std::exception& e) {
    rec.error = e.what();
  }
  return rec;
}

namespace detail {

inline void fill_baseline(GridBaseline& b, const Environment& env, const ConstraintSet& cs) {
  b.n = env.columns();
  b.m = env.grid().m;
  try {
    const Trajectory t = plan_nigm(env.grid(), env.path(), cs);
    b.nigm_ok = true;
    b.nigm_return = t.return_value;
    b.nigm_exec = t.exec_time;
  } catch (const PlannerError& e) {
    b.nigm_error = e.what();
  }
  if (env.columns() * static_cast<std::size_t>(env.grid().rows()) <= kOracleStateCap) {
    const OracleResult o = dp_oracle(env);
    if (o.feasible) {
      b.reference_ok = true;
      b.reference_return = o.return_value;
      b.reference_exec = o.trajectory.exec_time;
    }
  }
}

}  // namespace detail

inline RunReport run_experiment(const Scenario& sc, const ExperimentConfig& ec) {
  ec.validate();
  RunReport rep;
  using clock = std::chrono::steady_clock;
  const auto secs = [](clock::time_point a) { return std::chrono::duration<double>(clock::now() - a).count(); };

  const auto t_disc = clock::now();
  const DiscretePath dp = discretize(sc.model, sc.path, sc.discretizer);
  rep.timings["discretize"] = secs(t_disc);

  if (ec.has_study("A")) {
    const auto t0 = clock::now();
    OvershootReport a;
    a.n = dp.size();
    a.m = sc.grid_m;
    try {
      const ConstraintSet cs = sc.constraints.with_mode(TorqueMode::conservative);
      const DiscretePath uni = discretize_uniform(sc.model, sc.path, dp.size());
      const Trajectory ts = plan_nigm(build_grid(dp, cs, sc.grid_m), dp, cs);
      const Trajectory tu = plan_nigm(build_grid(uni, cs, sc.grid_m), uni, cs);
      a.selective = interpoint_overshoot(sc.model, sc.path, cs, ts, ec.overshoot_samples);
      a.uniform = interpoint_overshoot(sc.model, sc.path, cs, tu, ec.overshoot_samples);
      a.selective_return = ts.return_value;
      a.uniform_return = tu.return_value;
    } catch (const Error& e) {
      a.error = e.what();
    }
    rep.study_a = a;
    rep.timings["study_A"] = secs(t0);
  }

  // Environments and jobs for studies B and C.
  struct Job {
    std::size_t cell;
    std::size_t rep;
    std::shared_ptr<const Environment> env;
    std::shared_ptr<const PriorKnowledge> prior;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;

  if (ec.has_study("B")) {
    const ConstraintSet cs = sc.constraints.with_mode(TorqueMode::conservative);
    for (int m : ec.m_list) {
      auto env = std::make_shared<const Environment>(build_grid(dp, cs, m), dp, cs);
      GridBaseline b;
      detail::fill_baseline(b, *env, cs);
      rep.baselines_b.push_back(b);
      for (Algorithm a : ec.algorithms) {
        rep.cells.push_back({"B", a, m, false, TorqueMode::conservative, {}});
        rep.cells.back().runs.resize(static_cast<std::size_t>(ec.repetitions));
        for (int r = 0; r < ec.repetitions; ++r)
          jobs.push_back({rep.cells.size() - 1, static_cast<std::size_t>(r), env, nullptr,
                          split_seed(ec.seed, run_stream("B", a, m, false, r))});
      }
    }
  }
  if (ec.has_study("C")) {
    const ConstraintSet cs = sc.constraints.with_mode(TorqueMode::velocity_dependent);
    for (int m : ec.c_m_list) {
      const PhaseGrid grid = build_grid(dp, cs, m);
      std::shared_ptr<const PriorKnowledge> pk;
      GridBaseline b;
      try {
        pk = std::make_shared<const PriorKnowledge>(make_prior(grid, dp, cs));
        b.prior_violations = pk->classification.violations();
        b.terminal_begin = pk->classification.terminal_begin;
      } catch (const PlannerError& e) {
        b.nigm_error = std::string("prior: ") + e.what();
      }
      auto plain = std::make_shared<const Environment>(grid, dp, cs);
      std::shared_ptr<const Environment> seeded =
          pk ? std::make_shared<const Environment>(grid, dp, cs, pk->terminal) : nullptr;
      const std::string prior_error = b.nigm_error;
      detail::fill_baseline(b, *plain, cs);
      if (!prior_error.empty()) b.nigm_error = prior_error + (b.nigm_error.empty() ? "" : "; " + b.nigm_error);
      rep.baselines_c.push_back(b);
      for (Algorithm a : ec.algorithms) {
        for (bool with_prior : {true, false}) {
          rep.cells.push_back({"C", a, m, with_prior, TorqueMode::velocity_dependent, {}});
          auto& cell = rep.cells.back();
          cell.runs.resize(static_cast<std::size_t>(ec.repetitions));
          if (with_prior && !pk) {
            for (auto& r : cell.runs) r.error = "no prior trajectory";
            continue;
          }
          for (int r = 0; r < ec.repetitions; ++r)
            jobs.push_back({rep.cells.size() - 1, static_cast<std::size_t>(r), with_prior ? seeded : plain,
                            with_prior ? pk : nullptr, split_seed(ec.seed, run_stream("C", a, m, with_prior, r))});
        }
      }
    }
  }

  const auto t_train = clock::now();
  std::vector<std::function<void()>> tasks;
  for (const Job& j : jobs) {
    tasks.emplace_back([&rep, &ec, j] {
      Cell& c = rep.cells[j.cell];
      c.runs[j.rep] = run_training(*j.env, ec.rl(c.algorithm), c.algorithm, j.seed, j.prior.get());
    });
  }
  run_parallel(tasks, ec.threads);
  rep.timings["training"] = secs(t_train);
  return rep;
}

// ---------------------------------------------------------------------------
// Tables

inline std::string pct(double num, double den, bool ok) { return ok && den != 0.0 ? fmt_num(100.0 * num / den) : ""; }

inline const GridBaseline* find_baseline(const std::vector<GridBaseline>& v, int m) {
  for (const auto& b : v)
    if (b.m == m) return &b;
  return nullptr;
}

struct Tables {
  std::string table1, table2, table3, table4;
};

inline Tables make_tables(const RunReport& rep) {
  std::ostringstream t1, t2, t3, t4;
  t1 << "grid,algorithm,runs,successful_runs,first_successful_episode,converged_runs,convergence_episode,"
        "computation_steps,return,execution_time_s\n";
  t2 << "grid,algorithm,return_pct_reference,return_pct_nigm,exec_time_pct_reference,exec_time_pct_nigm\n";
  t3 << "grid,algorithm,prior,runs,successful_runs,first_successful_episode,converged_runs,convergence_episode,"
        "computation_steps,return,execution_time_s\n";
  t4 << "grid,algorithm,computation_steps_reduction_pct,return_improvement_pct,exec_time_reduction_pct\n";

  auto grid_label = [](std::size_t n, int m) { return std::to_string(n) + "x" + std::to_string(m); };

  for (const auto& b : rep.baselines_b) {
    const std::string g = grid_label(b.n, b.m);
    t1 << g << ",REFERENCE,1," << (b.reference_ok ? 1 : 0) << ",,,,," << (b.reference_ok ? fmt_num(b.reference_return) : "")
       << ',' << (b.reference_ok ? fmt_num(b.reference_exec) : "") << '\n';
    t1 << g << ",NIGM,1," << (b.nigm_ok ? 1 : 0) << ",,,,," << (b.nigm_ok ? fmt_num(b.nigm_return) : "") << ','
       << (b.nigm_ok ? fmt_num(b.nigm_exec) : "") << '\n';
    for (const auto& c : rep.cells) {
      if (c.study != "B" || c.m != b.m) continue;
      const CellSummary s = summarize(c);
      const bool ok = s.successes > 0;
      t1 << g << ',' << to_string(c.algorithm) << ',' << c.runs.size() << ',' << s.successes << ','
         << fmt_num(s.first_successful_episode) << ',' << s.converged << ','
         << (s.converged ? fmt_num(s.convergence_episode) : "") << ',' << fmt_num(s.computation_steps) << ','
         << (ok ? fmt_num(s.return_value) : "") << ',' << (ok ? fmt_num(s.execution_time_s) : "") << '\n';
      t2 << g << ',' << to_string(c.algorithm) << ',' << pct(s.return_value, b.reference_return, ok && b.reference_ok)
         << ',' << pct(s.return_value, b.nigm_return, ok && b.nigm_ok) << ','
         << pct(s.execution_time_s, b.reference_exec, ok && b.reference_ok) << ','
         << pct(s.execution_time_s, b.nigm_exec, ok && b.nigm_ok) << '\n';
    }
  }

  for (const auto& b : rep.baselines_c) {
    const std::string g = grid_label(b.n, b.m);
    std::map<Algorithm, std::pair<std::optional<CellSummary>, std::optional<CellSummary>>> pairs;
    for (const auto& c : rep.cells) {
      if (c.study != "C" || c.m != b.m) continue;
      const CellSummary s = summarize(c);
      const bool ok = s.successes > 0;
      t3 << g << ',' << to_string(c.algorithm) << ',' << (c.prior ? "yes" : "no") << ',' << c.runs.size() << ','
         << s.successes << ',' << fmt_num(s.first_successful_episode) << ',' << s.converged << ','
         << (s.converged ? fmt_num(s.convergence_episode) : "") << ',' << fmt_num(s.computation_steps) << ','
         << (ok ? fmt_num(s.return_value) : "") << ',' << (ok ? fmt_num(s.execution_time_s) : "") << '\n';
      (c.prior ? pairs[c.algorithm].first : pairs[c.algorithm].second) = s;
    }
    for (const auto& [a, pr] : pairs) {
      if (!pr.first || !pr.second) continue;
      const CellSummary &w = *pr.first, &wo = *pr.second;
      const bool ok = w.successes > 0 && wo.successes > 0;
      auto red = [](double with, double without, bool valid) {
        return valid && without != 0.0 ? fmt_num(100.0 * (without - with) / without) : std::string();
      };
      t4 << g << ',' << to_string(a) << ',' << red(w.computation_steps, wo.computation_steps, true) << ','
         << (ok && wo.return_value != 0.0 ? fmt_num(100.0 * (w.return_value - wo.return_value) / wo.return_value) : "")
         << ',' << red(w.execution_time_s, wo.execution_time_s, ok) << '\n';
    }
  }
  return {t1.str(), t2.str(), t3.str(), t4.str()};
}

inline constexpr const char* kTablesSchema = R"(# Table files

All tables are CSV with a header row. Averages are taken over the
repetitions of a cell. `grid` is `NxM` (N path points, M + 1 velocity levels).
Numbers are printed with 12 significant digits.

## table1.csv (study B, conservative torque limits, no prior)

| column | meaning |
|---|---|
| algorithm | `REFERENCE` (exact grid optimum by dynamic programming; blank when the grid exceeds the oracle's state cap), `NIGM`, `IQL` or `IAVRL` |
| runs | repetitions of the cell |
| successful_runs | repetitions whose final greedy rollout reached the end of the path |
| first_successful_episode | episode number of the first exploration that ended without violating the constraints, 0 when none did; mean over runs |
| converged_runs | repetitions that stopped because the greedy return stayed unchanged for the patience window, rather than by the episode cap |
| convergence_episode | episode at which the greedy return last changed; mean over converged runs |
| computation_steps | environment transitions over all training episodes; mean over runs. Stands in for wall-clock computation time, which is written to `timings.json` instead so that tables are reproducible byte for byte |
| return | sum of pseudo-velocities over all path points of the final greedy trajectory; mean over successful runs |
| execution_time_s | traversal time of that trajectory under piecewise-uniform acceleration; mean over successful runs |

## table2.csv (study B percentages)

`return_pct_X = 100 * return / return(X)` and
`exec_time_pct_X = 100 * execution_time_s / execution_time_s(X)` for
X = reference and NIGM on the same grid. Blank when either side is missing.

## table3.csv (study C, velocity-dependent torque limits)

Same columns as table1 plus `prior` (`yes`: Q-table seeded from the
conservative NIGM trajectory and episodes end on reaching its clean tail).

## table4.csv (study C, effect of the prior)

| column | meaning |
|---|---|
| computation_steps_reduction_pct | `100 * (steps_without - steps_with) / steps_without` |
| return_improvement_pct | `100 * (return_with - return_without) / return_without` |
| exec_time_reduction_pct | `100 * (exec_without - exec_with) / exec_without` |

## overshoot.csv (study A)

Largest torque excess over the limits (N*m, 0 when none) when the NIGM
trajectory is replayed between its path points, for the selective
discretization and an evenly spaced one with the same number of points.
)";

inline std::string overshoot_csv(const RunReport& rep) {
  std::ostringstream os;
  os << "discretization,n,m,max_torque_overshoot,return\n";
  if (rep.study_a && rep.study_a->error.empty()) {
    const auto& a = *rep.study_a;
    os << "selective," << a.n << ',' << a.m << ',' << fmt_num(a.selective) << ',' << fmt_num(a.selective_return) << '\n';
    os << "uniform," << a.n << ',' << a.m << ',' << fmt_num(a.uniform) << ',' << fmt_num(a.uniform_return) << '\n';
  }
  return os.str();
}

inline std::string baselines_csv(const RunReport& rep) {
  std::ostringstream os;
  os << "study,n,m,nigm_return,nigm_exec_time_s,reference_return,reference_exec_time_s,prior_violations,"
        "terminal_begin,note\n";
  auto row = [&os](const char* study, const GridBaseline& b) {
    os << study << ',' << b.n << ',' << b.m << ',' << (b.nigm_ok ? fmt_num(b.nigm_return) : "") << ','
       << (b.nigm_ok ? fmt_num(b.nigm_exec) : "") << ',' << (b.reference_ok ? fmt_num(b.reference_return) : "") << ','
       << (b.reference_ok ? fmt_num(b.reference_exec) : "") << ',' << b.prior_violations << ',' << b.terminal_begin
       << ",\"" << b.nigm_error << "\"\n";
  };
  for (const auto& b : rep.baselines_b) row("B", b);
  for (const auto& b : rep.baselines_c) row("C", b);
  return os.str();
}

// Writes tables, per-run artifacts and timings under `dir`.
inline void emit_tables(const RunReport& rep, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());
  const Tables t = make_tables(rep);
  write_text(dir / "table1.csv", t.table1);
  write_text(dir / "table2.csv", t.table2);
  write_text(dir / "table3.csv", t.table3);
  write_text(dir / "table4.csv", t.table4);
  write_text(dir / "tables_schema.md", kTablesSchema);
  write_text(dir / "overshoot.csv", overshoot_csv(rep));
  write_text(dir / "baselines.csv", baselines_csv(rep));

  Json timings = Json::object();
  for (const auto& [k, v] : rep.timings) timings[k] = v;
  Json runs = Json::array();
  for (const auto& c : rep.cells) {
    const std::string name = c.study + "_" + to_string(c.algorithm) + "_M" + std::to_string(c.m) +
                             (c.study == "C" ? (c.prior ? "_prior" : "_noprior") : "");
    std::vector<double> times;
    for (std::size_t r = 0; r < c.runs.size(); ++r) {
      const auto& run = c.runs[r];
      const fs::path rd = dir / "runs" / name / ("rep" + std::to_string(r));
      write_text(rd / "history.csv", history_csv(run.history));
      if (run.ok) write_text(rd / "trajectory.csv", trajectory_csv(run.trajectory));
      times.push_back(run.stats.computation_time_s);
    }
    runs.push_back({{"cell", name}, {"computation_time_s", times}, {"median_s", median_of(times)}});
  }
  timings["runs"] = runs;
  write_text(dir / "timings.json", timings.dump(2) + "\n");
}

}  // namespace phaseplan
