#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "support.hpp"

using namespace phaseplan;

namespace {

// Point mass on a short line whose motor loses half its torque at top speed.
constexpr const char* kSmallConfig = R"({
  "model": {
    "type": "point_mass",
    "mass": 1.0,
    "motors": [{"breakpoints": [[0, 1.0], [0.5, 1.0], [1.0, 0.5]]}],
    "mode": "velocity-dependent"
  },
  "path": {"type": "linear", "start": [0.0], "end": [1.0]},
  "discretizer": {"eps": 1.0, "sigma": 1.0, "ds_max": 0.1, "candidates": 11},
  "grid": {"m": 10},
  "rl": {"max_episodes": 400, "patience": 50},
  "experiment": {"studies": ["A", "B", "C"], "m_list": [8, 12], "c_m_list": [8], "repetitions": 2, "seed": 3,
                 "threads": 1}
})";

using Rows = std::vector<std::vector<std::string>>;

Rows parse_csv(const std::string& text) {
  Rows out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    out.push_back(cells);
  }
  return out;
}

struct SmallRun {
  Scenario sc;
  ExperimentConfig ec;
  RunReport rep;
};

const SmallRun& small_run() {
  static const SmallRun run = [] {
    const Json cfg = Json::parse(kSmallConfig);
    SmallRun r{load_scenario(cfg), load_experiment(cfg), {}};
    r.rep = run_experiment(r.sc, r.ec);
    return r;
  }();
  return run;
}

}  // namespace

TEST(Tables, EmptyReportHasHeadersOnly) {
  const Tables t = make_tables(RunReport{});
  for (const std::string* s : {&t.table1, &t.table2, &t.table3, &t.table4}) {
    const Rows rows = parse_csv(*s);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_GT(rows[0].size(), 3u);
  }
  EXPECT_EQ(parse_csv(overshoot_csv(RunReport{})).size(), 1u);
}

TEST(Tables, ShapeOfSmallExperiment) {
  const Tables t = make_tables(small_run().rep);
  const Rows t1 = parse_csv(t.table1), t2 = parse_csv(t.table2), t3 = parse_csv(t.table3), t4 = parse_csv(t.table4);
  // Two grids: reference, NIGM and two learners each.
  EXPECT_EQ(t1.size(), 1u + 2 * 4);
  EXPECT_EQ(t2.size(), 1u + 2 * 2);
  EXPECT_EQ(t3.size(), 1u + 2 * 2);
  EXPECT_EQ(t4.size(), 1u + 2);
  for (const Rows* r : {&t1, &t2, &t3, &t4})
    for (const auto& row : *r) EXPECT_EQ(row.size(), (*r)[0].size());
  EXPECT_EQ(t1[1][0], "11x8");
  EXPECT_EQ(t1[1][1], "REFERENCE");
  EXPECT_EQ(t1[2][1], "NIGM");
}

TEST(Tables, PercentagesRecomputeFromTable1) {
  const Tables t = make_tables(small_run().rep);
  const Rows t1 = parse_csv(t.table1), t2 = parse_csv(t.table2);
  std::map<std::string, std::pair<double, double>> ref, nigm;
  for (std::size_t i = 1; i < t1.size(); ++i) {
    if (t1[i][8].empty()) continue;
    const std::pair<double, double> v{std::stod(t1[i][8]), std::stod(t1[i][9])};
    if (t1[i][1] == "REFERENCE") ref[t1[i][0]] = v;
    if (t1[i][1] == "NIGM") nigm[t1[i][0]] = v;
  }
  int checked = 0;
  for (std::size_t i = 1; i < t2.size(); ++i) {
    const std::string& g = t2[i][0];
    const std::string& a = t2[i][1];
    for (std::size_t j = 1; j < t1.size(); ++j) {
      if (t1[j][0] != g || t1[j][1] != a || t1[j][8].empty()) continue;
      const double ret = std::stod(t1[j][8]), ex = std::stod(t1[j][9]);
      if (ref.count(g)) {
        EXPECT_NEAR(std::stod(t2[i][2]), 100.0 * ret / ref[g].first, 1e-9);
        EXPECT_NEAR(std::stod(t2[i][4]), 100.0 * ex / ref[g].second, 1e-9);
        ++checked;
      }
      if (nigm.count(g)) {
        EXPECT_NEAR(std::stod(t2[i][3]), 100.0 * ret / nigm[g].first, 1e-9);
        EXPECT_NEAR(std::stod(t2[i][5]), 100.0 * ex / nigm[g].second, 1e-9);
        ++checked;
      }
    }
  }
  EXPECT_GT(checked, 0);
}

TEST(Tables, ReferenceDominatesEveryLearner) {
  const RunReport& rep = small_run().rep;
  for (const auto& c : rep.cells) {
    const GridBaseline* b = find_baseline(c.study == "B" ? rep.baselines_b : rep.baselines_c, c.m);
    ASSERT_NE(b, nullptr);
    ASSERT_TRUE(b->reference_ok);
    if (b->nigm_ok) { EXPECT_LE(b->nigm_return, b->reference_return + 1e-12); }
    for (const auto& r : c.runs) {
      EXPECT_TRUE(r.error.empty()) << r.error;
      if (r.ok) { EXPECT_LE(r.stats.return_value, b->reference_return + 1e-12); }
    }
  }
}

TEST(Tables, Deterministic) {
  const Json cfg = Json::parse(kSmallConfig);
  ExperimentConfig ec = load_experiment(cfg);
  ec.threads = 2;
  const Tables a = make_tables(small_run().rep);
  const RunReport other = run_experiment(small_run().sc, ec);
  const Tables b = make_tables(other);
  EXPECT_EQ(a.table1, b.table1);
  EXPECT_EQ(a.table2, b.table2);
  EXPECT_EQ(a.table3, b.table3);
  EXPECT_EQ(a.table4, b.table4);
  EXPECT_EQ(overshoot_csv(small_run().rep), overshoot_csv(other));
}

TEST(Tables, EmitWritesEveryArtifact) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "phaseplan_emit_test";
  fs::remove_all(dir);
  emit_tables(small_run().rep, dir);
  for (const char* f : {"table1.csv", "table2.csv", "table3.csv", "table4.csv", "tables_schema.md", "overshoot.csv",
                        "baselines.csv", "timings.json"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  EXPECT_TRUE(fs::exists(dir / "runs" / "B_IQL_M8" / "rep0" / "history.csv"));
  EXPECT_TRUE(fs::exists(dir / "runs" / "C_IAVRL_M8_prior" / "rep1" / "history.csv"));
  const Json timings = read_json_file(dir / "timings.json");
  EXPECT_TRUE(timings.contains("training"));
  fs::remove_all(dir);
}

TEST(Summary, MeansOverRuns) {
  Cell c;
  c.runs.resize(3);
  for (int i = 0; i < 3; ++i) {
    c.runs[i].stats.first_successful_episode = i + 1;
    c.runs[i].stats.steps = 10 * (i + 1);
    c.runs[i].stats.converged = i != 1;
    c.runs[i].stats.convergence_episode = 100 * (i + 1);
    c.runs[i].ok = i != 2;
    c.runs[i].stats.return_value = 4.0 + i;
    c.runs[i].stats.execution_time_s = 1.0 + i;
  }
  const CellSummary s = summarize(c);
  EXPECT_EQ(s.successes, 2);
  EXPECT_EQ(s.converged, 2);
  EXPECT_DOUBLE_EQ(s.first_successful_episode, 2.0);
  EXPECT_DOUBLE_EQ(s.computation_steps, 20.0);
  EXPECT_DOUBLE_EQ(s.convergence_episode, 200.0);
  EXPECT_DOUBLE_EQ(s.return_value, 4.5);
  EXPECT_DOUBLE_EQ(s.execution_time_s, 1.5);
}

TEST(Summary, Median) {
  EXPECT_DOUBLE_EQ(median_of({3.0, 1.0, 2.0}), 2.0);
  EXPECT_DOUBLE_EQ(median_of({4.0, 1.0, 3.0, 2.0}), 2.5);
  EXPECT_DOUBLE_EQ(median_of({}), 0.0);
}

TEST(Overshoot, ZeroForSegmentsInsideLimits) {
  // Unit mass with constant limits: every executed sddot is admissible, so
  // nothing between the points can overshoot.
  const auto b = fixtures::bang_bang(21);
  const PhaseGrid g = build_grid(b.dp, b.cs, 40);
  const Trajectory t = plan_nigm(g, b.dp, b.cs);
  EXPECT_LE(interpoint_overshoot(b.model, b.path, b.cs, t), 1e-12);
}

TEST(Overshoot, BuiltInSelectiveBeatsUniform) {
  const Scenario sc = two_link_scenario();
  ExperimentConfig ec;
  ec.studies = {"A"};
  const RunReport a = run_experiment(sc, ec);
  ASSERT_TRUE(a.study_a && a.study_a->error.empty());
  EXPECT_LT(a.study_a->selective, a.study_a->uniform);
}

TEST(Config, BuiltInLoads) {
  const Scenario sc = two_link_scenario();
  EXPECT_EQ(sc.model.dof, 2);
  EXPECT_EQ(sc.grid_m, 200);
  EXPECT_EQ(sc.constraints.mode, TorqueMode::velocity_dependent);
  const ExperimentConfig ec = load_experiment(two_link_config());
  EXPECT_EQ(ec.repetitions, 10);
  EXPECT_EQ(ec.iql.max_episodes, 20000);
  EXPECT_EQ(ec.iavrl.max_episodes, 500000);
  EXPECT_DOUBLE_EQ(ec.iql.prior_scale_pos, 25.0);
}

TEST(Config, Errors) {
  Json cfg = Json::parse(kSmallConfig);
  Json bad = cfg;
  bad["model"]["type"] = "hexapod";
  EXPECT_THROW(load_scenario(bad), ConfigError);
  bad = cfg;
  bad["path"]["start"] = {0.0, 0.0};
  bad["path"]["end"] = {1.0, 1.0};
  EXPECT_THROW(load_scenario(bad), ConfigError);
  bad = cfg;
  bad["model"]["motors"][0]["breakpoints"] = {{0, 1.0}, {1, 2.0}};
  EXPECT_THROW(load_scenario(bad), ConfigError);
  bad = cfg;
  bad["experiment"]["studies"] = {"D"};
  EXPECT_THROW(load_experiment(bad), ConfigError);
  bad = cfg;
  bad["rl"]["epsilon"] = 2.0;
  EXPECT_THROW(load_experiment(bad), ConfigError);
  bad = cfg;
  bad["model"]["mode"] = "fast";
  EXPECT_THROW(load_scenario(bad), ConfigError);
  bad = cfg;
  bad.erase("path");
  EXPECT_THROW(load_scenario(bad), ConfigError);
  EXPECT_THROW(read_json_file("/nonexistent/config.json"), ConfigError);
}

TEST(Config, SectionFromFile) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "phaseplan_cfg_test";
  fs::create_directories(dir);
  Json cfg = Json::parse(kSmallConfig);
  write_text(dir / "path.json", cfg["path"].dump());
  cfg["path"] = "path.json";
  write_text(dir / "main.json", cfg.dump());
  const Scenario sc = load_scenario(read_json_file(dir / "main.json"), dir);
  EXPECT_EQ(sc.path.dof(), 1);
  fs::remove_all(dir);
}
