#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <set>

#include "support.hpp"

using namespace phaseplan;

namespace {

// ds = 0.25, h = 0.25, |sddot| <= 1. Rows {0, 2, 2, 2, 0} form a valid
// profile.
Environment small_env() {
  const auto b = fixtures::bang_bang(5);
  return Environment(build_grid(b.dp, b.cs, 4), b.dp, b.cs);
}

QTable steer_along(const std::vector<int>& rows) {
  QTable q;
  for (std::size_t k = 0; k + 1 < rows.size(); ++k) q.set(k, rows[k], rows[k + 1], 1.0);
  return q;
}

RLConfig zero_greed(Algorithm a) {
  RLConfig c = RLConfig::defaults(a);
  c.epsilon = 0.0;
  return c;
}

// Independent segment test: solve p1 + t d = q1 + u e. Returns nullopt when
// the case is too close to degenerate to call.
std::optional<bool> crosses(PhasePoint p1, PhasePoint p2, PhasePoint q1, PhasePoint q2) {
  const double dx = p2.s - p1.s, dy = p2.sdot - p1.sdot;
  const double ex = q2.s - q1.s, ey = q2.sdot - q1.sdot;
  const double det = dx * (-ey) - dy * (-ex);
  if (std::abs(det) < 1e-9) return std::nullopt;
  const double rx = q1.s - p1.s, ry = q1.sdot - p1.sdot;
  const double t = (rx * (-ey) - ry * (-ex)) / det;
  const double u = (dx * ry - dy * rx) / det;
  for (double x : {t, u})
    if (std::abs(x) < 1e-9 || std::abs(x - 1.0) < 1e-9) return std::nullopt;
  return t > 0.0 && t < 1.0 && u > 0.0 && u < 1.0;
}

}  // namespace

TEST(Reward, Examples) {
  EXPECT_DOUBLE_EQ(reward(0.2, 0.3, false, 1.25), 0.5);
  EXPECT_DOUBLE_EQ(reward(0.2, 0.3, true, 1.25), -0.625);
  EXPECT_EQ(reward(0.0, 0.0, true, 1.25), 0.0);
}

TEST(SeedPrior, ValuesPerAlgorithm) {
  const auto b = fixtures::bang_bang(3);
  const PhaseGrid g = build_grid(b.dp, b.cs, 10);
  // Rows 0 -> 5 -> 0 with the first point flagged.
  const Trajectory t = make_trajectory(g, b.dp, b.cs, {0, 5, 0});
  PriorClassification pc;
  pc.violates = {true, false, false};
  pc.terminal_begin = 1;

  QTable iql;
  seed_prior(iql, t, pc, RLConfig::defaults(Algorithm::iql));
  EXPECT_DOUBLE_EQ(iql.get(0, 0, 5), -12.5);
  EXPECT_DOUBLE_EQ(iql.get(1, 5, 0), 12.5);

  QTable iavrl;
  seed_prior(iavrl, t, pc, RLConfig::defaults(Algorithm::iavrl));
  EXPECT_DOUBLE_EQ(iavrl.get(0, 0, 5), -0.625);
  EXPECT_DOUBLE_EQ(iavrl.get(1, 5, 0), 0.5);
  EXPECT_EQ(iavrl.size(), 2u);
}

TEST(IqlUpdate, Examples) {
  const RLConfig c = RLConfig::defaults(Algorithm::iql);
  QTable q;
  EXPECT_DOUBLE_EQ(iql_update(q, {0, 0}, 1, 1.0, 0.0, c), 0.8);
  q.set(1, 2, 3, 0.5);
  // 0.5 + 0.8 * (2 + 0.8 * 2.5 - 0.5)
  EXPECT_DOUBLE_EQ(iql_update(q, {1, 2}, 3, 2.0, 2.5, c), 3.3);
  EXPECT_DOUBLE_EQ(q.get(1, 2, 3), 3.3);
}

TEST(IqlUpdate, RepeatedUpdateReachesFixedPoint) {
  const RLConfig c = RLConfig::defaults(Algorithm::iql);
  QTable q;
  double v = 0.0;
  for (int i = 0; i < 200; ++i) v = iql_update(q, {0, 0}, 1, 0.7, 1.5, c);
  EXPECT_NEAR(v, 0.7 + 0.8 * 1.5, 1e-12);
}

TEST(IavrlUpdate, AssignsDiscountedTail) {
  EpisodeLog ep;
  ep.steps = {{{0, 0}, 1, 0.1}, {{1, 1}, 2, 0.2}, {{2, 2}, 0, -0.5}};
  QTable q;
  q.set(0, 0, 1, 99.0);  // overwritten, not blended
  iavrl_update(q, ep, RLConfig::defaults(Algorithm::iavrl));
  EXPECT_DOUBLE_EQ(q.get(2, 2, 0), -0.5);
  EXPECT_DOUBLE_EQ(q.get(1, 1, 2), 0.2 + 0.8 * -0.5);
  EXPECT_DOUBLE_EQ(q.get(0, 0, 1), 0.1 + 0.64 * -0.5);
  EXPECT_NEAR(q.get(0, 0, 1), -0.22, 1e-15);
}

TEST(IavrlUpdate, Idempotent) {
  EpisodeLog ep;
  ep.steps = {{{0, 0}, 3, 0.3}, {{1, 3}, 4, 0.7}, {{2, 4}, 1, 0.5}};
  const RLConfig c = RLConfig::defaults(Algorithm::iavrl);
  QTable once, twice;
  iavrl_update(once, ep, c);
  iavrl_update(twice, ep, c);
  iavrl_update(twice, ep, c);
  EXPECT_TRUE(once == twice);
}

TEST(SelectAction, GreedyPicksLargest) {
  QTable q;
  q.set(0, 0, 1, 1.0);
  q.set(0, 0, 2, 5.0);
  q.set(0, 0, 3, 2.0);
  Rng rng(1);
  for (Algorithm a : {Algorithm::iql, Algorithm::iavrl})
    EXPECT_EQ(select_action(q, {0, 0}, {1, 3, false}, 0.0, rng, a).action, 2);
}

TEST(SelectAction, NegativeActionsAreMasked) {
  QTable q;
  q.set(0, 0, 1, -1.0);
  q.set(0, 0, 2, -0.5);
  Rng rng(1);
  const Selection s = select_action(q, {0, 0}, {1, 2, false}, 0.4, rng, Algorithm::iql);
  EXPECT_TRUE(s.all_negative);
  EXPECT_EQ(s.action, -1);
  q.set(0, 0, 3, -2.0);
  for (int i = 0; i < 100; ++i) {
    const Selection t = select_action(q, {0, 0}, {1, 4, false}, 1.0, rng, Algorithm::iql);
    EXPECT_EQ(t.action, 4);  // the only non-negative action
  }
}

TEST(SelectAction, TiesSplitEvenly) {
  QTable q;
  Rng rng(7);
  int low = 0;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) low += select_action(q, {0, 0}, {3, 4, false}, 0.0, rng, Algorithm::iql).action == 3;
  EXPECT_NEAR(static_cast<double>(low) / draws, 0.5, 0.05);
}

TEST(SelectAction, IavrlExploresOnlyUntried) {
  QTable q;
  q.set(0, 0, 5, 9.0);
  for (int a : {1, 2, 3, 5}) q.mark_visited(0, 0, a);
  Rng rng(3);
  for (int i = 0; i < 200; ++i) EXPECT_EQ(select_action(q, {0, 0}, {1, 5, false}, 1.0, rng, Algorithm::iavrl).action, 4);
  q.mark_visited(0, 0, 4);
  // Nothing left to try: fall back to the greedy choice.
  for (int i = 0; i < 50; ++i) EXPECT_EQ(select_action(q, {0, 0}, {1, 5, false}, 1.0, rng, Algorithm::iavrl).action, 5);
}

TEST(SelectAction, EmptyRangeThrows) {
  QTable q;
  Rng rng(1);
  EXPECT_THROW(select_action(q, {0, 0}, ActionRange::none(), 0.0, rng, Algorithm::iql), InputError);
}

TEST(CrossedTerminal, MatchesParametricOracle) {
  Rng rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int checked = 0, hits = 0;
  for (int trial = 0; trial < 20000; ++trial) {
    const PhasePoint a{u(rng), u(rng)}, b{u(rng), u(rng)};
    std::vector<PhasePoint> poly;
    const int len = 2 + trial % 4;
    for (int i = 0; i < len; ++i) poly.push_back({u(rng), u(rng)});
    bool want = false, ambiguous = false;
    for (std::size_t i = 0; i + 1 < poly.size(); ++i) {
      const auto c = crosses(a, b, poly[i], poly[i + 1]);
      if (!c) ambiguous = true;
      else want = want || *c;
    }
    if (ambiguous) continue;
    ++checked;
    hits += want;
    EXPECT_EQ(crossed_terminal(a, b, poly), want) << "trial " << trial;
  }
  EXPECT_GT(checked, 19000);
  EXPECT_GT(hits, 1000);
}

TEST(CrossedTerminal, TouchingCases) {
  const std::vector<PhasePoint> poly{{0.5, 0.0}, {0.5, 1.0}};
  EXPECT_TRUE(crossed_terminal({0.4, 0.5}, {0.5, 0.5}, poly));   // ends on the line
  EXPECT_TRUE(crossed_terminal({0.4, 0.2}, {0.5, 1.0}, poly));   // ends on a vertex
  EXPECT_FALSE(crossed_terminal({0.1, 0.2}, {0.4, 0.9}, poly));  // stops short
  const std::vector<PhasePoint> single{{0.5, 0.5}};
  EXPECT_TRUE(crossed_terminal({0.4, 0.4}, {0.6, 0.6}, single));
  EXPECT_FALSE(crossed_terminal({0.4, 0.5}, {0.6, 0.6}, single));
}

TEST(EnvironmentRanges, LastTransitionOnlyToRest) {
  const Environment env = small_env();
  for (int r = 0; r <= env.grid().max_row[3]; ++r) {
    const ActionRange& ar = env.range({3, r});
    if (!ar.empty()) {
      EXPECT_EQ(ar.row_min, 0);
      EXPECT_EQ(ar.row_max, 0);
    }
  }
}

TEST(Episode, IavrlTraceOnSteeredTable) {
  const Environment env = small_env();
  QTable q = steer_along({0, 2, 2, 2, 0});
  Rng rng(5);
  const RLConfig c = zero_greed(Algorithm::iavrl);
  const EpisodeLog log = run_episode(env, q, c, Algorithm::iavrl, rng, c.epsilon);
  ASSERT_TRUE(log.success());
  EXPECT_EQ(log.rows, (std::vector<int>{0, 2, 2, 2, 0}));
  EXPECT_EQ(log.completed, log.rows);
  ASSERT_EQ(log.steps.size(), 4u);
  const std::array<double, 4> rewards{0.5, 1.0, 1.0, 0.5};
  for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(log.steps[i].reward, rewards[i]);
  EXPECT_DOUBLE_EQ(log.return_value, 1.5);
  EXPECT_DOUBLE_EQ(q.get(3, 2, 0), 0.5);
  EXPECT_DOUBLE_EQ(q.get(2, 2, 2), 1.0 + 0.8 * 0.5);
  EXPECT_DOUBLE_EQ(q.get(1, 2, 2), 1.0 + 0.64 * 0.5);
  EXPECT_DOUBLE_EQ(q.get(0, 0, 2), 0.5 + 0.512 * 0.5);
  EXPECT_TRUE(q.visited(0, 0, 2));
}

TEST(Episode, IqlTraceOnSteeredTable) {
  const Environment env = small_env();
  QTable q = steer_along({0, 2, 2, 2, 0});
  Rng rng(5);
  const RLConfig c = zero_greed(Algorithm::iql);
  const EpisodeLog log = run_episode(env, q, c, Algorithm::iql, rng, c.epsilon);
  ASSERT_TRUE(log.success());
  // 1 + 0.8 (0.5 + 0.8 * 1 - 1); the last step has no successor value.
  EXPECT_DOUBLE_EQ(q.get(0, 0, 2), 1.24);
  EXPECT_DOUBLE_EQ(q.get(3, 2, 0), 1.0 + 0.8 * (0.5 - 1.0));
}

TEST(Episode, ViolationEndsWithPenalty) {
  const Environment env = small_env();
  // Every action out of (1, 2) is negative, so reaching it is a violation.
  QTable q = steer_along({0, 2});
  for (int a = 0; a <= 3; ++a) q.set(1, 2, a, -1.0);
  Rng rng(5);
  const RLConfig c = zero_greed(Algorithm::iavrl);
  const EpisodeLog log = run_episode(env, q, c, Algorithm::iavrl, rng, c.epsilon);
  EXPECT_EQ(log.outcome, Outcome::violated);
  ASSERT_EQ(log.steps.size(), 1u);
  EXPECT_DOUBLE_EQ(log.steps[0].reward, -1.25 * 0.5);
  EXPECT_DOUBLE_EQ(q.get(0, 0, 2), -0.625);
}

TEST(Episode, StepInvariantsOnTinyInstances) {
  for (const auto& f : fixtures::feasible_tiny_instances(8)) {
    const Environment& env = *f.env;
    for (Algorithm a : {Algorithm::iql, Algorithm::iavrl}) {
      QTable q;
      Rng rng(static_cast<std::uint64_t>(f.index) + 1);
      const RLConfig c = RLConfig::defaults(a);
      for (int ep = 0; ep < 50; ++ep) {
        const EpisodeLog log = run_episode(env, q, c, a, rng, c.epsilon);
        if (log.steps.empty()) break;
        EXPECT_EQ(log.rows.size(), log.steps.size() + 1);
        for (std::size_t i = 0; i < log.steps.size(); ++i) {
          const auto& st = log.steps[i];
          EXPECT_EQ(st.state.col, i);
          EXPECT_TRUE(env.range(st.state).contains(st.action));
          const bool last = i + 1 == log.steps.size();
          if (!last || log.success()) { EXPECT_GE(st.reward, 0.0); }
          if (last && log.outcome == Outcome::violated) { EXPECT_LE(st.reward, 0.0); }
        }
        if (log.success()) {
          EXPECT_EQ(log.completed.size(), env.columns());
          EXPECT_EQ(log.completed.back(), 0);
          EXPECT_LE(log.return_value, f.oracle.return_value + 1e-12);
        }
      }
    }
  }
}

TEST(Exploit, SeededTableFollowsPrior) {
  const auto b = fixtures::bang_bang(21);
  const PhaseGrid g = build_grid(b.dp, b.cs, 20);
  const PriorKnowledge pk = make_prior(g, b.dp, b.cs);
  ASSERT_EQ(pk.classification.violations(), 0u);
  for (Algorithm a : {Algorithm::iql, Algorithm::iavrl}) {
    QTable q;
    seed_prior(q, pk.trajectory, pk.classification, RLConfig::defaults(a));
    const Environment plain(g, b.dp, b.cs);
    const ExploitResult r = exploit(plain, q);
    ASSERT_TRUE(r.ok);
    EXPECT_EQ(r.rows, pk.trajectory.rows);
    const Environment spliced(g, b.dp, b.cs, pk.terminal);
    const ExploitResult s = exploit(spliced, q);
    ASSERT_TRUE(s.ok);
    EXPECT_EQ(s.rows, pk.trajectory.rows);
  }
}

TEST(Exploit, TiesGoToHigherRow) {
  const Environment env = small_env();
  QTable q = steer_along({0, 2, 2, 2, 0});
  for (std::size_t k = 1; k + 1 < 5; ++k) q.set(k, 1, k + 2 == 5 ? 0 : 1, 1.0);
  q.set(0, 0, 1, 1.0);
  const ExploitResult r = exploit(env, q);
  ASSERT_TRUE(r.ok);
  EXPECT_EQ(r.rows, (std::vector<int>{0, 2, 2, 2, 0}));
}

TEST(Exploit, FailsWithoutUsableAction) {
  const Environment env = small_env();
  QTable q = steer_along({0, 2, 2});
  for (int a = 0; a <= 4; ++a) q.set(2, 2, a, -1.0);
  EXPECT_FALSE(exploit(env, q).ok);
}

TEST(Train, ZeroEpisodes) {
  const Environment env = small_env();
  RLConfig c = RLConfig::defaults(Algorithm::iql);
  c.max_episodes = 0;
  const TrainResult r = train(env, c, Algorithm::iql);
  EXPECT_EQ(r.stats.episodes, 0);
  EXPECT_FALSE(r.stats.exploit_ok);
  EXPECT_TRUE(r.history.empty());
  EXPECT_EQ(r.q.size(), 0u);
}

TEST(Train, DeterministicForSeed) {
  const auto inst = fixtures::feasible_tiny_instances(3);
  for (Algorithm a : {Algorithm::iql, Algorithm::iavrl}) {
    RLConfig c = RLConfig::defaults(a);
    c.max_episodes = 3000;
    c.rng_seed = 42;
    const TrainResult x = train(*inst[2].env, c, a);
    const TrainResult y = train(*inst[2].env, c, a);
    EXPECT_TRUE(x.q == y.q);
    EXPECT_EQ(x.history, y.history);
    EXPECT_EQ(x.stats.steps, y.stats.steps);
    EXPECT_EQ(x.trajectory.rows, y.trajectory.rows);
  }
}

TEST(Train, ReturnIsSumOfLevels) {
  for (const auto& f : fixtures::feasible_tiny_instances(5)) {
    RLConfig c = RLConfig::defaults(Algorithm::iql);
    c.max_episodes = 2000;
    const TrainResult r = train(*f.env, c, Algorithm::iql);
    if (!r.stats.exploit_ok) continue;
    double sum = 0.0;
    for (double v : r.trajectory.sdot) sum += v;
    EXPECT_NEAR(r.stats.return_value, sum, 1e-12);
    EXPECT_DOUBLE_EQ(r.stats.return_value, trajectory_return(f.env->grid(), r.trajectory.rows));
    EXPECT_LE(r.stats.return_value, f.oracle.return_value + 1e-12);
    EXPECT_GE(r.stats.first_successful_episode, 1);
    EXPECT_GE(r.stats.episodes, r.stats.first_successful_episode);
  }
}

TEST(Train, ConvergenceStopsEarly) {
  const Environment env = small_env();
  RLConfig c = RLConfig::defaults(Algorithm::iql);
  c.patience = 20;
  c.max_episodes = 100000;
  const TrainResult r = train(env, c, Algorithm::iql);
  ASSERT_TRUE(r.stats.converged);
  EXPECT_LT(r.stats.episodes, c.max_episodes);
  EXPECT_LE(r.stats.convergence_episode, r.stats.episodes);
  EXPECT_EQ(r.stats.successes, static_cast<long>(r.history.size()) + r.stats.exploit_failures);
}

// Assignment updates can turn every action out of the start state negative;
// training then stops without converging and keeps the last good rollout.
TEST(Train, IavrlStopsWhenStartStateIsMasked) {
  const Environment env = small_env();
  RLConfig c = RLConfig::defaults(Algorithm::iavrl);
  c.patience = 20;
  c.max_episodes = 100000;
  const TrainResult r = train(env, c, Algorithm::iavrl);
  EXPECT_FALSE(r.stats.converged);
  EXPECT_LT(r.stats.episodes, 100);
  const ActionRange& start = env.range({0, 0});
  EXPECT_TRUE(all_negative(r.q, {0, 0}, start));
  EXPECT_TRUE(r.stats.exploit_ok);
}

TEST(RlConfig, Validation) {
  RLConfig c;
  c.alpha = 1.0;
  EXPECT_THROW(c.validate(), InputError);
  c = {};
  c.epsilon = -0.1;
  EXPECT_THROW(c.validate(), InputError);
  c = {};
  c.patience = 0;
  EXPECT_THROW(c.validate(), InputError);
  EXPECT_NO_THROW(RLConfig::defaults(Algorithm::iql).validate());
}

TEST(SplitSeed, DistinctStreams) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 1000; ++s) seen.insert(split_seed(1, s));
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_EQ(split_seed(7, 3), split_seed(7, 3));
}
