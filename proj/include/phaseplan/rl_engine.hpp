#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "phaseplan/constraints.hpp"
#include "phaseplan/discretizer.hpp"
#include "phaseplan/nigm.hpp"
#include "phaseplan/phase_grid.hpp"
#include "phaseplan/q_table.hpp"
#include "phaseplan/trajectory.hpp"

namespace phaseplan {

enum class Algorithm { iql, iavrl };

inline const char* to_string(Algorithm a) { return a == Algorithm::iql ? "IQL" : "IAVRL"; }

using Rng = std::mt19937_64;

// SplitMix64 finaliser: derives independent stream seeds from one seed.
inline std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct RLConfig {
  double alpha = 0.8;    // IQL learning coefficient
  double gamma = 0.8;    // IQL discount
  double rho = 0.8;      // IAVRL discount
  double mu = 1.25;      // penalty factor
  double epsilon = 0.4;  // greed factor
  long max_episodes = 500000;
  long patience = 1000;  // successful explorations with an unchanged exploit return
  double prior_scale_pos = 1.0;
  double prior_scale_neg = 1.25;
  std::uint64_t rng_seed = 1;

  static RLConfig defaults(Algorithm a) {
    RLConfig c;
    if (a == Algorithm::iql) {
      c.prior_scale_pos = 25.0;
      c.prior_scale_neg = 25.0;
    }
    return c;
  }

  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0,1)");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw InputError("gamma must lie in [0,1)");
    if (!(rho > 0.0 && rho < 1.0)) throw InputError("rho must lie in (0,1)");
    if (!(mu > 0.0)) throw InputError("mu must be positive");
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw InputError("epsilon must lie in [0,1]");
    if (max_episodes < 0 || patience < 1) throw InputError("max_episodes must be >= 0 and patience >= 1");
  }
};

// ---------------------------------------------------------------------------
// Terminal polyline

struct PhasePoint {
  double s = 0.0;
  double sdot = 0.0;
};

namespace detail {

inline double orient(PhasePoint a, PhasePoint b, PhasePoint c) {
  return (b.s - a.s) * (c.sdot - a.sdot) - (b.sdot - a.sdot) * (c.s - a.s);
}

inline bool near(PhasePoint a, PhasePoint b) {
  return std::abs(a.s - b.s) <= 1e-12 && std::abs(a.sdot - b.sdot) <= 1e-12 * std::max(1.0, std::abs(b.sdot));
}

inline bool on_segment(PhasePoint a, PhasePoint b, PhasePoint p) {
  return std::min(a.s, b.s) - 1e-15 <= p.s && p.s <= std::max(a.s, b.s) + 1e-15 &&
         std::min(a.sdot, b.sdot) - 1e-15 <= p.sdot && p.sdot <= std::max(a.sdot, b.sdot) + 1e-15;
}

inline int orient_sign(PhasePoint a, PhasePoint b, PhasePoint c) {
  const double o = orient(a, b, c);
  const double scale = 1e-12 * (1.0 + std::abs(b.s - a.s) + std::abs(b.sdot - a.sdot)) *
                       (1.0 + std::abs(c.s - a.s) + std::abs(c.sdot - a.sdot));
  return o > scale ? 1 : (o < -scale ? -1 : 0);
}

inline bool segments_intersect(PhasePoint p1, PhasePoint p2, PhasePoint q1, PhasePoint q2) {
  const int d1 = orient_sign(q1, q2, p1), d2 = orient_sign(q1, q2, p2);
  const int d3 = orient_sign(p1, p2, q1), d4 = orient_sign(p1, p2, q2);
  if (d1 * d2 < 0 && d3 * d4 < 0) return true;
  return (d1 == 0 && on_segment(q1, q2, p1)) || (d2 == 0 && on_segment(q1, q2, p2)) ||
         (d3 == 0 && on_segment(p1, p2, q1)) || (d4 == 0 && on_segment(p1, p2, q2));
}

}  // namespace detail

// Whether the phase-plane segment prev -> next touches or crosses the
// polyline, or ends on one of its vertices.
inline bool crossed_terminal(PhasePoint prev, PhasePoint next, std::span<const PhasePoint> polyline) {
  for (const auto& v : polyline)
    if (detail::near(next, v)) return true;
  if (polyline.size() == 1)
    return detail::orient_sign(prev, next, polyline[0]) == 0 && detail::on_segment(prev, next, polyline[0]);
  for (std::size_t i = 0; i + 1 < polyline.size(); ++i)
    if (detail::segments_intersect(prev, next, polyline[i], polyline[i + 1])) return true;
  return false;
}

// Clean suffix of a prior trajectory; reaching or crossing it ends an
// episode successfully.
struct TerminalPolyline {
  std::size_t first_col = 0;
  std::vector<int> rows;  // rows for columns first_col .. N-1
  std::vector<PhasePoint> points;

  bool empty() const { return rows.empty(); }
  bool covers(std::size_t col) const { return !empty() && col >= first_col && col < first_col + rows.size(); }
  int row_at(std::size_t col) const { return rows[col - first_col]; }
};

inline TerminalPolyline terminal_polyline(const Trajectory& prior, const PriorClassification& pc) {
  TerminalPolyline t;
  t.first_col = pc.terminal_begin;
  for (std::size_t k = pc.terminal_begin; k < prior.size(); ++k) {
    t.rows.push_back(prior.rows[k]);
    t.points.push_back({prior.s[k], prior.sdot[k]});
  }
  return t;
}

// Conservative plan, its classification under the enforced constraints and
// the derived terminal polyline.
struct PriorKnowledge {
  Trajectory trajectory;
  PriorClassification classification;
  TerminalPolyline terminal;
};

inline PriorKnowledge make_prior(const PhaseGrid& grid, const DiscretePath& dp, const ConstraintSet& cs) {
  PriorKnowledge pk;
  pk.trajectory = plan_nigm(grid, dp, cs, TorqueMode::conservative);
  pk.classification = classify_prior(pk.trajectory, grid, dp, cs);
  pk.terminal = terminal_polyline(pk.trajectory, pk.classification);
  return pk;
}

// ---------------------------------------------------------------------------
// Environment: immutable grid + constraints with every state's feasibility
// and action range precomputed. The last transition is restricted to row 0.

class Environment {
 public:
  Environment(PhaseGrid grid, DiscretePath dp, ConstraintSet cs, std::optional<TerminalPolyline> terminal = {})
      : grid_(std::move(grid)), dp_(std::move(dp)), cs_(std::move(cs)), terminal_(std::move(terminal)) {
    if (terminal_ && terminal_->empty()) terminal_.reset();
    const std::size_t n = grid_.columns();
    offset_.resize(n + 1, 0);
    for (std::size_t k = 0; k < n; ++k) offset_[k + 1] = offset_[k] + static_cast<std::size_t>(grid_.max_row[k]) + 1;
    feasible_.assign(offset_[n], 0);
    ranges_.assign(offset_[n], ActionRange::none());
    for (std::size_t k = 0; k < n; ++k) {
      for (int r = 0; r <= grid_.max_row[k]; ++r) {
        const std::size_t i = offset_[k] + static_cast<std::size_t>(r);
        feasible_[i] = check_state(dp_[k], cs_, grid_.level(r));
        if (!feasible_[i] || k + 1 == n) continue;
        ActionRange ar = action_range(grid_, dp_, cs_, {k, r});
        if (k + 2 == n) ar = ar.contains(0) ? ActionRange{0, 0, false} : ActionRange::none(ar.dead);
        ranges_[i] = ar;
      }
    }
  }

  const PhaseGrid& grid() const { return grid_; }
  const DiscretePath& path() const { return dp_; }
  const ConstraintSet& constraints() const { return cs_; }
  const std::optional<TerminalPolyline>& terminal() const { return terminal_; }
  std::size_t columns() const { return grid_.columns(); }
  std::size_t state_count() const { return offset_.back(); }

  bool feasible(const GridState& st) const {
    return st.row >= 0 && st.row <= grid_.max_row[st.col] && feasible_[index(st)] != 0;
  }

  const ActionRange& range(const GridState& st) const {
    static const ActionRange none = ActionRange::none();
    if (st.row < 0 || st.row > grid_.max_row[st.col]) return none;
    return ranges_[index(st)];
  }

  // Terminal row to continue from when the move from `from` to `action`
  // reaches or crosses the terminal polyline and the terminal row at the
  // next column is itself reachable from `from`.
  std::optional<int> splice_row(const GridState& from, int action) const {
    if (!terminal_) return std::nullopt;
    const std::size_t k1 = from.col + 1;
    if (!terminal_->covers(k1)) return std::nullopt;
    const int p1 = terminal_->row_at(k1);
    bool crossed = action == p1;
    if (!crossed && terminal_->covers(from.col)) {
      const int d0 = from.row - terminal_->row_at(from.col);
      const int d1 = action - p1;
      crossed = (d0 < 0 && d1 > 0) || (d0 > 0 && d1 < 0);
    }
    if (!crossed || !range(from).contains(p1)) return std::nullopt;
    return p1;
  }

 private:
  std::size_t index(const GridState& st) const { return offset_[st.col] + static_cast<std::size_t>(st.row); }

  PhaseGrid grid_;
  DiscretePath dp_;
  ConstraintSet cs_;
  std::optional<TerminalPolyline> terminal_;
  std::vector<std::size_t> offset_;
  std::vector<std::uint8_t> feasible_;
  std::vector<ActionRange> ranges_;
};

// ---------------------------------------------------------------------------
// Formulas

inline double reward(double sdot_k, double sdot_k1, bool violated, double mu) {
  const double sum = sdot_k + sdot_k1;
  return violated ? -mu * sum : sum;
}

inline double iql_update(QTable& q, const GridState& s, int action, double r, double max_next, const RLConfig& cfg) {
  const double old = q.get(s.col, s.row, action);
  const double value = old + cfg.alpha * (r + cfg.gamma * max_next - old);
  q.set(s.col, s.row, action, value);
  return value;
}

// Largest Q over an action range; 0 for an empty range.
inline double max_q(const QTable& q, const GridState& s, const ActionRange& ar) {
  if (ar.empty()) return 0.0;
  const auto v = q.view(s.col, s.row);
  double best = -kInf;
  for (int a = ar.row_min; a <= ar.row_max; ++a) best = std::max(best, v.at(a));
  return best;
}

inline bool all_negative(const QTable& q, const GridState& s, const ActionRange& ar) {
  const auto v = q.view(s.col, s.row);
  for (int a = ar.row_min; a <= ar.row_max; ++a)
    if (v.at(a) >= 0.0) return false;
  return true;
}

enum class Outcome { terminal, violated, exhausted };

inline const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::terminal: return "terminal";
    case Outcome::violated: return "violated";
    default: return "exhausted";
  }
}

struct EpisodeStep {
  GridState state;
  int action = 0;
  double reward = 0.0;
};

struct EpisodeLog {
  std::vector<EpisodeStep> steps;
  Outcome outcome = Outcome::exhausted;
  std::vector<int> rows;       // visited rows from column 0, including the last next state
  std::vector<int> completed;  // full profile on success (terminal suffix appended)
  double return_value = 0.0;

  bool success() const { return outcome == Outcome::terminal; }
};

// Multi-step assignment Q(S_k, A_k) = R_{k+1} + rho^(K-k) R_{K+1} for k < K
// and Q(S_K, A_K) = R_{K+1}, with K the final step of the episode.
inline void iavrl_update(QTable& q, const EpisodeLog& ep, const RLConfig& cfg) {
  if (ep.steps.empty()) return;
  const std::size_t last = ep.steps.size() - 1;
  const double tail = ep.steps[last].reward;
  double discount = 1.0;
  for (std::size_t k = last + 1; k-- > 0;) {
    const auto& st = ep.steps[k];
    const double value = k == last ? tail : st.reward + discount * tail;
    q.set(st.state.col, st.state.row, st.action, value);
    discount *= cfg.rho;
  }
}

// Writes the prior transitions: pos * (sdot_k + sdot_k1) where the prior
// point respects the constraints, -neg * (...) where it does not.
inline void seed_prior(QTable& q, const Trajectory& prior, const PriorClassification& pc, const RLConfig& cfg) {
  for (std::size_t k = 0; k + 1 < prior.size(); ++k) {
    const double sum = prior.sdot[k] + prior.sdot[k + 1];
    const double value = pc.violates[k] ? -cfg.prior_scale_neg * sum : cfg.prior_scale_pos * sum;
    q.set(k, prior.rows[k], prior.rows[k + 1], value);
  }
}

struct Selection {
  int action = -1;
  bool all_negative = false;
};

// Epsilon-greedy over the non-negative actions of a range. IAVRL explores
// only among actions it has not yet taken from this state.
inline Selection select_action(const QTable& q, const GridState& s, const ActionRange& ar, double epsilon, Rng& rng,
                               Algorithm algo) {
  if (ar.empty()) throw InputError("select_action: empty action range");
  const auto v = q.view(s.col, s.row);
  std::vector<int> open;
  open.reserve(static_cast<std::size_t>(ar.size()));
  for (int a = ar.row_min; a <= ar.row_max; ++a)
    if (v.at(a) >= 0.0) open.push_back(a);
  if (open.empty()) return {-1, true};

  std::uniform_real_distribution<double> coin(0.0, 1.0);
  const bool explore = coin(rng) < epsilon;
  auto pick = [&rng](const std::vector<int>& from) {
    std::uniform_int_distribution<std::size_t> d(0, from.size() - 1);
    return from[d(rng)];
  };
  if (explore) {
    if (algo == Algorithm::iql) return {pick(open), false};
    std::vector<int> fresh;
    for (int a : open)
      if (!v.visited(a)) fresh.push_back(a);
    if (!fresh.empty()) return {pick(fresh), false};
  }
  double best = -kInf;
  std::vector<int> ties;
  for (int a : open) {
    const double x = v.at(a);
    if (x > best) {
      best = x;
      ties.assign(1, a);
    } else if (x == best) {
      ties.push_back(a);
    }
  }
  return {ties.size() == 1 ? ties.front() : pick(ties), false};
}

namespace detail {

inline void finish_success(const Environment& env, EpisodeLog& log, std::size_t splice_col) {
  log.completed.assign(log.rows.begin(), log.rows.begin() + static_cast<std::ptrdiff_t>(splice_col));
  if (splice_col < env.columns() && env.terminal()) {
    const auto& t = *env.terminal();
    for (std::size_t k = splice_col; k < env.columns(); ++k) log.completed.push_back(t.row_at(k));
  } else {
    log.completed = log.rows;
  }
  log.return_value = trajectory_return(env.grid(), log.completed);
}

}  // namespace detail

// One exploration episode from (0, 0). IQL updates the table at every step;
// IAVRL records the trace and assigns the whole episode at the end.
inline EpisodeLog run_episode(const Environment& env, QTable& q, const RLConfig& cfg, Algorithm algo, Rng& rng,
                              double epsilon) {
  EpisodeLog log;
  const std::size_t n = env.columns();
  GridState st{0, 0};
  log.rows.push_back(0);
  if (!env.feasible(st) || env.range(st).empty()) return log;

  while (true) {
    const ActionRange& ar = env.range(st);
    const Selection sel = select_action(q, st, ar, epsilon, rng, algo);
    if (sel.all_negative) break;  // only reachable at the start state
    const int a = sel.action;
    q.mark_visited(st.col, st.row, a);
    const GridState next{st.col + 1, a};
    log.rows.push_back(a);

    const auto splice = env.splice_row(st, a);
    const bool success = splice.has_value() || next.col + 1 == n;
    bool violated = false;
    if (!success) {
      const ActionRange& nr = env.range(next);
      violated = !env.feasible(next) || nr.empty() || all_negative(q, next, nr);
    }
    const double r = reward(env.grid().level(st.row), env.grid().level(a), violated, cfg.mu);
    log.steps.push_back({st, a, r});

    if (algo == Algorithm::iql) {
      const double next_max = (success || violated) ? 0.0 : max_q(q, next, env.range(next));
      iql_update(q, st, a, r, next_max, cfg);
    }
    if (success) {
      log.outcome = Outcome::terminal;
      detail::finish_success(env, log, splice ? next.col : n);
      break;
    }
    if (violated) {
      log.outcome = Outcome::violated;
      log.return_value = trajectory_return(env.grid(), log.rows);
      break;
    }
    st = next;
  }
  if (algo == Algorithm::iavrl) iavrl_update(q, log, cfg);
  return log;
}

struct ExploitResult {
  bool ok = false;
  std::vector<int> rows;
  Trajectory trajectory;
  double return_value = 0.0;
  double exec_time = 0.0;
};

// Fully greedy rollout; ties go to the higher target row.
inline ExploitResult exploit(const Environment& env, const QTable& q) {
  ExploitResult res;
  const std::size_t n = env.columns();
  GridState st{0, 0};
  std::vector<int> rows{0};
  if (!env.feasible(st)) return res;
  while (true) {
    const ActionRange& ar = env.range(st);
    if (ar.empty()) return res;
    const auto v = q.view(st.col, st.row);
    int best_a = -1;
    double best = -kInf;
    for (int a = ar.row_max; a >= ar.row_min; --a) {
      const double x = v.at(a);
      if (x >= 0.0 && x > best) {
        best = x;
        best_a = a;
      }
    }
    if (best_a < 0) return res;
    const GridState next{st.col + 1, best_a};
    if (const auto splice = env.splice_row(st, best_a)) {
      for (std::size_t k = next.col; k < n; ++k) rows.push_back(env.terminal()->row_at(k));
      break;
    }
    rows.push_back(best_a);
    if (next.col + 1 == n) break;
    if (!env.feasible(next) || env.range(next).empty()) return res;
    st = next;
  }
  res.ok = true;
  res.rows = rows;
  res.trajectory = make_trajectory(env.grid(), env.path(), env.constraints(), std::move(rows));
  res.return_value = res.trajectory.return_value;
  res.exec_time = res.trajectory.exec_time;
  return res;
}

struct TrainStats {
  long episodes = 0;
  long first_successful_episode = 0;  // 0: never
  bool converged = false;
  long convergence_episode = 0;
  double computation_time_s = 0.0;
  long steps = 0;  // environment transitions over all episodes
  long successes = 0;
  long exploit_failures = 0;
  bool exploit_ok = false;
  double return_value = 0.0;
  double execution_time_s = 0.0;
};

struct TrainResult {
  QTable q;
  Trajectory trajectory;  // from the last successful exploit
  Trajectory best;        // highest-return exploit seen
  std::vector<std::pair<long, double>> history;  // (episode, exploit return)
  TrainStats stats;
};

// Episodes until the exploit return stays unchanged for `patience`
// successful explorations, or max_episodes. With a prior, the table is
// seeded first and the environment should carry the prior's terminal
// polyline.
inline TrainResult train(const Environment& env, const RLConfig& cfg, Algorithm algo,
                         const PriorKnowledge* prior = nullptr) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  TrainResult res;
  Rng rng(split_seed(cfg.rng_seed, 0));
  if (prior) {
    seed_prior(res.q, prior->trajectory, prior->classification, cfg);
    res.trajectory = prior->trajectory;
    res.best = prior->trajectory;
  }
  auto& st = res.stats;
  double last_return = std::nan("");
  double best_return = -kInf;
  long stable = 0;
  long last_change = 0;

  for (long ep = 1; ep <= cfg.max_episodes; ++ep) {
    const EpisodeLog log = run_episode(env, res.q, cfg, algo, rng, cfg.epsilon);
    st.episodes = ep;
    st.steps += static_cast<long>(log.steps.size());
    if (!log.success()) {
      if (log.steps.empty()) break;  // start state has no usable action
      continue;
    }
    ++st.successes;
    if (st.first_successful_episode == 0) st.first_successful_episode = ep;
    ExploitResult ex = exploit(env, res.q);
    if (!ex.ok) {
      ++st.exploit_failures;
      stable = 0;
      continue;
    }
    res.history.emplace_back(ep, ex.return_value);
    if (ex.return_value > best_return) {
      best_return = ex.return_value;
      res.best = ex.trajectory;
    }
    if (!(std::abs(ex.return_value - last_return) <= 1e-12)) {
      last_return = ex.return_value;
      last_change = ep;
      stable = 0;
    } else {
      ++stable;
    }
    st.exploit_ok = true;
    res.trajectory = std::move(ex.trajectory);
    if (stable >= cfg.patience) {
      st.converged = true;
      st.convergence_episode = last_change;
      break;
    }
  }
  if (st.exploit_ok) {
    st.return_value = res.trajectory.return_value;
    st.execution_time_s = res.trajectory.exec_time;
  }
  st.computation_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

}  // namespace phaseplan
