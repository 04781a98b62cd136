#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "phaseplan/constraints.hpp"
#include "phaseplan/discretizer.hpp"
#include "phaseplan/dynamics.hpp"
#include "phaseplan/path.hpp"
#include "phaseplan/rl_engine.hpp"
#include "phaseplan/trajectory.hpp"

namespace phaseplan {

using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// Number formatting shared by every writer, so outputs are byte-stable.

inline std::string fmt_num(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (std::isnan(x)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

inline Json read_json_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot open " + p.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(p.string() + ": " + e.what());
  }
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << text;
  if (!out) throw Error("write failed for " + p.string());
}

// ---------------------------------------------------------------------------
// Small typed getters; every schema violation becomes a ConfigError.

namespace detail {

inline const Json& require(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(where + ": missing '" + key + "'");
  return j.at(key);
}

template <class T>
T get_or(const Json& j, const char* key, T fallback, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

inline Vector to_vector(const Json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(where + ": expected numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

inline Vector vector_or(const Json& j, const char* key, int n, double fill, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) return Vector::Constant(n, fill);
  Vector v = to_vector(j.at(key), where + "." + key);
  if (v.size() != n) throw ConfigError(where + "." + key + ": expected " + std::to_string(n) + " entries");
  return v;
}

inline Matrix to_matrix(const Json& j, Eigen::Index rows, Eigen::Index cols, const std::string& where) {
  Matrix m = Matrix::Zero(rows, cols);
  if (cols == 0) return m;
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows)
    throw ConfigError(where + ": expected " + std::to_string(rows) + " rows");
  for (Eigen::Index r = 0; r < rows; ++r) {
    Vector row = to_vector(j[static_cast<std::size_t>(r)], where);
    if (row.size() != cols) throw ConfigError(where + ": expected " + std::to_string(cols) + " columns");
    m.row(r) = row.transpose();
  }
  return m;
}

inline PlanarLink to_link(const Json& j, const std::string& where) {
  PlanarLink l;
  l.length = get_or(j, "length", l.length, where);
  l.mass = get_or(j, "mass", l.mass, where);
  l.com = get_or(j, "com", l.length / 2.0, where);
  l.inertia = get_or(j, "inertia", l.inertia, where);
  if (!(l.length > 0.0) || !(l.mass > 0.0) || l.inertia < 0.0) throw ConfigError(where + ": invalid link");
  return l;
}

inline std::vector<MotorCharacteristic::Breakpoint> to_breakpoints(const Json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected [[speed, torque], ...]");
  std::vector<MotorCharacteristic::Breakpoint> bp;
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 2) throw ConfigError(where + ": expected [speed, torque] pairs");
    bp.push_back({e[0].get<double>(), e[1].get<double>()});
  }
  return bp;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Model section

inline DynamicsModel load_model(const Json& j) {
  const std::string where = "model";
  const auto type = detail::get_or<std::string>(j, "type", "", where);
  const double g = detail::get_or(j, "gravity", 9.81, where);
  if (type == "point_mass") {
    return point_mass_model(detail::get_or(j, "mass", 1.0, where), detail::get_or(j, "viscous", 0.0, where),
                            detail::get_or(j, "coulomb", 0.0, where), detail::get_or(j, "gravity_load", 0.0, where));
  }
  if (type == "planar_2link" || type == "planar_chain") {
    const Json& links = detail::require(j, "links", where);
    if (!links.is_array() || links.empty()) throw ConfigError("model.links: expected a non-empty array");
    std::vector<PlanarLink> ls;
    for (std::size_t i = 0; i < links.size(); ++i) ls.push_back(detail::to_link(links[i], "model.links"));
    const int n = static_cast<int>(ls.size());
    const Vector fv = detail::vector_or(j, "viscous", n, 0.0, where);
    const Vector fc = detail::vector_or(j, "coulomb", n, 0.0, where);
    if (type == "planar_2link") {
      if (n != 2) throw ConfigError("model: planar_2link needs exactly two links");
      return planar_two_link_model(ls[0], ls[1], g, fv, fc);
    }
    return planar_chain_model(std::move(ls), g, fv, fc);
  }
  if (type == "constant") {
    const Json& jm = detail::require(j, "mass", where);
    if (!jm.is_array() || jm.empty()) throw ConfigError("model.mass: expected a square matrix");
    const auto n = static_cast<Eigen::Index>(jm.size());
    const Matrix m = detail::to_matrix(jm, n, n, "model.mass");
    const Matrix b = j.contains("coriolis") ? detail::to_matrix(j.at("coriolis"), n, pair_count(static_cast<int>(n)),
                                                                "model.coriolis")
                                            : Matrix::Zero(n, pair_count(static_cast<int>(n)));
    const Matrix c = j.contains("centrifugal") ? detail::to_matrix(j.at("centrifugal"), n, n, "model.centrifugal")
                                               : Matrix::Zero(n, n);
    const int dof = static_cast<int>(n);
    return constant_model(m, b, c, detail::vector_or(j, "viscous", dof, 0.0, where),
                          detail::vector_or(j, "coulomb", dof, 0.0, where),
                          detail::vector_or(j, "gravity_torque", dof, 0.0, where));
  }
  throw ConfigError("model.type must be point_mass, planar_2link, planar_chain or constant (got '" + type + "')");
}

inline MotorCharacteristic load_motor(const Json& j, const std::string& where) {
  MotorCharacteristic mc;
  mc.breakpoints = detail::to_breakpoints(detail::require(j, "breakpoints", where), where + ".breakpoints");
  mc.gear_ratio = detail::get_or(j, "gear_ratio", 1.0, where);
  mc.rated_speed = detail::get_or(j, "rated_speed", mc.max_speed(), where);
  mc.symmetric = detail::get_or(j, "symmetric", true, where);
  if (!mc.symmetric)
    mc.negative_breakpoints =
        detail::to_breakpoints(detail::require(j, "negative_breakpoints", where), where + ".negative_breakpoints");
  try {
    mc.validate();
  } catch (const InputError& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return mc;
}

inline TorqueMode parse_mode(const std::string& s) {
  if (s == "conservative") return TorqueMode::conservative;
  if (s == "velocity-dependent" || s == "velocity_dependent") return TorqueMode::velocity_dependent;
  throw ConfigError("mode must be conservative or velocity-dependent (got '" + s + "')");
}

inline const char* mode_name(TorqueMode m) {
  return m == TorqueMode::conservative ? "conservative" : "velocity-dependent";
}

// Motors and kinematic limits live in the model section.
inline ConstraintSet load_constraints(const Json& model) {
  ConstraintSet cs;
  const Json& motors = detail::require(model, "motors", "model");
  if (!motors.is_array() || motors.empty()) throw ConfigError("model.motors: expected a non-empty array");
  for (std::size_t i = 0; i < motors.size(); ++i)
    cs.motors.push_back(load_motor(motors[i], "model.motors[" + std::to_string(i) + "]"));
  const int n = cs.dof();
  const Json lim = model.value("limits", Json::object());
  cs.limits.qdot_min = detail::vector_or(lim, "qdot_min", n, -kInf, "model.limits");
  cs.limits.qdot_max = detail::vector_or(lim, "qdot_max", n, kInf, "model.limits");
  cs.limits.qddot_min = detail::vector_or(lim, "qddot_min", n, -kInf, "model.limits");
  cs.limits.qddot_max = detail::vector_or(lim, "qddot_max", n, kInf, "model.limits");
  if (model.contains("mode")) cs.mode = parse_mode(model.at("mode").get<std::string>());
  try {
    cs.validate();
  } catch (const InputError& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  return cs;
}

// ---------------------------------------------------------------------------
// Path section

inline JointPath load_path(const Json& j) {
  const std::string where = "path";
  const auto type = detail::get_or<std::string>(j, "type", "", where);
  try {
    if (type == "linear")
      return linear_path(detail::to_vector(detail::require(j, "start", where), "path.start"),
                         detail::to_vector(detail::require(j, "end", where), "path.end"));
    if (type == "polynomial") {
      std::vector<PolySegment> segs;
      for (const auto& js : detail::require(j, "segments", where)) {
        PolySegment seg;
        seg.start = detail::require(js, "start", "path.segments").get<double>();
        seg.end = detail::require(js, "end", "path.segments").get<double>();
        seg.coeffs = detail::require(js, "coeffs", "path.segments").get<std::vector<std::vector<double>>>();
        segs.push_back(std::move(seg));
      }
      return polynomial_path(std::move(segs));
    }
    if (type == "two_link_bend") {
      BendPathParams p;
      if (j.contains("offset")) p.offset = detail::to_vector(j.at("offset"), "path.offset");
      if (j.contains("drift")) p.drift = detail::to_vector(j.at("drift"), "path.drift");
      if (j.contains("step")) p.step = detail::to_vector(j.at("step"), "path.step");
      p.center = detail::get_or(j, "center", p.center, where);
      p.width = detail::get_or(j, "width", p.width, where);
      return bend_path(p);
    }
  } catch (const InputError& e) {
    throw ConfigError(std::string("path: ") + e.what());
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("path: ") + e.what());
  }
  throw ConfigError("path.type must be linear, polynomial or two_link_bend (got '" + type + "')");
}

// ---------------------------------------------------------------------------
// Discretizer / RL sections

inline DiscretizerParams load_discretizer(const Json& j) {
  DiscretizerParams p;
  p.eps = detail::get_or(j, "eps", p.eps, "discretizer");
  p.sigma = detail::get_or(j, "sigma", p.sigma, "discretizer");
  p.ds_max = detail::get_or(j, "ds_max", p.ds_max, "discretizer");
  p.candidates = detail::get_or(j, "candidates", p.candidates, "discretizer");
  return p;
}

// Reads the common keys of the rl section, then the per-algorithm
// subsection ("iql" or "iavrl") on top.
inline RLConfig load_rl(const Json& j, Algorithm algo) {
  RLConfig c = RLConfig::defaults(algo);
  auto apply = [&c](const Json& s, const std::string& where) {
    c.alpha = detail::get_or(s, "alpha", c.alpha, where);
    c.gamma = detail::get_or(s, "gamma", c.gamma, where);
    c.rho = detail::get_or(s, "rho", c.rho, where);
    c.mu = detail::get_or(s, "mu", c.mu, where);
    c.epsilon = detail::get_or(s, "epsilon", c.epsilon, where);
    c.max_episodes = detail::get_or(s, "max_episodes", c.max_episodes, where);
    c.patience = detail::get_or(s, "patience", c.patience, where);
    c.prior_scale_pos = detail::get_or(s, "prior_scale_pos", c.prior_scale_pos, where);
    c.prior_scale_neg = detail::get_or(s, "prior_scale_neg", c.prior_scale_neg, where);
    c.rng_seed = detail::get_or(s, "seed", c.rng_seed, where);
  };
  if (j.is_object()) {
    apply(j, "rl");
    const char* sub = algo == Algorithm::iql ? "iql" : "iavrl";
    if (j.contains(sub)) apply(j.at(sub), std::string("rl.") + sub);
  }
  try {
    c.validate();
  } catch (const InputError& e) {
    throw ConfigError(std::string("rl: ") + e.what());
  }
  return c;
}

// A section may be inline or a string naming a file relative to the config.
inline Json resolve_section(const Json& cfg, const char* key, const std::filesystem::path& base) {
  if (!cfg.contains(key)) return Json::object();
  const Json& v = cfg.at(key);
  if (v.is_string()) {
    std::filesystem::path p = v.get<std::string>();
    if (p.is_relative()) p = base / p;
    return read_json_file(p);
  }
  return v;
}

// ---------------------------------------------------------------------------
// Writers

inline std::string trajectory_csv(const Trajectory& t) {
  std::ostringstream os;
  const auto n = t.tau.empty() ? 0 : t.tau.front().size();
  os << "k,s,sdot,sddot,dt";
  for (Eigen::Index i = 0; i < n; ++i) os << ",tau_" << (i + 1);
  os << ",violation_flag\n";
  for (std::size_t k = 0; k < t.size(); ++k) {
    os << k << ',' << fmt_num(t.s[k]) << ',' << fmt_num(t.sdot[k]) << ',' << fmt_num(t.sddot[k]) << ','
       << fmt_num(t.dt[k]);
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << fmt_num(t.tau[k][i]);
    os << ',' << (t.violation[k] ? 1 : 0) << '\n';
  }
  return os.str();
}

inline std::string history_csv(const std::vector<std::pair<long, double>>& h) {
  std::ostringstream os;
  os << "episode,return\n";
  for (const auto& [ep, r] : h) os << ep << ',' << fmt_num(r) << '\n';
  return os.str();
}

inline Json stats_json(const TrainStats& s) {
  Json j;
  j["first_successful_episode"] = s.first_successful_episode;
  j["converged"] = s.converged;
  j["convergence_episode"] = s.convergence_episode;
  j["computation_time_s"] = s.computation_time_s;
  j["return"] = s.return_value;
  j["execution_time_s"] = s.execution_time_s;
  j["episodes"] = s.episodes;
  j["successful_episodes"] = s.successes;
  j["computation_steps"] = s.steps;
  j["exploit_ok"] = s.exploit_ok;
  j["exploit_failures"] = s.exploit_failures;
  return j;
}

inline std::string discrete_path_csv(const DiscretePath& dp) {
  std::ostringstream os;
  const auto n = dp.size() ? dp[0].q.size() : 0;
  os << "k,s";
  for (const char* pre : {"q", "dq", "ddq", "m", "c", "f", "g"})
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << pre << '_' << (i + 1);
  os << '\n';
  for (std::size_t k = 0; k < dp.size(); ++k) {
    const auto& p = dp[k];
    os << k << ',' << fmt_num(p.s);
    for (const Vector* v : {&p.q, &p.dq, &p.ddq, &p.co.m, &p.co.c, &p.co.f, &p.co.g})
      for (Eigen::Index i = 0; i < n; ++i) os << ',' << fmt_num((*v)[i]);
    os << '\n';
  }
  return os.str();
}

}  // namespace phaseplan
