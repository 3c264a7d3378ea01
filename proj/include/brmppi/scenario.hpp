#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "brmppi/barriers.hpp"
#include "brmppi/clearance.hpp"
#include "brmppi/json_fields.hpp"
#include "brmppi/reference_path.hpp"
#include "brmppi/types.hpp"

namespace brmppi {

struct GoalSpec {
  double x{0}, y{0};
  double theta1{0}, theta2{0};
  double position_tol{0.3};
  double heading_tol{0.1};
  double speed_tol{0.05};

  bool reached(const State& s) const {
    return std::hypot(s.px - x, s.py - y) <= position_tol &&
           std::abs(wrap_angle(s.theta1 - theta1)) <= heading_tol &&
           std::abs(wrap_angle(s.theta2 - theta2)) <= heading_tol && std::abs(s.v) < speed_tol;
  }
};

struct Scenario {
  std::string name;
  VehicleGeometry geometry;
  State initial_state;
  GoalSpec goal;
  std::vector<ObstacleSpec> obstacles;
  std::vector<Waypoint> reference;
  Direction direction{Direction::kForward};
  double max_episode_time{60.0};

  /// Obstacle poses at absolute time t.
  std::vector<ObstaclePose> obstacles_at(double t) const {
    std::vector<ObstaclePose> out;
    out.reserve(obstacles.size());
    for (const auto& o : obstacles) out.push_back(pose_at(o, t));
    return out;
  }

  /// Checks the invariants not already enforced while parsing.
  void validate() const {
    try {
      geometry.validate();
    } catch (const std::invalid_argument& e) {
      throw SchemaError("geometry", e.what());
    }
    if (!is_finite(initial_state)) throw SchemaError("initial_state", "non-finite value");
    for (std::size_t i = 0; i < obstacles.size(); ++i) {
      try {
        obstacles[i].validate();
      } catch (const std::invalid_argument& e) {
        throw SchemaError("obstacles[" + std::to_string(i) + "]", e.what());
      }
    }
    if (!(goal.position_tol > 0) || !(goal.heading_tol > 0) || !(goal.speed_tol > 0))
      throw SchemaError("goal", "tolerances must be positive");
    if (!(max_episode_time > 0)) throw SchemaError("max_episode_time", "must be positive");
    if (reference.size() < 4) throw SchemaError("reference", "needs at least 4 waypoints");
    const auto at0 = obstacles_at(0.0);
    if (!(clearance(initial_state, geometry, at0) > 0))
      throw SchemaError("initial_state", "vehicle starts in collision with an obstacle");
  }
};

namespace detail {

inline VehicleGeometry parse_geometry(const Json& j, const std::string& path) {
  VehicleGeometry g;
  read_opt(j, "l1", path, g.l1);
  read_opt(j, "l2", path, g.l2);
  read_opt(j, "lh", path, g.lh);
  read_opt(j, "w_tractor", path, g.w_tractor);
  read_opt(j, "w_trailer", path, g.w_trailer);
  read_opt(j, "tractor_overhang_front", path, g.tractor_overhang_front);
  read_opt(j, "tractor_overhang_rear", path, g.tractor_overhang_rear);
  read_opt(j, "trailer_overhang_rear", path, g.trailer_overhang_rear);
  return g;
}

inline State parse_state(const Json& j, const std::string& path) {
  State s;
  s.px = number(j, "px", path);
  s.py = number(j, "py", path);
  read_opt(j, "v", path, s.v);
  read_opt(j, "a", path, s.a);
  read_opt(j, "theta1", path, s.theta1);
  s.theta2 = s.theta1;
  read_opt(j, "theta2", path, s.theta2);
  read_opt(j, "delta", path, s.delta);
  return s;
}

inline ObstacleSpec parse_obstacle(const Json& j, const std::string& path) {
  ObstacleSpec o;
  o.name = path;
  read_opt(j, "name", path, o.name);
  o.cx = number(j, "cx", path);
  o.cy = number(j, "cy", path);
  o.ax = number(j, "ax", path);
  o.ay = number(j, "ay", path);
  if (!(o.ax > 0)) throw SchemaError(path + ".ax", "must be positive");
  if (!(o.ay > 0)) throw SchemaError(path + ".ay", "must be positive");
  read_opt(j, "theta", path, o.theta);
  read_opt(j, "exponent", path, o.exponent);
  if (o.exponent < 2 || o.exponent % 2 != 0) throw SchemaError(path + ".exponent", "must be an even integer >= 2");
  read_opt(j, "dynamic", path, o.dynamic);
  if (j.contains("motion")) {
    const Json& m = j["motion"];
    const std::string mp = path + ".motion";
    if (!m.is_array()) throw SchemaError(mp, "expected an array of [t, cx, cy]");
    for (std::size_t i = 0; i < m.size(); ++i) {
      const std::string ip = mp + "[" + std::to_string(i) + "]";
      if (!m[i].is_array() || m[i].size() != 3) throw SchemaError(ip, "expected [t, cx, cy]");
      o.motion.push_back({as_number(m[i][0], ip), as_number(m[i][1], ip), as_number(m[i][2], ip)});
      if (i > 0 && !(o.motion[i].t > o.motion[i - 1].t)) throw SchemaError(ip, "times must be strictly increasing");
    }
    if (!m.empty()) o.dynamic = true;
  }
  if (o.dynamic && o.motion.empty()) throw SchemaError(path + ".motion", "dynamic obstacle needs a motion table");
  return o;
}

inline std::vector<Waypoint> parse_inline_waypoints(const Json& arr, const std::string& path, Direction dir) {
  if (!arr.is_array()) throw SchemaError(path, "expected an array");
  std::vector<Waypoint> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string ip = path + "[" + std::to_string(i) + "]";
    const Json& w = arr[i];
    Waypoint wp;
    wp.direction = dir;
    if (w.is_array()) {
      if (w.size() < 2 || w.size() > 4) throw SchemaError(ip, "expected [x, y] or [x, y, theta1, theta2]");
      wp.x = as_number(w[0], ip);
      wp.y = as_number(w[1], ip);
      if (w.size() >= 3) wp.theta1 = as_number(w[2], ip);
      if (w.size() == 4) wp.theta2 = as_number(w[3], ip);
    } else {
      wp.x = number(w, "x", ip);
      wp.y = number(w, "y", ip);
      if (w.contains("theta1")) wp.theta1 = number(w, "theta1", ip);
      if (w.contains("theta2")) wp.theta2 = number(w, "theta2", ip);
      if (w.contains("direction")) {
        std::string d;
        read_opt(w, "direction", ip, d);
        try {
          wp.direction = parse_direction(d);
        } catch (const std::invalid_argument& e) {
          throw SchemaError(ip + ".direction", e.what());
        }
      }
    }
    out.push_back(wp);
  }
  return out;
}

}  // namespace detail

/// Parses a scenario document. Relative waypoint file paths resolve against `base_dir`.
inline Scenario parse_scenario(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  using namespace detail;
  if (!j.is_object()) throw SchemaError("<root>", "expected an object");
  Scenario sc;
  read_opt(j, "name", "", sc.name);
  std::string dir = "forward";
  read_opt(j, "direction", "", dir);
  try {
    sc.direction = parse_direction(dir);
  } catch (const std::invalid_argument& e) {
    throw SchemaError("direction", e.what());
  }
  if (j.contains("geometry")) sc.geometry = parse_geometry(j["geometry"], "geometry");
  sc.initial_state = parse_state(require(j, "initial_state", ""), "initial_state");
  read_opt(j, "max_episode_time", "", sc.max_episode_time);

  if (j.contains("obstacles")) {
    const Json& arr = j["obstacles"];
    if (!arr.is_array()) throw SchemaError("obstacles", "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i)
      sc.obstacles.push_back(parse_obstacle(arr[i], "obstacles[" + std::to_string(i) + "]"));
  }

  const Json& ref = require(j, "reference", "");
  if (ref.is_array()) {
    sc.reference = parse_inline_waypoints(ref, "reference", sc.direction);
  } else if (ref.is_object() && ref.contains("file")) {
    std::string file;
    read_opt(ref, "file", "reference", file);
    std::filesystem::path p(file);
    if (p.is_relative()) p = base_dir / p;
    try {
      sc.reference = read_waypoints(p.string());
    } catch (const std::exception& e) {
      throw SchemaError("reference.file", e.what());
    }
  } else if (ref.is_object() && ref.contains("waypoints")) {
    sc.reference = parse_inline_waypoints(ref["waypoints"], "reference.waypoints", sc.direction);
  } else {
    throw SchemaError("reference", "expected a waypoint array or an object with 'file' or 'waypoints'");
  }

  // The goal defaults to the final reference pose.
  if (!sc.reference.empty()) {
    const Waypoint& last = sc.reference.back();
    sc.goal.x = last.x;
    sc.goal.y = last.y;
    try {
      const auto segments = split_at_cusps(sc.reference);
      if (segments.back().size() >= 4) {
        const PathPoint end = fit_path(segments.back()).query(1e300);
        sc.goal.theta1 = end.theta1;
        sc.goal.theta2 = end.theta2;
      }
    } catch (const std::invalid_argument& e) {
      throw SchemaError("reference", e.what());
    }
  }
  if (j.contains("goal")) {
    const Json& g = j["goal"];
    read_opt(g, "x", "goal", sc.goal.x);
    read_opt(g, "y", "goal", sc.goal.y);
    if (g.contains("theta1")) {
      read_opt(g, "theta1", "goal", sc.goal.theta1);
      sc.goal.theta2 = sc.goal.theta1;
    }
    read_opt(g, "theta2", "goal", sc.goal.theta2);
    read_opt(g, "position_tol", "goal", sc.goal.position_tol);
    read_opt(g, "heading_tol", "goal", sc.goal.heading_tol);
    read_opt(g, "speed_tol", "goal", sc.goal.speed_tol);
  }
  sc.validate();
  return sc;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("<root>", std::string("invalid JSON: ") + e.what());
  }
  return parse_scenario(j, std::filesystem::path(path).parent_path());
}

}  // namespace brmppi
