#pragma once

#include <fstream>
#include <string>

#include "brmppi/costs.hpp"
#include "brmppi/episode.hpp"
#include "brmppi/json_fields.hpp"
#include "brmppi/mppi.hpp"

namespace brmppi {

/// Everything a run needs besides the scenario.
struct RunConfig {
  ControllerConfig controller;
  CostWeights weights;
  EpisodeOptions episode;

  /// Episode options that must agree with the controller.
  EpisodeOptions episode_options() const {
    EpisodeOptions e = episode;
    e.Ts = controller.Ts;
    e.bounds = controller.bounds;
    e.limits = controller.limits;
    e.hitch = controller.hitch;
    return e;
  }
};

namespace detail {

/// 2x2 matrix from [[a, b], [c, d]] or a diagonal [a, d].
inline Eigen::Matrix2d read_matrix2(const Json& v, const std::string& path) {
  if (!v.is_array()) throw SchemaError(path, "expected [d0, d1] or [[a, b], [c, d]]");
  Eigen::Matrix2d m = Eigen::Matrix2d::Zero();
  if (v.size() == 2 && v[0].is_number()) {
    m(0, 0) = as_number(v[0], path);
    m(1, 1) = as_number(v[1], path);
    return m;
  }
  if (v.size() != 2 || !v[0].is_array() || !v[1].is_array() || v[0].size() != 2 || v[1].size() != 2)
    throw SchemaError(path, "expected [d0, d1] or [[a, b], [c, d]]");
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) m(r, c) = as_number(v[r][c], path);
  return m;
}

inline void read_opt(const Json& j, const std::string& key, const std::string& path, Eigen::Matrix2d& out) {
  if (j.contains(key)) out = read_matrix2(j[key], join_path(path, key));
}

inline void read_pair(const Json& j, const std::string& key, const std::string& path, double& lo, double& hi) {
  if (!j.contains(key)) return;
  const Json& v = j[key];
  const std::string p = join_path(path, key);
  if (!v.is_array() || v.size() != 2) throw SchemaError(p, "expected [low, high]");
  lo = as_number(v[0], p);
  hi = as_number(v[1], p);
  if (!(lo < hi)) throw SchemaError(p, "low must be below high");
}

inline bool is_spd(const Eigen::Matrix2d& m) {
  return std::abs(m(0, 1) - m(1, 0)) <= 1e-12 && m(0, 0) > 0 && m.determinant() > 0;
}

}  // namespace detail

inline RunConfig parse_run_config(const nlohmann::json& j) {
  using namespace detail;
  if (!j.is_object()) throw SchemaError("<root>", "expected an object");
  RunConfig rc;
  if (j.contains("controller")) {
    const Json& c = j["controller"];
    const std::string p = "controller";
    ControllerConfig& cc = rc.controller;
    read_opt(c, "H", p, cc.H);
    read_opt(c, "S", p, cc.S);
    read_opt(c, "Ts", p, cc.Ts);
    read_opt(c, "lambda", p, cc.lambda);
    read_opt(c, "Sigma_w", p, cc.Sigma_w);
    read_opt(c, "sigma_vs", p, cc.sigma_vs);
    read_opt(c, "Sigma_alpha", p, cc.Sigma_alpha);
    read_opt(c, "alpha0", p, cc.alpha0);
    read_pair(c, "alpha_bounds", p, cc.alpha_min, cc.alpha_max);
    read_opt(c, "v_s_max", p, cc.v_s_max);
    if (c.contains("seed")) {
      if (!c["seed"].is_number_unsigned()) throw SchemaError("controller.seed", "expected a non-negative integer");
      cc.seed = c["seed"].get<std::uint64_t>();
    }
    read_opt(c, "discs_tractor", p, cc.discs_tractor);
    read_opt(c, "discs_trailer", p, cc.discs_trailer);
    read_opt(c, "barrier_margin", p, cc.barrier_margin);
    read_opt(c, "activation_threshold", p, cc.activation_threshold);
    read_opt(c, "hitch_activation", p, cc.hitch_activation);
    read_opt(c, "hitch_in_rollouts", p, cc.hitch_in_rollouts);
    read_opt(c, "fallback_penalty", p, cc.fallback_penalty);
    read_opt(c, "rate_tolerance", p, cc.rate_tolerance);
    read_opt(c, "closest_disc_rows", p, cc.closest_disc_rows);
    if (c.contains("input_bounds")) {
      const Json& b = c["input_bounds"];
      read_pair(b, "jerk", p + ".input_bounds", cc.bounds.jerk_min, cc.bounds.jerk_max);
      read_pair(b, "steer_rate", p + ".input_bounds", cc.bounds.steer_rate_min, cc.bounds.steer_rate_max);
    }
    if (c.contains("state_limits")) {
      const Json& l = c["state_limits"];
      read_opt(l, "v_max", p + ".state_limits", cc.limits.v_max);
      read_opt(l, "a_max", p + ".state_limits", cc.limits.a_max);
      read_opt(l, "delta_max", p + ".state_limits", cc.limits.delta_max);
    }
    if (c.contains("projection")) {
      const Json& q = c["projection"];
      const std::string qp = p + ".projection";
      read_opt(q, "Q1", qp, cc.projection.Q1);
      read_opt(q, "q2", qp, cc.projection.q2);
      read_opt(q, "rho", qp, cc.projection.rho);
      read_opt(q, "jitter", qp, cc.projection.jitter);
      read_pair(q, "u_alpha_bounds", qp, cc.projection.u_alpha_min, cc.projection.u_alpha_max);
      if (!is_spd(cc.projection.Q1)) throw SchemaError(qp + ".Q1", "must be symmetric positive definite");
      if (!(cc.projection.q2 > 0)) throw SchemaError(qp + ".q2", "must be positive");
      if (!(cc.projection.rho >= 0)) throw SchemaError(qp + ".rho", "must be non-negative");
    }
    if (c.contains("hitch")) {
      const Json& h = c["hitch"];
      const std::string hp = p + ".hitch";
      read_opt(h, "enabled", hp, cc.hitch.enabled);
      read_opt(h, "delta_bar", hp, cc.hitch.delta_bar);
      read_opt(h, "kappa", hp, cc.hitch.kappa);
      read_opt(h, "Qh", hp, cc.hitch.Qh);
      read_opt(h, "alpha_h", hp, cc.hitch.alpha_h);
      read_opt(h, "eps", hp, cc.hitch.eps);
      read_opt(h, "lift_order", hp, cc.hitch.lift_order);
      try {
        cc.hitch.validate();
      } catch (const std::invalid_argument& e) {
        throw SchemaError(hp, e.what());
      }
    }
    if (cc.H < 1) throw SchemaError("controller.H", "must be >= 1");
    if (cc.S < 1) throw SchemaError("controller.S", "must be >= 1");
    if (!(cc.Ts > 0)) throw SchemaError("controller.Ts", "must be positive");
    if (!(cc.lambda > 0)) throw SchemaError("controller.lambda", "must be positive");
    if (!is_spd(cc.Sigma_w)) throw SchemaError("controller.Sigma_w", "must be symmetric positive definite");
    if (cc.Sigma_alpha < 0) throw SchemaError("controller.Sigma_alpha", "must be non-negative");
    if (cc.sigma_vs < 0) throw SchemaError("controller.sigma_vs", "must be non-negative");
    try {
      cc.validate();
    } catch (const std::invalid_argument& e) {
      throw SchemaError("controller", e.what());
    }
  }
  if (j.contains("weights")) {
    const Json& w = j["weights"];
    const std::string p = "weights";
    CostWeights& cw = rc.weights;
    read_opt(w, "q_c", p, cw.q_c);
    read_opt(w, "q_l", p, cw.q_l);
    read_opt(w, "Q_theta", p, cw.Q_theta);
    read_opt(w, "R_u", p, cw.R_u);
    read_opt(w, "q_v", p, cw.q_v);
    read_opt(w, "v_s_bar", p, cw.v_s_bar);
    read_opt(w, "w_alpha", p, cw.w_alpha);
    read_opt(w, "h_buf", p, cw.h_buf);
    read_opt(w, "w_collision", p, cw.w_collision);
    read_opt(w, "stop_gain", p, cw.stop_gain);
    read_opt(w, "q_terminal_speed", p, cw.q_terminal_speed);
    for (const auto& [key, value] : w.items())
      if (value.is_number() && value.get<double>() < 0) throw SchemaError(p + "." + key, "must be non-negative");
  }
  if (j.contains("episode")) {
    const Json& e = j["episode"];
    const std::string p = "episode";
    EpisodeOptions& eo = rc.episode;
    read_opt(e, "hitch_filter", p, eo.hitch_filter);
    read_opt(e, "disturbance", p, eo.disturbance);
    read_opt(e, "disturbance_jerk_std", p, eo.disturbance_jerk_std);
    read_opt(e, "disturbance_steer_std", p, eo.disturbance_steer_std);
    read_opt(e, "jackknife_margin", p, eo.jackknife_margin);
    read_opt(e, "progress_window", p, eo.progress_window);
    read_opt(e, "cusp_distance", p, eo.cusp_distance);
    read_opt(e, "cusp_speed", p, eo.cusp_speed);
    read_opt(e, "clearance_body_spacing", p, eo.clearance.body_spacing);
    read_opt(e, "clearance_obstacle_step_deg", p, eo.clearance.obstacle_step_deg);
    if (!(eo.progress_window > 0)) throw SchemaError("episode.progress_window", "must be positive");
    if (!(eo.clearance.body_spacing > 0)) throw SchemaError("episode.clearance_body_spacing", "must be positive");
    if (!(eo.clearance.obstacle_step_deg > 0))
      throw SchemaError("episode.clearance_obstacle_step_deg", "must be positive");
  }
  return rc;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("<root>", std::string("invalid JSON: ") + e.what());
  }
  return parse_run_config(j);
}

}  // namespace brmppi
