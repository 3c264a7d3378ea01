#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "brmppi/barriers.hpp"
#include "brmppi/reference_path.hpp"
#include "brmppi/types.hpp"

namespace brmppi {

struct CostWeights {
  double q_c{4.0};  ///< contouring error
  double q_l{4.0};  ///< lag error
  Eigen::Matrix2d Q_theta{4.0 * Eigen::Matrix2d::Identity()};
  Eigen::Matrix2d R_u{Eigen::Vector2d(0.05, 0.5).asDiagonal()};
  double q_v{1.0};        ///< progress-rate tracking
  double v_s_bar{1.2};    ///< desired progress rate [m/s]
  double w_alpha{20.0};   ///< positive barrier rates inside the buffer
  double h_buf{0.5};      ///< buffer threshold on the lifted barrier
  double w_collision{50.0};
  /// Caps the desired progress rate at stop_gain * (remaining length) so the
  /// vehicle comes to rest at the path end. 0 disables the cap.
  double stop_gain{0.6};
  /// Weight on v^2 at the end of the horizon when the progress has reached the path end.
  double q_terminal_speed{0.0};
};

struct ProgressState {
  double s{0};
  double v_s{0};
};

struct ContourErrors {
  double contour{0};
  double lag{0};
};

/// Contouring and lag errors with respect to the reference point, measured in
/// the frame of the reference tractor heading.
inline ContourErrors contour_errors(double px, double py, const PathPoint& ref) {
  const double s = std::sin(ref.theta1), c = std::cos(ref.theta1);
  const double dx = px - ref.x, dy = py - ref.y;
  return {s * dx - c * dy, -c * dx - s * dy};
}

inline double desired_progress_rate(const CostWeights& w, double s, double length) {
  if (w.stop_gain <= 0) return w.v_s_bar;
  return std::min(w.v_s_bar, w.stop_gain * std::max(0.0, length - s));
}

/// State part of the contouring cost: contour, lag and heading terms.
inline double contouring_state_cost(const State& x, const PathPoint& ref, const CostWeights& w) {
  const ContourErrors e = contour_errors(x.px, x.py, ref);
  const Eigen::Vector2d eh(wrap_angle(x.theta1 - ref.theta1), wrap_angle(x.theta2 - ref.theta2));
  return w.q_c * e.contour * e.contour + w.q_l * e.lag * e.lag + eh.dot(w.Q_theta * eh);
}

inline double contouring_stage_cost(const State& x, const ControlInput& u, const ProgressState& prog,
                                    const CostWeights& w, const ReferencePath& path) {
  const PathPoint ref = path.query(prog.s);
  const Eigen::Vector2d uv = u.vec();
  const double dv = desired_progress_rate(w, prog.s, path.length()) - prog.v_s;
  return contouring_state_cost(x, ref, w) + uv.dot(w.R_u * uv) + w.q_v * dv * dv;
}

/// Penalizes non-negative barrier rates on constraints inside the buffer zone.
inline double buffer_alpha_cost(std::span<const double> alpha, std::span<const double> h_values,
                                const CostWeights& w) {
  double sum = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i)
    if (h_values[i] < w.h_buf) sum += std::max(0.0, alpha[i]);
  return w.w_alpha * sum;
}

/// Penetration-depth surrogate for the collision-cost baseline.
inline double collision_penalty(const State& x, const VehicleGeometry& g, std::span<const DiscSpec> layout,
                                const std::array<BodyBound, 2>& bounds, std::span<const ObstaclePose> obstacles,
                                double w_collision, double margin = 0.0) {
  double sum = 0.0;
  const double c1 = std::cos(x.theta1), s1 = std::sin(x.theta1);
  const double c2 = std::cos(x.theta2), s2 = std::sin(x.theta2);
  // near[b] bit o: obstacle o may touch some disc of body b
  unsigned long near[2] = {0, 0};
  for (std::size_t b = 0; b < 2; ++b) {
    if (!bounds[b].present) continue;
    const auto c = disc_center(x, c1, s1, c2, s2, g, bounds[b].mid);
    for (std::size_t o = 0; o < obstacles.size() && o < 64; ++o)
      if (!beyond_level(obstacles[o], c.x, c.y, bounds[b].mid.radius + margin, 1.0, 0.0)) near[b] |= 1ul << o;
  }
  for (const auto& d : layout) {
    const unsigned long mask = obstacles.size() > 64 ? ~0ul : near[d.body == Body::kTractor ? 0 : 1];
    if (!mask) continue;
    const auto c = disc_center(x, c1, s1, c2, s2, g, d);
    for (std::size_t o = 0; o < obstacles.size(); ++o) {
      if (o < 64 && !(mask >> o & 1ul)) continue;
      const auto& ob = obstacles[o];
      if (beyond_level(ob, c.x, c.y, d.radius + margin, 1.0, 0.0)) continue;
      sum += std::max(0.0, -superellipse_value<double>(ob, c.x, c.y, d.radius + margin));
    }
  }
  return w_collision * sum;
}

inline double collision_penalty(const State& x, const VehicleGeometry& g, std::span<const DiscSpec> layout,
                                std::span<const ObstaclePose> obstacles, double w_collision,
                                double margin = 0.0) {
  return collision_penalty(x, g, layout, body_bounds(layout), obstacles, w_collision, margin);
}

}  // namespace brmppi
