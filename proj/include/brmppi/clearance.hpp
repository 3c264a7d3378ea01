#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "brmppi/barriers.hpp"
#include "brmppi/types.hpp"

namespace brmppi {

struct ClearanceOptions {
  double body_spacing{0.1};         ///< body boundary sample spacing [m]
  double obstacle_step_deg{1.0};    ///< super-ellipse boundary parameter step [deg]
};

/// Oriented rectangle: center, unit heading, half length and half width.
struct Rect {
  double cx{0}, cy{0};
  double c{1}, s{0};
  double half_length{0}, half_width{0};

  bool contains(double px, double py) const {
    const double dx = px - cx, dy = py - cy;
    return std::abs(c * dx + s * dy) < half_length && std::abs(-s * dx + c * dy) < half_width;
  }
};

struct Point2 {
  double x{0}, y{0};
};

/// Tractor and trailer bodies. The tractor spans from the rear overhang to the
/// front overhang along theta1; the trailer spans from the hitch point back to
/// its rear overhang along theta2.
inline std::array<Rect, 2> body_rectangles(const State& x, const VehicleGeometry& g) {
  const double c1 = std::cos(x.theta1), s1 = std::sin(x.theta1);
  const double c2 = std::cos(x.theta2), s2 = std::sin(x.theta2);
  const double lt = g.tractor_length(), lr = g.trailer_length();
  const double mid1 = -g.tractor_overhang_rear + 0.5 * lt;
  const double hx = x.px - g.lh * c1, hy = x.py - g.lh * s1;
  return {Rect{x.px + mid1 * c1, x.py + mid1 * s1, c1, s1, 0.5 * lt, 0.5 * g.w_tractor},
          Rect{hx - 0.5 * lr * c2, hy - 0.5 * lr * s2, c2, s2, 0.5 * lr, 0.5 * g.w_trailer}};
}

inline std::vector<Point2> rect_boundary(const Rect& r, double spacing) {
  std::vector<Point2> out;
  const std::array<std::array<double, 2>, 4> corners = {{{r.half_length, r.half_width},
                                                         {-r.half_length, r.half_width},
                                                         {-r.half_length, -r.half_width},
                                                         {r.half_length, -r.half_width}}};
  for (std::size_t k = 0; k < 4; ++k) {
    const auto& a = corners[k];
    const auto& b = corners[(k + 1) % 4];
    const double len = std::hypot(b[0] - a[0], b[1] - a[1]);
    const int n = std::max(1, static_cast<int>(std::ceil(len / spacing)));
    for (int i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / n;
      const double lx = a[0] + t * (b[0] - a[0]), ly = a[1] + t * (b[1] - a[1]);
      out.push_back({r.cx + r.c * lx - r.s * ly, r.cy + r.s * lx + r.c * ly});
    }
  }
  return out;
}

/// Points of the (uninflated) super-ellipse boundary at uniform steps of the
/// angle parameter t: (a sgn(cos t)|cos t|^(2/e), b sgn(sin t)|sin t|^(2/e)).
inline std::vector<Point2> superellipse_boundary(const ObstaclePose& o, double step_deg) {
  const int n = std::max(4, static_cast<int>(std::lround(360.0 / step_deg)));
  const double p = 2.0 / o.exponent;
  std::vector<Point2> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double t = 2.0 * std::numbers::pi * i / n;
    const double ct = std::cos(t), st = std::sin(t);
    const double lx = o.ax * std::copysign(std::pow(std::abs(ct), p), ct);
    const double ly = o.ay * std::copysign(std::pow(std::abs(st), p), st);
    out.push_back({o.cx + o.cos_t * lx - o.sin_t * ly, o.cy + o.sin_t * lx + o.cos_t * ly});
  }
  return out;
}

namespace detail {

inline double min_distance(const Point2& p, std::span<const Point2> set) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& q : set) best = std::min(best, (p.x - q.x) * (p.x - q.x) + (p.y - q.y) * (p.y - q.y));
  return std::sqrt(best);
}

}  // namespace detail

/// Signed clearance between the vehicle bodies and the obstacles. Without
/// contact it is the minimum distance between the sampled boundaries. With
/// contact it is minus the penetration depth: the largest distance from a
/// body sample inside an obstacle to that obstacle's boundary, or from an
/// obstacle sample inside a body to the body boundary. Returns +inf without obstacles.
inline double clearance(const State& x, const VehicleGeometry& g, std::span<const ObstaclePose> obstacles,
                        const ClearanceOptions& opt = {}) {
  if (obstacles.empty()) return std::numeric_limits<double>::infinity();
  const auto rects = body_rectangles(x, g);
  std::vector<Point2> body;
  std::array<std::vector<Point2>, 2> per_body;
  for (std::size_t k = 0; k < 2; ++k) {
    per_body[k] = rect_boundary(rects[k], opt.body_spacing);
    body.insert(body.end(), per_body[k].begin(), per_body[k].end());
  }
  double min_dist = std::numeric_limits<double>::infinity();
  double depth = 0.0;
  bool contact = false;
  for (const auto& o : obstacles) {
    const auto boundary = superellipse_boundary(o, opt.obstacle_step_deg);
    for (const auto& p : body) {
      const double d = detail::min_distance(p, boundary);
      if (superellipse_value<double>(o, p.x, p.y, 0.0) < 0) {
        contact = true;
        depth = std::max(depth, d);
      } else {
        min_dist = std::min(min_dist, d);
      }
    }
    for (const auto& q : boundary) {
      for (std::size_t k = 0; k < 2; ++k) {
        if (!rects[k].contains(q.x, q.y)) continue;
        contact = true;
        depth = std::max(depth, detail::min_distance(q, per_body[k]));
      }
    }
  }
  return contact ? -depth : min_dist;
}

}  // namespace brmppi
