#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

#include "brmppi/dual.hpp"
#include "brmppi/dynamics.hpp"
#include "brmppi/types.hpp"

namespace brmppi {

struct MotionSample {
  double t{0};
  double cx{0};
  double cy{0};
};

/// Super-ellipse obstacle. `motion`, when non-empty, overrides the center
/// with a piecewise-linear trajectory in time.
struct ObstacleSpec {
  std::string name;
  double cx{0}, cy{0};
  double ax{1}, ay{1};
  double theta{0};
  int exponent{2};
  bool dynamic{false};
  std::vector<MotionSample> motion;

  void validate() const {
    const std::string who = "obstacle '" + name + "'";
    if (!(ax > 0) || !(ay > 0)) throw std::invalid_argument(who + ": semi-axes must be positive");
    if (exponent < 2 || exponent % 2 != 0)
      throw std::invalid_argument(who + ": exponent must be an even integer >= 2");
    if (!std::isfinite(cx) || !std::isfinite(cy) || !std::isfinite(theta))
      throw std::invalid_argument(who + ": non-finite pose");
    if (dynamic && motion.empty()) throw std::invalid_argument(who + ": dynamic obstacle needs a motion table");
    for (std::size_t i = 1; i < motion.size(); ++i)
      if (!(motion[i].t > motion[i - 1].t))
        throw std::invalid_argument(who + ": motion times must be strictly increasing");
  }
};

/// Instantaneous obstacle pose, cheap to copy into rollouts.
struct ObstaclePose {
  double cx{0}, cy{0};
  double ax{1}, ay{1};
  double cos_t{1}, sin_t{0};
  int exponent{2};

  static ObstaclePose from(const ObstacleSpec& o, double cx, double cy) {
    return {cx, cy, o.ax, o.ay, std::cos(o.theta), std::sin(o.theta), o.exponent};
  }
};

/// Pose at absolute time t: linear interpolation of the motion table, held
/// constant outside it.
inline ObstaclePose pose_at(const ObstacleSpec& o, double t) {
  if (o.motion.empty()) return ObstaclePose::from(o, o.cx, o.cy);
  const auto& m = o.motion;
  if (t <= m.front().t) return ObstaclePose::from(o, m.front().cx, m.front().cy);
  if (t >= m.back().t) return ObstaclePose::from(o, m.back().cx, m.back().cy);
  std::size_t i = 1;
  while (m[i].t < t) ++i;
  const double w = (t - m[i - 1].t) / (m[i].t - m[i - 1].t);
  return ObstaclePose::from(o, m[i - 1].cx + w * (m[i].cx - m[i - 1].cx),
                            m[i - 1].cy + w * (m[i].cy - m[i - 1].cy));
}

/// Obstacle poses for prediction steps tau = 0..H starting at control step k.
/// Result is indexed [tau][obstacle].
inline std::vector<std::vector<ObstaclePose>> predict_obstacles(
    const std::vector<ObstacleSpec>& obstacles, long k, int H, double Ts) {
  std::vector<std::vector<ObstaclePose>> out(static_cast<std::size_t>(H) + 1);
  for (int tau = 0; tau <= H; ++tau) {
    const double t = static_cast<double>(k + tau) * Ts;
    auto& row = out[static_cast<std::size_t>(tau)];
    row.reserve(obstacles.size());
    for (const auto& o : obstacles) row.push_back(pose_at(o, t));
  }
  return out;
}

namespace detail {
template <class T>
T ipow(const T& x, int n) {
  T r(1.0);
  for (int i = 0; i < n; ++i) r = r * x;
  return r;
}
}  // namespace detail

/// Inflated super-ellipse barrier: positive outside, zero on the boundary,
/// negative inside.
template <class T>
T superellipse_value(const ObstaclePose& o, const T& px, const T& py, double r_inflate) {
  const T dx = px - o.cx, dy = py - o.cy;
  const T xb = o.cos_t * dx + o.sin_t * dy;
  const T yb = -o.sin_t * dx + o.cos_t * dy;
  return detail::ipow(T(xb / (o.ax + r_inflate)), o.exponent) +
         detail::ipow(T(yb / (o.ay + r_inflate)), o.exponent) - 1.0;
}

inline double superellipse_value(const ObstacleSpec& o, double px, double py, double r_inflate) {
  return superellipse_value<double>(ObstaclePose::from(o, o.cx, o.cy), px, py, r_inflate);
}

/// Scale k = (1 + level)^(1/e): outside the box |xb| <= k A, |yb| <= k B the
/// inflated barrier is at least `level`.
inline double level_scale(double level, int exponent) {
  return level <= 0 ? 1.0 : std::pow(1.0 + level, 1.0 / exponent);
}

/// True when (px, py) is outside the level box of `o` grown by `slack` on every side.
inline bool beyond_level(const ObstaclePose& o, double px, double py, double r_inflate, double k, double slack) {
  const double dx = px - o.cx, dy = py - o.cy;
  const double xb = o.cos_t * dx + o.sin_t * dy;
  const double yb = -o.sin_t * dx + o.cos_t * dy;
  return std::abs(xb) > k * (o.ax + r_inflate) + slack || std::abs(yb) > k * (o.ay + r_inflate) + slack;
}

// ---------------------------------------------------------------------------
// Footprint discs

enum class Body { kTractor, kTrailer };

/// Disc placement relative to its body. For the tractor `offset` is measured
/// forward from the rear axle along theta1; for the trailer it is measured
/// backward from the hitch point along theta2.
struct DiscSpec {
  Body body{Body::kTractor};
  double offset{0};
  double radius{1};
};

struct Disc {
  double cx{0}, cy{0}, r{0};
};

inline std::vector<DiscSpec> footprint_layout(const VehicleGeometry& g, int n_tractor, int n_trailer) {
  if (n_tractor < 1 || n_trailer < 1) throw std::invalid_argument("footprint: disc counts must be >= 1");
  std::vector<DiscSpec> out;
  const double lt = g.tractor_length();
  for (int i = 0; i < n_tractor; ++i)
    out.push_back({Body::kTractor, -g.tractor_overhang_rear + (i + 0.5) * lt / n_tractor, 0.5 * g.w_tractor});
  const double lr = g.trailer_length();
  for (int i = 0; i < n_trailer; ++i)
    out.push_back({Body::kTrailer, (i + 0.5) * lr / n_trailer, 0.5 * g.w_trailer});
  return out;
}

/// Circle around all discs of one body: a disc spec at the body's middle offset
/// whose radius reaches every disc edge.
struct BodyBound {
  DiscSpec mid;
  bool present{false};
};

inline std::array<BodyBound, 2> body_bounds(std::span<const DiscSpec> layout) {
  std::array<BodyBound, 2> out;
  for (int b = 0; b < 2; ++b) {
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& d : layout)
      if (static_cast<int>(d.body) == b) {
        lo = std::min(lo, d.offset);
        hi = std::max(hi, d.offset);
      }
    if (lo > hi) continue;
    const double m = 0.5 * (lo + hi);
    double reach = 0.0;
    for (const auto& d : layout)
      if (static_cast<int>(d.body) == b) reach = std::max(reach, std::abs(d.offset - m) + d.radius);
    out[static_cast<std::size_t>(b)] = {{static_cast<Body>(b), m, reach}, true};
  }
  return out;
}

template <class T>
struct DiscPoint {
  T x, y;
};

/// Disc center from precomputed heading cosines and sines.
template <class T>
DiscPoint<T> disc_center(const StateT<T>& x, const T& c1, const T& s1, const T& c2, const T& s2,
                         const VehicleGeometry& g, const DiscSpec& d) {
  if (d.body == Body::kTractor) return {x.px + d.offset * c1, x.py + d.offset * s1};
  return {x.px - g.lh * c1 - d.offset * c2, x.py - g.lh * s1 - d.offset * s2};
}

template <class T>
DiscPoint<T> disc_center(const StateT<T>& x, const VehicleGeometry& g, const DiscSpec& d) {
  using std::cos, std::sin;
  return disc_center(x, T(cos(x.theta1)), T(sin(x.theta1)), T(cos(x.theta2)), T(sin(x.theta2)), g, d);
}

inline std::vector<Disc> footprint_discs(const State& x, const VehicleGeometry& g, int n_tractor,
                                         int n_trailer) {
  std::vector<Disc> out;
  for (const auto& d : footprint_layout(g, n_tractor, n_trailer)) {
    const auto c = disc_center(x, g, d);
    out.push_back({c.x, c.y, d.radius});
  }
  return out;
}

/// Trigonometric and yaw-rate terms shared by every disc of one state.
template <class T>
struct BodyTerms {
  T c1, s1, c2, s2;
  T tan_delta;
  T w1, w1_dot;  ///< tractor yaw rate and its derivative along the drift
  T w2, w2_dot;  ///< trailer yaw rate and its derivative along the drift
};

template <class T>
BodyTerms<T> body_terms(const StateT<T>& x, const VehicleGeometry& g) {
  using std::cos, std::sin, std::tan;
  BodyTerms<T> t;
  t.c1 = cos(x.theta1);
  t.s1 = sin(x.theta1);
  t.c2 = cos(x.theta2);
  t.s2 = sin(x.theta2);
  t.tan_delta = tan(x.delta);
  t.w1 = x.v * t.tan_delta / g.l1;
  t.w1_dot = x.a * t.tan_delta / g.l1;
  // sin/cos of theta1 - theta2 from the individual headings.
  const T sp = t.s1 * t.c2 - t.c1 * t.s2;
  const T cp = t.c1 * t.c2 + t.s1 * t.s2;
  const double k = g.lh / g.l1;
  const T shape = sp - k * cp * t.tan_delta;
  t.w2 = x.v / g.l2 * shape;
  t.w2_dot = x.a / g.l2 * shape + x.v / g.l2 * (cp + k * sp * t.tan_delta) * (t.w1 - t.w2);
  return t;
}

/// Disc center with its first and second time derivatives along the drift
/// (zero jerk and steering rate).
template <class T>
struct DiscMotion {
  T x, y, vx, vy, ax, ay;
};

template <class T>
DiscMotion<T> disc_motion(const StateT<T>& x, const BodyTerms<T>& bt, const VehicleGeometry& g,
                          const DiscSpec& d) {
  const T& c1 = bt.c1;
  const T& s1 = bt.s1;
  DiscMotion<T> m;
  if (d.body == Body::kTractor) {
    // P = p + d e1
    const T along = x.a - d.offset * bt.w1 * bt.w1;
    const T across = x.v * bt.w1 + d.offset * bt.w1_dot;
    const T vn = d.offset * bt.w1;
    m.x = x.px + d.offset * c1;
    m.y = x.py + d.offset * s1;
    m.vx = x.v * c1 - vn * s1;
    m.vy = x.v * s1 + vn * c1;
    m.ax = along * c1 - across * s1;
    m.ay = along * s1 + across * c1;
    return m;
  }
  // Q = p - lh e1 - d e2; components in the (e1, n1) and (e2, n2) frames.
  const T& c2 = bt.c2;
  const T& s2 = bt.s2;
  const T vel1_e = x.v, vel1_n = -g.lh * bt.w1, vel2_n = -d.offset * bt.w2;
  const T acc1_e = x.a + g.lh * bt.w1 * bt.w1;
  const T acc1_n = x.v * bt.w1 - g.lh * bt.w1_dot;
  const T acc2_e = d.offset * bt.w2 * bt.w2;
  const T acc2_n = -d.offset * bt.w2_dot;
  m.x = x.px - g.lh * c1 - d.offset * c2;
  m.y = x.py - g.lh * s1 - d.offset * s2;
  m.vx = vel1_e * c1 - vel1_n * s1 - vel2_n * s2;
  m.vy = vel1_e * s1 + vel1_n * c1 + vel2_n * c2;
  m.ax = acc1_e * c1 - acc1_n * s1 + acc2_e * c2 - acc2_n * s2;
  m.ay = acc1_e * s1 + acc1_n * c1 + acc2_e * s2 + acc2_n * c2;
  return m;
}

template <class T>
DiscMotion<T> disc_motion(const StateT<T>& x, const VehicleGeometry& g, const DiscSpec& d) {
  return disc_motion(x, body_terms(x, g), g, d);
}

/// Disc motion is affine in the disc offset, so one body needs two evaluations.
template <class T>
struct BodyMotion {
  DiscMotion<T> base, slope;
  DiscMotion<T> at(double d) const {
    return {base.x + d * slope.x,   base.y + d * slope.y,   base.vx + d * slope.vx,
            base.vy + d * slope.vy, base.ax + d * slope.ax, base.ay + d * slope.ay};
  }
};

template <class T>
BodyMotion<T> body_motion(const StateT<T>& x, const BodyTerms<T>& bt, const VehicleGeometry& g, Body body) {
  const DiscMotion<T> m0 = disc_motion(x, bt, g, DiscSpec{body, 0.0, 0.0});
  const DiscMotion<T> m1 = disc_motion(x, bt, g, DiscSpec{body, 1.0, 0.0});
  return {m0, {m1.x - m0.x, m1.y - m0.y, m1.vx - m0.vx, m1.vy - m0.vy, m1.ax - m0.ax, m1.ay - m0.ay}};
}

/// Second-order Taylor lift b + Ts*b' + Ts^2/2*b'' of the super-ellipse
/// barrier at a moving point. b' and b'' are Lie derivatives along the drift,
/// obtained by the chain rule through the disc kinematics.
template <class T>
T lifted_obstacle_value(const ObstaclePose& o, const DiscMotion<T>& m, double Ts, double r_inflate) {
  const double A = o.ax + r_inflate, B = o.ay + r_inflate;
  const int e = o.exponent;
  const T dx = m.x - o.cx, dy = m.y - o.cy;
  const T xb = (o.cos_t * dx + o.sin_t * dy) / A;
  const T yb = (-o.sin_t * dx + o.cos_t * dy) / B;
  // Velocity and acceleration in the scaled obstacle frame.
  const T vxb = (o.cos_t * m.vx + o.sin_t * m.vy) / A;
  const T vyb = (-o.sin_t * m.vx + o.cos_t * m.vy) / B;
  const T axb = (o.cos_t * m.ax + o.sin_t * m.ay) / A;
  const T ayb = (-o.sin_t * m.ax + o.cos_t * m.ay) / B;
  const T xe2 = detail::ipow(xb, e - 2), ye2 = detail::ipow(yb, e - 2);
  const T xe1 = xe2 * xb, ye1 = ye2 * yb;
  const T b = xe1 * xb + ye1 * yb - 1.0;
  const T b_dot = double(e) * (xe1 * vxb + ye1 * vyb);
  const T b_ddot = double(e * (e - 1)) * (xe2 * vxb * vxb + ye2 * vyb * vyb) +
                   double(e) * (xe1 * axb + ye1 * ayb);
  return b + Ts * b_dot + (0.5 * Ts * Ts) * b_ddot;
}

template <class T>
T lifted_obstacle_value(const ObstaclePose& o, const DiscSpec& d, const StateT<T>& x,
                        const VehicleGeometry& g, double Ts, double r_inflate) {
  return lifted_obstacle_value(o, disc_motion(x, g, d), Ts, r_inflate);
}

/// Value, state gradient and Lie derivatives of a (lifted) barrier.
struct BarrierEval {
  double value{0};  ///< lifted value used in the constraint
  double raw{0};    ///< un-lifted barrier at the current state
  StateVector grad_x{StateVector::Zero()};
  double lie_f{0};
  InputVector lie_g{InputVector::Zero()};
};

/// Value and Lie derivatives only, for the rollout hot path.
struct BarrierRates {
  double value{0};
  double lie_f{0};
  InputVector lie_g{InputVector::Zero()};
};

namespace detail {

using Grad7 = Dual<double, kStateDim>;
using Dir3 = Dual<double, 3>;

inline StateT<Grad7> seed_gradient(const State& x) {
  StateT<Grad7> xd;
  for (int i = 0; i < kStateDim; ++i) xd[i] = Grad7::variable(x[i], i);
  return xd;
}

// Directions: 0 = drift f_c(x), 1 = jerk column of g_c, 2 = steering-rate column.
inline StateT<Dir3> seed_rates(const State& x, const VehicleGeometry& g) {
  const State f = drift(x, g);
  StateT<Dir3> xd;
  for (int i = 0; i < kStateDim; ++i) {
    xd[i] = Dir3(x[i]);
    xd[i].d[0] = f[i];
  }
  xd.a.d[1] = 1.0;
  xd.delta.d[2] = 1.0;
  return xd;
}

inline BarrierEval finish_eval(const Grad7& v, double raw, const State& x, const VehicleGeometry& g) {
  BarrierEval out;
  out.value = v.v;
  out.raw = raw;
  for (int i = 0; i < kStateDim; ++i) out.grad_x[i] = v.d[i];
  out.lie_f = out.grad_x.dot(to_vector(drift(x, g)));
  out.lie_g = {out.grad_x[kA], out.grad_x[kDelta]};
  return out;
}

}  // namespace detail

inline BarrierEval taylor_barrier(const ObstaclePose& o, const DiscSpec& d, const State& x,
                                  const VehicleGeometry& g, double Ts, double r_inflate) {
  const auto v = lifted_obstacle_value(o, d, detail::seed_gradient(x), g, Ts, r_inflate);
  const auto c = disc_center(x, g, d);
  const double raw = superellipse_value<double>(o, c.x, c.y, r_inflate);
  if (!std::isfinite(v.v)) throw std::domain_error("taylor_barrier: non-finite value");
  return detail::finish_eval(v, raw, x, g);
}

/// Convenience overload: inflation is the disc radius.
inline BarrierEval taylor_barrier(const ObstacleSpec& o, const std::vector<DiscSpec>& layout,
                                  std::size_t disc_index, const State& x, const VehicleGeometry& g,
                                  double Ts) {
  const DiscSpec& d = layout.at(disc_index);
  return taylor_barrier(ObstaclePose::from(o, o.cx, o.cy), d, x, g, Ts, d.radius);
}

inline BarrierRates taylor_barrier_rates(const ObstaclePose& o, const DiscSpec& d, const State& x,
                                         const VehicleGeometry& g, double Ts, double r_inflate) {
  const auto v = lifted_obstacle_value(o, d, detail::seed_rates(x, g), g, Ts, r_inflate);
  return {v.v, v.d[0], {v.d[1], v.d[2]}};
}

// ---------------------------------------------------------------------------
// Hitch angle barrier

struct HitchConfig {
  bool enabled{true};
  double delta_bar{0.6};  ///< nominal max hitch angle [rad]
  double kappa{0.1};      ///< speed scaling [rad s/m]
  Eigen::Matrix2d Qh{Eigen::Matrix2d::Identity()};
  double alpha_h{0.8};    ///< class-K slope of the filter constraint
  double eps{1e-3};       ///< smoothing of |hitch angle|
  int lift_order{1};      ///< 1: b + Ts b', 2: adds Ts^2/2 b''

  void validate() const {
    if (!(delta_bar > 0)) throw std::invalid_argument("hitch: delta_bar must be positive");
    if (!(kappa >= 0)) throw std::invalid_argument("hitch: kappa must be non-negative");
    if (Qh(0, 0) <= 0 || Qh.determinant() <= 0 || std::abs(Qh(0, 1) - Qh(1, 0)) > 1e-12)
      throw std::invalid_argument("hitch: Qh must be symmetric positive definite");
    if (lift_order != 1 && lift_order != 2) throw std::invalid_argument("hitch: lift_order must be 1 or 2");
  }
};

namespace detail {
template <class T>
double sign_of(const T& v) {
  const double x = value_of(v);
  return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0);
}
}  // namespace detail

/// b_h = (delta_bar - kappa |v|) - smooth|theta2 - theta1|.
template <class T>
T hitch_raw(const StateT<T>& x, const HitchConfig& c) {
  using std::sqrt;
  const T hitch = x.theta2 - x.theta1;
  return (c.delta_bar - c.kappa * detail::sign_of(x.v) * x.v) - sqrt(hitch * hitch + c.eps * c.eps);
}

/// Time derivative of hitch_raw along the drift.
template <class T>
T hitch_raw_rate(const StateT<T>& x, const VehicleGeometry& g, const HitchConfig& c) {
  using std::sqrt;
  const StateT<T> f = drift(x, g);
  const T hitch = x.theta2 - x.theta1;
  const T hitch_rate = f.theta2 - f.theta1;
  return -c.kappa * detail::sign_of(x.v) * x.a - hitch / sqrt(hitch * hitch + c.eps * c.eps) * hitch_rate;
}

/// Directional derivative of fn along the drift, by a one-direction dual.
template <class T, class F>
T lie_along_drift(F&& fn, const StateT<T>& x, const VehicleGeometry& g) {
  using D = Dual<T, 1>;
  const StateT<T> f = drift(x, g);
  StateT<D> xd;
  for (int i = 0; i < kStateDim; ++i) xd[i] = D(x[i], {f[i]});
  return fn(xd).d[0];
}

template <class T>
T lifted_hitch_value(const StateT<T>& x, const VehicleGeometry& g, const HitchConfig& c, double Ts) {
  T out = hitch_raw(x, c) + Ts * hitch_raw_rate(x, g, c);
  if (c.lift_order == 2) {
    const T b_ddot = lie_along_drift([&](const auto& xd) { return hitch_raw_rate(xd, g, c); }, x, g);
    out = out + (0.5 * Ts * Ts) * b_ddot;
  }
  return out;
}

inline BarrierEval hitch_barrier(const State& x, const VehicleGeometry& g, const HitchConfig& c, double Ts) {
  const auto v = lifted_hitch_value(detail::seed_gradient(x), g, c, Ts);
  return detail::finish_eval(v, hitch_raw(x, c), x, g);
}

inline BarrierRates hitch_barrier_rates(const State& x, const VehicleGeometry& g, const HitchConfig& c,
                                        double Ts) {
  const auto v = lifted_hitch_value(detail::seed_rates(x, g), g, c, Ts);
  return {v.v, v.d[0], {v.d[1], v.d[2]}};
}

}  // namespace brmppi
