#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace brmppi {

inline constexpr int kStateDim = 7;
inline constexpr int kInputDim = 2;

using StateVector = Eigen::Matrix<double, kStateDim, 1>;
using InputVector = Eigen::Matrix<double, kInputDim, 1>;
using InputMatrix = Eigen::Matrix<double, kStateDim, kInputDim>;

/// Index of each state field inside the stacked vector form.
enum StateIndex : int { kPx = 0, kPy, kV, kA, kTheta1, kTheta2, kDelta };

/// Tractor-trailer kinematic state. Templated on the scalar so the same
/// expressions can be evaluated with dual numbers.
template <class T>
struct StateT {
  T px{0};      ///< tractor rear-axle x [m]
  T py{0};      ///< tractor rear-axle y [m]
  T v{0};       ///< longitudinal speed [m/s], negative when reversing
  T a{0};       ///< longitudinal acceleration [m/s^2]
  T theta1{0};  ///< tractor heading [rad]
  T theta2{0};  ///< trailer heading [rad]
  T delta{0};   ///< steering angle [rad]

  T& operator[](int i) {
    switch (i) {
      case kPx: return px;
      case kPy: return py;
      case kV: return v;
      case kA: return a;
      case kTheta1: return theta1;
      case kTheta2: return theta2;
      default: return delta;
    }
  }
  const T& operator[](int i) const { return const_cast<StateT&>(*this)[i]; }
};

using State = StateT<double>;

inline StateVector to_vector(const State& x) {
  StateVector out;
  for (int i = 0; i < kStateDim; ++i) out[i] = x[i];
  return out;
}

inline State from_vector(const StateVector& v) {
  State x;
  for (int i = 0; i < kStateDim; ++i) x[i] = v[i];
  return x;
}

inline bool is_finite(const State& x) {
  for (int i = 0; i < kStateDim; ++i)
    if (!std::isfinite(x[i])) return false;
  return true;
}

struct ControlInput {
  double jerk{0};        ///< [m/s^3]
  double steer_rate{0};  ///< [rad/s]

  InputVector vec() const { return {jerk, steer_rate}; }
  static ControlInput from(const InputVector& u) { return {u[0], u[1]}; }
  friend bool operator==(const ControlInput&, const ControlInput&) = default;
};

/// Actuator limits applied to sampled and filtered inputs.
struct InputBounds {
  double jerk_min{-2.0};
  double jerk_max{2.0};
  double steer_rate_min{-0.9};
  double steer_rate_max{0.9};

  ControlInput clamp(const ControlInput& u) const {
    return {std::clamp(u.jerk, jerk_min, jerk_max),
            std::clamp(u.steer_rate, steer_rate_min, steer_rate_max)};
  }
};

/// Saturation applied to the integrated state after every step.
struct StateLimits {
  double v_max{3.0};
  double a_max{2.0};
  double delta_max{0.55};
};

struct VehicleGeometry {
  double l1{3.23};   ///< tractor wheelbase [m]
  double l2{2.9};    ///< trailer length, hitch to trailer axle [m]
  double lh{1.15};   ///< hitch offset behind the tractor rear axle [m]
  double w_tractor{2.0};
  double w_trailer{2.5};
  double tractor_overhang_front{1.0};  ///< front bumper ahead of the front axle
  double tractor_overhang_rear{1.0};   ///< rear bumper behind the rear axle
  double trailer_overhang_rear{1.5};   ///< trailer body behind the trailer axle

  void validate() const {
    if (!(l1 > 0) || !(l2 > 0)) throw std::invalid_argument("geometry: l1 and l2 must be positive");
    if (!(lh >= 0)) throw std::invalid_argument("geometry: lh must be non-negative");
    if (!(w_tractor > 0) || !(w_trailer > 0))
      throw std::invalid_argument("geometry: widths must be positive");
    if (tractor_overhang_front < 0 || tractor_overhang_rear < 0 || trailer_overhang_rear < 0)
      throw std::invalid_argument("geometry: overhangs must be non-negative");
  }

  double tractor_length() const { return tractor_overhang_rear + l1 + tractor_overhang_front; }
  double trailer_length() const { return l2 + trailer_overhang_rear; }
};

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::fmod(a + std::numbers::pi, two_pi);
  if (r <= 0) r += two_pi;
  return r - std::numbers::pi;
}

}  // namespace brmppi
