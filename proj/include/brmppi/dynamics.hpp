#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "brmppi/types.hpp"

namespace brmppi {

/// Continuous-time drift f_c(x) of the tractor-trailer kinematics. Jerk and
/// steering rate are the only inputs, so the a and delta rows are zero.
template <class T>
StateT<T> drift(const StateT<T>& x, const VehicleGeometry& g) {
  using std::cos, std::sin, std::tan;
  const T tan_delta = tan(x.delta);
  const T phi = x.theta1 - x.theta2;
  StateT<T> f;
  f.px = x.v * cos(x.theta1);
  f.py = x.v * sin(x.theta1);
  f.v = x.a;
  f.a = T(0.0);
  f.theta1 = x.v * tan_delta / g.l1;
  f.theta2 = x.v / g.l2 * (sin(phi) - (g.lh / g.l1) * cos(phi) * tan_delta);
  f.delta = T(0.0);
  return f;
}

/// Continuous-time input matrix g_c. Constant: jerk drives a, steering rate drives delta.
inline InputMatrix input_matrix_continuous() {
  InputMatrix g = InputMatrix::Zero();
  g(kA, 0) = 1.0;
  g(kDelta, 1) = 1.0;
  return g;
}

/// Discrete control-affine decomposition x+ = x + drift + input_matrix * u.
struct AffineFields {
  StateVector drift;
  InputMatrix input_matrix;
};

inline void require_step_args(const State& x, double Ts) {
  if (!(Ts > 0)) throw std::invalid_argument("step: sampling period must be positive");
  if (!is_finite(x)) throw std::domain_error("step: non-finite state");
}

inline AffineFields affine_fields(const State& x, const VehicleGeometry& g, double Ts) {
  require_step_args(x, Ts);
  return {Ts * to_vector(drift(x, g)), Ts * input_matrix_continuous()};
}

/// Euler update without saturation.
inline State step_unclamped(const State& x, const ControlInput& u, const VehicleGeometry& g,
                            double Ts) {
  const State f = drift(x, g);
  State n;
  n.px = x.px + Ts * f.px;
  n.py = x.py + Ts * f.py;
  n.v = x.v + Ts * f.v;
  n.a = x.a + Ts * u.jerk;
  n.theta1 = x.theta1 + Ts * f.theta1;
  n.theta2 = x.theta2 + Ts * f.theta2;
  n.delta = x.delta + Ts * u.steer_rate;
  return n;
}

inline State saturate(State x, const StateLimits& lim) {
  x.v = std::clamp(x.v, -lim.v_max, lim.v_max);
  x.a = std::clamp(x.a, -lim.a_max, lim.a_max);
  x.delta = std::clamp(x.delta, -lim.delta_max, lim.delta_max);
  return x;
}

/// One sampling period of the discrete tractor-trailer model. Integrates
/// first, then saturates speed, acceleration and steering angle.
inline State step(const State& x, const ControlInput& u, const VehicleGeometry& g, double Ts,
                  const StateLimits& lim = {}) {
  require_step_args(x, Ts);
  return saturate(step_unclamped(x, u, g, Ts), lim);
}

struct Trajectory {
  std::vector<State> states;         // H + 1
  std::vector<ControlInput> inputs;  // H
};

/// Propagates an input sequence. Throws std::domain_error if the state
/// leaves the finite range; callers treat that rollout as infinitely costly.
inline Trajectory rollout(const State& x0, std::span<const ControlInput> inputs,
                          const VehicleGeometry& g, double Ts, const StateLimits& lim = {}) {
  if (inputs.empty()) throw std::invalid_argument("rollout: empty input sequence");
  Trajectory traj;
  traj.states.reserve(inputs.size() + 1);
  traj.inputs.assign(inputs.begin(), inputs.end());
  traj.states.push_back(x0);
  for (const auto& u : inputs) {
    State next = step(traj.states.back(), u, g, Ts, lim);
    if (!is_finite(next)) throw std::domain_error("rollout: state diverged");
    traj.states.push_back(next);
  }
  return traj;
}

}  // namespace brmppi
