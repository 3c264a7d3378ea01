#pragma once

#include <cmath>

#include <Eigen/Core>
#include <Eigen/LU>

#include "brmppi/barriers.hpp"
#include "brmppi/types.hpp"

namespace brmppi {

struct HitchFilterResult {
  ControlInput u;
  bool modified{false};
  bool jackknife_risk{false};  ///< constraint violated but the inputs cannot act on it
};

/// Qh-weighted projection of u_ref onto the half-space a^T u >= c.
/// Returns u_ref unchanged when it already satisfies the constraint.
inline InputVector project_halfspace(const InputVector& u_ref, const InputVector& a, double c,
                                     const Eigen::Matrix2d& Qh) {
  const double slack = c - a.dot(u_ref);
  if (slack <= 0) return u_ref;
  const InputVector dir = Qh.inverse() * a;
  return u_ref + (slack / a.dot(dir)) * dir;
}

/// Single-constraint CBF-QP on the lifted hitch barrier:
///   min |u - u_ref|_Qh^2  s.t.  L_f h + L_g h u >= -alpha_h h,
/// followed by clamping to the input bounds.
inline HitchFilterResult hitch_qp_filter(const ControlInput& u_ref, const State& x, const VehicleGeometry& g,
                                         const HitchConfig& cfg, double Ts, const InputBounds& bounds) {
  HitchFilterResult out{u_ref};
  if (!cfg.enabled) return out;
  const BarrierRates h = hitch_barrier_rates(x, g, cfg, Ts);
  const InputVector a = h.lie_g;
  const double c = -cfg.alpha_h * h.value - h.lie_f;
  if (a.dot(u_ref.vec()) >= c) return out;
  if (a.norm() < 1e-12) {
    out.u = bounds.clamp(u_ref);
    out.jackknife_risk = true;
    return out;
  }
  out.u = bounds.clamp(ControlInput::from(project_halfspace(u_ref.vec(), a, c, cfg.Qh)));
  out.modified = true;
  return out;
}

}  // namespace brmppi
