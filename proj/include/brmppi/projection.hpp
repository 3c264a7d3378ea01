#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "brmppi/types.hpp"

namespace brmppi {

/// Physical inputs stacked with one barrier-rate auxiliary input per active constraint.
struct AugmentedInput {
  InputVector u{InputVector::Zero()};
  Eigen::VectorXd u_alpha;

  Eigen::Index size() const { return 2 + u_alpha.size(); }

  Eigen::VectorXd stacked() const {
    Eigen::VectorXd z(size());
    z << u, u_alpha;
    return z;
  }
  static AugmentedInput from_stacked(const Eigen::VectorXd& z) {
    AugmentedInput out;
    out.u = z.head<2>();
    out.u_alpha = z.tail(z.size() - 2);
    return out;
  }
};

struct ProjectionConfig {
  Eigen::Matrix2d Q1{Eigen::Matrix2d::Identity()};
  Eigen::MatrixXd Q2;  ///< N_o x N_o
  double rho{1.0};
  Eigen::VectorXd z_low, z_high;  ///< 2 + N_o bounds
  double jitter{1e-8};

  Eigen::MatrixXd weight() const {
    const Eigen::Index n = 2 + Q2.rows();
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n);
    W.topLeftCorner<2, 2>() = Q1;
    W.bottomRightCorner(Q2.rows(), Q2.cols()) = Q2;
    return W;
  }
};

struct ProjectionResult {
  Eigen::VectorXd z;          ///< closed-form minimizer
  Eigen::VectorXd z_clamped;  ///< z clamped to [z_low, z_high], the value actually applied
  bool fallback{false};       ///< Gram matrix singular; z is the unprojected input
};

/// Rows of the barrier-rate equality constraint
///   lie_g_i * u + h_i * u_alpha_i = -lie_f_i - alpha_i * h_i.
/// `evals` needs `lie_f` and `lie_g` members.
template <class Eval, class MatA, class VecB>
void assemble_constraints_into(std::span<const Eval> evals, std::span<const double> alpha,
                               std::span<const double> h_values, MatA& A, VecB& b) {
  const Eigen::Index m = static_cast<Eigen::Index>(evals.size());
  A.setZero(m, 2 + m);
  b.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& e = evals[static_cast<std::size_t>(i)];
    const double h = h_values[static_cast<std::size_t>(i)];
    A(i, 0) = e.lie_g[0];
    A(i, 1) = e.lie_g[1];
    A(i, 2 + i) = h;
    b[i] = -e.lie_f - alpha[static_cast<std::size_t>(i)] * h;
  }
}

template <class Eval>
std::pair<Eigen::MatrixXd, Eigen::VectorXd> assemble_constraints(std::span<const Eval> evals,
                                                                 const Eigen::VectorXd& alpha,
                                                                 const Eigen::VectorXd& h_values) {
  if (alpha.size() != static_cast<Eigen::Index>(evals.size()) || h_values.size() != alpha.size())
    throw std::invalid_argument("assemble_constraints: size mismatch");
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  assemble_constraints_into(evals, std::span<const double>(alpha.data(), alpha.size()),
                            std::span<const double>(h_values.data(), h_values.size()), A, b);
  return {A, b};
}

/// Closed-form minimizer of
///   |z - z_des|_W^2 + rho/2 (|z - z_low|^2 + |z_high - z|^2)  s.t.  A z = b,
/// i.e. z = M^-1 [p - A^T (A M^-1 A^T + jitter I)^-1 (A M^-1 p - b)] with
/// M = W + rho I and p = W z_des + rho/2 (z_high + z_low).
/// Returns false when the Gram matrix is numerically singular; `z` is then left unspecified.
template <class Vec, class MatW, class MatA>
bool soft_project_core(const Vec& z_des, const MatW& W, double rho, const Vec& z_low,
                       const Vec& z_high, const MatA& A, const Vec& b, double jitter, Vec& z) {
  using Square = MatW;
  const Eigen::Index n = z_des.size();
  const Eigen::Index m = A.rows();
  Square M = W;
  M.diagonal().array() += rho;
  Vec p = W * z_des;
  p += (0.5 * rho) * (z_high + z_low);
  Eigen::LLT<Square> llt_m(M);
  if (llt_m.info() != Eigen::Success) return false;
  Vec minv_p = llt_m.solve(p);
  if (m == 0) {
    z = minv_p;
    return true;
  }
  using Tall = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, MatW::MaxRowsAtCompileTime,
                             MatA::MaxRowsAtCompileTime>;
  using Gram = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, MatA::MaxRowsAtCompileTime,
                             MatA::MaxRowsAtCompileTime>;
  Tall minv_at = llt_m.solve(A.transpose());
  Gram G = A * minv_at;
  G.diagonal().array() += jitter;
  Eigen::LLT<Gram> llt_g(G);
  if (llt_g.info() != Eigen::Success) return false;
  const auto diag = llt_g.matrixLLT().diagonal().cwiseAbs();
  const double dmax = diag.maxCoeff(), dmin = diag.minCoeff();
  if (!(dmin > 0) || dmin * dmin < 1e-15 * dmax * dmax) return false;
  Vec r = A * minv_p;
  r -= b;
  Vec lam = llt_g.solve(r);
  z = minv_p;
  z.noalias() -= minv_at * lam;
  (void)n;
  return z.allFinite();
}

inline void validate(const ProjectionConfig& cfg, Eigen::Index n_alpha) {
  if (cfg.Q2.rows() != n_alpha || cfg.Q2.cols() != n_alpha)
    throw std::invalid_argument("soft_project: Q2 must be N_o x N_o");
  if (cfg.z_low.size() != 2 + n_alpha || cfg.z_high.size() != 2 + n_alpha)
    throw std::invalid_argument("soft_project: bound vectors must have length 2 + N_o");
  if (!(cfg.rho >= 0)) throw std::invalid_argument("soft_project: rho must be non-negative");
  if ((cfg.z_low.array() >= cfg.z_high.array()).any())
    throw std::invalid_argument("soft_project: z_low must be below z_high");
}

inline ProjectionResult soft_project(const AugmentedInput& z_des, const ProjectionConfig& cfg,
                                     const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  validate(cfg, z_des.u_alpha.size());
  const Eigen::VectorXd zd = z_des.stacked();
  if (A.cols() != zd.size() || A.rows() != b.size())
    throw std::invalid_argument("soft_project: constraint dimensions do not match z");
  ProjectionResult out;
  Eigen::VectorXd z;
  const bool ok = soft_project_core<Eigen::VectorXd, Eigen::MatrixXd, Eigen::MatrixXd>(
      zd, cfg.weight(), cfg.rho, cfg.z_low, cfg.z_high, A, b, cfg.jitter, z);
  out.fallback = !ok;
  out.z = ok ? z : zd;
  out.z_clamped = out.z.cwiseMax(cfg.z_low).cwiseMin(cfg.z_high);
  return out;
}

/// Same minimizer as soft_project_core for the block weight W = Diag(Q1, q2 I)
/// and scalar auxiliary bounds. The Gram matrix is diagonal plus rank two, so
/// it is inverted with the Woodbury identity in O(m) instead of O(m^3).
/// `u_alpha` holds the desired auxiliary inputs on entry and the minimizer on exit.
/// Returns false under the same near-singularity rule as soft_project_core.
template <class Eval>
bool soft_project_scaled_identity(InputVector& u, std::span<double> u_alpha, std::span<const Eval> rows,
                                  std::span<const double> alpha, const Eigen::Matrix2d& Q1, double q2,
                                  double rho, const InputVector& u_low, const InputVector& u_high,
                                  double ua_low, double ua_high, double jitter) {
  const std::size_t m = rows.size();
  const Eigen::Matrix2d Mu = Q1 + rho * Eigen::Matrix2d::Identity();
  const double ma = q2 + rho;
  const Eigen::Matrix2d P = Mu.inverse();
  const InputVector yu = P * (Q1 * u + 0.5 * rho * (u_high + u_low));
  const double pa_shift = 0.5 * rho * (ua_high + ua_low);

  // K = Mu + sum g g^T / D_i accumulates the capacitance matrix of the Woodbury form.
  Eigen::Matrix2d K = Mu;
  InputVector gdr = InputVector::Zero();
  double dmin = std::numeric_limits<double>::infinity(), dmax = 0.0, trace_low_rank = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const auto& e = rows[i];
    const double h = e.value;
    const double ya = (q2 * u_alpha[i] + pa_shift) / ma;
    const double d = h * h / ma + jitter;
    const double r = e.lie_g.dot(yu) + h * ya - (-e.lie_f - alpha[i] * h);
    K.noalias() += e.lie_g * e.lie_g.transpose() / d;
    gdr += e.lie_g * (r / d);
    dmin = std::min(dmin, d);
    dmax = std::max(dmax, d);
    trace_low_rank += e.lie_g.dot(P * e.lie_g);
  }
  if (m == 0) {
    u = yu;
    return true;
  }
  if (!(dmin > 0) || dmin < 1e-15 * (dmax + trace_low_rank)) return false;
  // lambda = D^-1 r - D^-1 G_u K^-1 G_u^T D^-1 r, with G_u the stacked lie_g rows.
  const double det = K(0, 0) * K(1, 1) - K(0, 1) * K(1, 0);
  if (!(det > 0)) return false;
  const InputVector kinv_gdr((K(1, 1) * gdr(0) - K(0, 1) * gdr(1)) / det, (K(0, 0) * gdr(1) - K(1, 0) * gdr(0)) / det);
  InputVector at_lambda_u = InputVector::Zero();
  for (std::size_t i = 0; i < m; ++i) {
    const auto& e = rows[i];
    const double h = e.value;
    const double ya = (q2 * u_alpha[i] + pa_shift) / ma;
    const double d = h * h / ma + jitter;
    const double r = e.lie_g.dot(yu) + h * ya - (-e.lie_f - alpha[i] * h);
    const double lambda = (r - e.lie_g.dot(kinv_gdr)) / d;
    at_lambda_u += e.lie_g * lambda;
    u_alpha[i] = ya - h * lambda / ma;
  }
  u = yu - P * at_lambda_u;
  if (!u.allFinite()) return false;
  for (std::size_t i = 0; i < m; ++i)
    if (!std::isfinite(u_alpha[i])) return false;
  return true;
}

/// alpha_i += u_alpha_i, clamped to [lo, hi].
inline Eigen::VectorXd advance_alpha(const Eigen::VectorXd& alpha, const Eigen::VectorXd& u_alpha,
                                     double lo, double hi) {
  if (alpha.size() != u_alpha.size()) throw std::invalid_argument("advance_alpha: size mismatch");
  return (alpha + u_alpha).cwiseMax(lo).cwiseMin(hi);
}

}  // namespace brmppi
