#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "brmppi/barriers.hpp"
#include "brmppi/costs.hpp"
#include "brmppi/dynamics.hpp"
#include "brmppi/parallel.hpp"
#include "brmppi/projection.hpp"
#include "brmppi/reference_path.hpp"
#include "brmppi/types.hpp"

namespace brmppi {

enum class Variant { kMppi, kMppiCollision, kBrMppi };

inline const char* to_string(Variant v) {
  switch (v) {
    case Variant::kMppi: return "mppi";
    case Variant::kMppiCollision: return "mppi-collision";
    default: return "br-mppi";
  }
}

inline Variant parse_variant(const std::string& s) {
  if (s == "mppi") return Variant::kMppi;
  if (s == "mppi-collision" || s == "mppi_collision") return Variant::kMppiCollision;
  if (s == "br-mppi" || s == "br_mppi") return Variant::kBrMppi;
  throw std::invalid_argument("unknown controller variant '" + s + "'");
}

/// Weights and bounds of the per-sample barrier-rate projection.
struct ProjectionSettings {
  Eigen::Matrix2d Q1{Eigen::Matrix2d::Identity()};
  double q2{1.0};  ///< Q2 = q2 * I over the active constraints
  double rho{0.01};
  double jitter{1e-8};
  double u_alpha_min{-2.0};
  double u_alpha_max{2.0};
};

struct ControllerConfig {
  int H{120};
  int S{5000};
  double Ts{0.04};
  double lambda{1.0};
  Eigen::Matrix2d Sigma_w{Eigen::Vector2d(0.5 * 0.5, 0.3 * 0.3).asDiagonal()};
  double sigma_vs{0.4};      ///< std of the progress-rate perturbation [m/s]
  double Sigma_alpha{0.25};  ///< variance of the auxiliary-input perturbation
  double alpha0{0.5};
  double alpha_min{-2.0};
  double alpha_max{2.0};
  double v_s_max{2.0};
  std::uint64_t seed{0};
  int workers{1};

  InputBounds bounds;
  StateLimits limits;
  int discs_tractor{3};
  int discs_trailer{3};
  double barrier_margin{0.1};        ///< added to the disc radius when inflating obstacles
  double activation_threshold{3.0};  ///< lifted obstacle barriers below this contribute rows
  double hitch_activation{0.25};     ///< lifted hitch barrier below this contributes a row
  bool hitch_in_rollouts{true};
  double fallback_penalty{1e6};
  /// Keep one row per (body, obstacle): the disc with the smallest lifted barrier.
  bool closest_disc_rows{false};
  /// Slack on the rate check rate + alpha_max * h >= 0 applied after the projection.
  /// Infinite disables the check.
  double rate_tolerance{0.0};
  ProjectionSettings projection;
  HitchConfig hitch;

  void validate() const {
    if (H < 1) throw std::invalid_argument("controller: H must be >= 1");
    if (S < 1) throw std::invalid_argument("controller: S must be >= 1");
    if (!(Ts > 0)) throw std::invalid_argument("controller: Ts must be positive");
    if (!(lambda > 0)) throw std::invalid_argument("controller: lambda must be positive");
    if (Sigma_w(0, 1) != Sigma_w(1, 0) || Sigma_w(0, 0) < 0 || Sigma_w.determinant() < 0)
      throw std::invalid_argument("controller: Sigma_w must be symmetric positive semidefinite");
    if (sigma_vs < 0 || Sigma_alpha < 0) throw std::invalid_argument("controller: negative noise scale");
    if (!(alpha_min < alpha_max)) throw std::invalid_argument("controller: alpha bounds are empty");
    if (!(v_s_max > 0)) throw std::invalid_argument("controller: v_s_max must be positive");
    if (discs_tractor < 1 || discs_trailer < 1) throw std::invalid_argument("controller: disc counts must be >= 1");
    if (projection.Q1.determinant() <= 0 || projection.Q1(0, 0) <= 0 || !(projection.q2 > 0))
      throw std::invalid_argument("controller: projection weights must be positive definite");
    if (!(projection.u_alpha_min < projection.u_alpha_max))
      throw std::invalid_argument("controller: auxiliary input bounds are empty");
    hitch.validate();
  }
};

/// One element of the nominal sequence: physical inputs plus the virtual
/// progress-rate input of the contouring formulation.
struct NominalInput {
  double jerk{0};
  double steer_rate{0};
  double v_s{0};
  friend bool operator==(const NominalInput&, const NominalInput&) = default;
};

/// Normalized importance weights exp(-(J - min J)/lambda). Infinite costs get
/// weight zero; throws if no cost is finite.
inline std::vector<double> importance_weights(std::span<const double> costs, double lambda) {
  if (!(lambda > 0)) throw std::invalid_argument("importance_weights: lambda must be positive");
  double min_cost = std::numeric_limits<double>::infinity();
  for (double c : costs)
    if (std::isfinite(c)) min_cost = std::min(min_cost, c);
  if (!std::isfinite(min_cost)) throw std::runtime_error("importance_weights: no finite rollout cost");
  std::vector<double> w(costs.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < costs.size(); ++i) {
    if (!std::isfinite(costs[i])) continue;
    w[i] = std::exp(-(costs[i] - min_cost) / lambda);
    total += w[i];
  }
  for (double& wi : w) wi /= total;
  return w;
}

/// Everything a rollout needs about the current control step.
struct StepProblem {
  State x0;
  double s0{0};
  const ReferencePath* path{nullptr};
  /// Obstacle poses indexed [tau][obstacle], tau = 0..H. May be empty.
  std::span<const std::vector<ObstaclePose>> obstacles;
  VehicleGeometry geom;
  long step_index{0};
};

/// Perturbations of one rollout: (jerk, steer rate, progress rate) per step,
/// plus the seed of the lazily drawn auxiliary-input noise.
struct RolloutNoise {
  std::vector<std::array<double, 3>> input;
  std::uint64_t alpha_seed{0};
};

struct RolloutRecord {
  Trajectory trajectory;
  std::vector<double> progress;            ///< s at each state
  std::vector<std::vector<double>> alpha;  ///< barrier rates after each step
  std::vector<double> min_lifted;          ///< smallest active lifted barrier per step (inf if none)
};

struct RolloutOutcome {
  double cost{0};
  int fallbacks{0};
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t seed, long step, std::size_t rollout, std::uint64_t tag) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(step));
  h = splitmix64(h ^ static_cast<std::uint64_t>(rollout));
  return splitmix64(h ^ tag);
}

inline constexpr int kMaxRows = 64;
inline constexpr std::size_t kMaxObsMask = 32;  ///< obstacles beyond this index skip body-level culling

struct ActiveRow {
  int pair;  ///< alpha slot: disc (or body) * n_obstacles + obstacle, or the hitch slot
  double h;
  int disc{-1};
};

/// Scratch space reused across the rollouts of one worker.
struct Workspace {
  std::vector<DiscSpec> layout;
  std::vector<double> alpha;
  std::vector<ActiveRow> active;
  std::vector<BarrierRates> rates;
  std::vector<double> h_active, alpha_active, u_alpha;
  std::vector<ActiveRow> closest;  ///< per (body, obstacle) when only the closest disc is kept
  std::vector<double> level_k;  ///< per-obstacle box scale of the activation level
  std::array<BodyBound, 2> bounds;
};

inline Eigen::Matrix2d noise_factor(const Eigen::Matrix2d& sigma) {
  if (sigma.isZero(0.0)) return Eigen::Matrix2d::Zero();
  Eigen::LLT<Eigen::Matrix2d> llt(sigma);
  if (llt.info() != Eigen::Success) {
    // Positive semidefinite but singular: fall back to a diagonal factor.
    return sigma.diagonal().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  }
  return llt.matrixL();
}

}  // namespace detail

/// Draws the perturbation sequence of rollout `index` at control step `step`.
inline RolloutNoise sample_noise(const ControllerConfig& cfg, long step, std::size_t index) {
  RolloutNoise n;
  n.input.resize(static_cast<std::size_t>(cfg.H));
  std::mt19937_64 gen(detail::stream_seed(cfg.seed, step, index, 1));
  std::normal_distribution<double> normal(0.0, 1.0);
  const Eigen::Matrix2d L = detail::noise_factor(cfg.Sigma_w);
  for (auto& w : n.input) {
    const double e0 = normal(gen), e1 = normal(gen), e2 = normal(gen);
    w[0] = L(0, 0) * e0;
    w[1] = L(1, 0) * e0 + L(1, 1) * e1;
    w[2] = cfg.sigma_vs * e2;
  }
  n.alpha_seed = detail::stream_seed(cfg.seed, step, index, 2);
  return n;
}

/// Runs one rollout of any variant. Writes the applied (post-projection,
/// post-clamp) inputs into `applied` (length H). For BR-MPPI each step
/// evaluates the active lifted barriers, projects the perturbed augmented
/// input onto the barrier-rate equalities, and advances the barrier rates.
inline RolloutOutcome run_rollout(const StepProblem& pb, std::span<const NominalInput> nominal,
                                  const RolloutNoise& noise, const ControllerConfig& cfg,
                                  const CostWeights& w, Variant variant, std::span<NominalInput> applied,
                                  detail::Workspace& ws, RolloutRecord* record = nullptr) {
  using namespace detail;
  const int H = cfg.H;
  const ReferencePath& path = *pb.path;
  const double L = path.length();
  const VehicleGeometry& g = pb.geom;
  if (ws.layout.empty()) ws.layout = footprint_layout(g, cfg.discs_tractor, cfg.discs_trailer);
  ws.bounds = body_bounds(ws.layout);
  const std::size_t n_discs = ws.layout.size();
  const std::size_t n_obs = pb.obstacles.empty() ? 0 : pb.obstacles.front().size();
  const std::size_t hitch_slot = n_discs * n_obs;
  const bool use_hitch = cfg.hitch.enabled && cfg.hitch_in_rollouts;
  const bool project = variant == Variant::kBrMppi;
  ws.alpha.assign(hitch_slot + 1, cfg.alpha0);
  ws.closest.assign(2 * n_obs, ActiveRow{0, 0.0, -1});
  ws.level_k.resize(n_obs);
  for (std::size_t o = 0; o < n_obs; ++o)
    ws.level_k[o] = level_scale(cfg.activation_threshold, pb.obstacles.front()[o].exponent);

  std::mt19937_64 alpha_gen(noise.alpha_seed);
  std::normal_distribution<double> alpha_normal(0.0, std::sqrt(cfg.Sigma_alpha));

  State x = pb.x0;
  double s = std::clamp(pb.s0, 0.0, L);
  RolloutOutcome out;
  if (record) {
    record->trajectory.states.assign(1, x);
    record->trajectory.inputs.clear();
    record->progress.assign(1, s);
    record->alpha.clear();
    record->min_lifted.clear();
  }

  for (int tau = 0; tau < H; ++tau) {
    const NominalInput& nom = nominal[static_cast<std::size_t>(tau)];
    const auto& wn = noise.input[static_cast<std::size_t>(tau)];
    ControlInput u = cfg.bounds.clamp({nom.jerk + wn[0], nom.steer_rate + wn[1]});
    const double vs = std::clamp(nom.v_s + wn[2], 0.0, cfg.v_s_max);
    double extra = 0.0;
    double min_lifted = std::numeric_limits<double>::infinity();

    if (project) {
      const bool have_obs = n_obs > 0;
      ws.active.clear();
      if (have_obs) {
        const auto& poses = pb.obstacles[static_cast<std::size_t>(tau)];
        const BodyTerms<double> bt = body_terms(x, g);
        // A disc moves at most about twice the speed limit, so pairs whose box test
        // fails by more than that within one step cannot be active.
        const double slack = 2.0 * cfg.limits.v_max * cfg.Ts;
        bool body_near[2][kMaxObsMask] = {};
        bool any_near = false;
        for (std::size_t b = 0; b < 2; ++b) {
          if (!ws.bounds[b].present) continue;
          const DiscPoint<double> c = disc_center(x, bt.c1, bt.s1, bt.c2, bt.s2, g, ws.bounds[b].mid);
          for (std::size_t o = 0; o < n_obs; ++o) {
            const bool n = o >= kMaxObsMask ||
                           !beyond_level(poses[o], c.x, c.y, ws.bounds[b].mid.radius + cfg.barrier_margin, ws.level_k[o], slack);
            if (o < kMaxObsMask) body_near[b][o] = n;
            any_near = any_near || n;
          }
        }
        const auto skip = [&](const DiscSpec& ds, std::size_t o) {
          return o < kMaxObsMask && !body_near[ds.body == Body::kTractor ? 0 : 1][o];
        };
        if (any_near && !cfg.closest_disc_rows) {
          for (std::size_t d = 0; d < n_discs; ++d) {
            const DiscSpec& ds = ws.layout[d];
            const double r = ds.radius + cfg.barrier_margin;
            const DiscPoint<double> c = disc_center(x, bt.c1, bt.s1, bt.c2, bt.s2, g, ds);
            bool near = false;
            for (std::size_t o = 0; o < n_obs && !near; ++o)
              near = !skip(ds, o) && !beyond_level(poses[o], c.x, c.y, r, ws.level_k[o], slack);
            if (!near) continue;
            const DiscMotion<double> m = disc_motion(x, bt, g, ds);
            for (std::size_t o = 0; o < n_obs; ++o) {
              if (skip(ds, o) || beyond_level(poses[o], c.x, c.y, r, ws.level_k[o], slack)) continue;
              const double h = lifted_obstacle_value(poses[o], m, cfg.Ts, r);
              if (h < cfg.activation_threshold) ws.active.push_back({static_cast<int>(d * n_obs + o), h, static_cast<int>(d)});
            }
          }
        } else if (any_near) {
          // Pick the disc with the smallest plain barrier per (body, obstacle), then lift only that one.
          for (std::size_t d = 0; d < n_discs; ++d) {
            const DiscSpec& ds = ws.layout[d];
            const double r = ds.radius + cfg.barrier_margin;
            const DiscPoint<double> c = disc_center(x, bt.c1, bt.s1, bt.c2, bt.s2, g, ds);
            const std::size_t b = ds.body == Body::kTractor ? 0 : 1;
            for (std::size_t o = 0; o < n_obs; ++o) {
              if (skip(ds, o) || beyond_level(poses[o], c.x, c.y, r, ws.level_k[o], slack)) continue;
              const double h = superellipse_value<double>(poses[o], c.x, c.y, r);
              ActiveRow& best = ws.closest[b * n_obs + o];
              if (best.disc < 0 || h < best.h) best = {static_cast<int>(b * n_obs + o), h, static_cast<int>(d)};
            }
          }
          for (ActiveRow& row : ws.closest) {
            if (row.disc >= 0) {
              const DiscSpec& ds = ws.layout[static_cast<std::size_t>(row.disc)];
              const std::size_t o = static_cast<std::size_t>(row.pair) % n_obs;
              const double h = lifted_obstacle_value(poses[o], disc_motion(x, bt, g, ds), cfg.Ts,
                                                     ds.radius + cfg.barrier_margin);
              if (h < cfg.activation_threshold) ws.active.push_back({row.pair, h, row.disc});
            }
            row.disc = -1;
          }
        }
      }
      if (use_hitch) {
        const double h = lifted_hitch_value(x, g, cfg.hitch, cfg.Ts);
        if (h < cfg.hitch_activation) ws.active.push_back({static_cast<int>(hitch_slot), h});
      }
      if (ws.active.size() > static_cast<std::size_t>(kMaxRows)) {
        std::partial_sort(ws.active.begin(), ws.active.begin() + kMaxRows, ws.active.end(),
                          [](const ActiveRow& a, const ActiveRow& b) {
                            return a.h < b.h || (a.h == b.h && a.pair < b.pair);
                          });
        ws.active.resize(kMaxRows);
      }
      if (!ws.active.empty()) {
        const Eigen::Index m = static_cast<Eigen::Index>(ws.active.size());
        ws.rates.resize(ws.active.size());
        ws.h_active.resize(ws.active.size());
        ws.alpha_active.resize(ws.active.size());
        const StateT<Dir3> x3 = seed_rates(x, g);
        const BodyTerms<Dir3> bt3 = have_obs ? body_terms(x3, g) : BodyTerms<Dir3>{};
        BodyMotion<Dir3> bm3[2];
        bool bm3_ready[2] = {false, false};
        for (std::size_t i = 0; i < ws.active.size(); ++i) {
          const int pair = ws.active[i].pair;
          if (static_cast<std::size_t>(pair) == hitch_slot) {
            const Dir3 v = lifted_hitch_value(x3, g, cfg.hitch, cfg.Ts);
            ws.rates[i] = {v.v, v.d[0], {v.d[1], v.d[2]}};
          } else {
            const std::size_t d = static_cast<std::size_t>(ws.active[i].disc), o = static_cast<std::size_t>(pair) % n_obs;
            const DiscSpec& ds = ws.layout[d];
            const int b = ds.body == Body::kTractor ? 0 : 1;
            if (!bm3_ready[b]) {
              bm3[b] = body_motion(x3, bt3, g, ds.body);
              bm3_ready[b] = true;
            }
            const Dir3 v = lifted_obstacle_value(pb.obstacles[static_cast<std::size_t>(tau)][o], bm3[b].at(ds.offset),
                                                 cfg.Ts, ds.radius + cfg.barrier_margin);
            ws.rates[i] = {v.v, v.d[0], {v.d[1], v.d[2]}};
          }
          ws.h_active[i] = ws.rates[i].value;
          ws.alpha_active[i] = ws.alpha[static_cast<std::size_t>(pair)];
          min_lifted = std::min(min_lifted, ws.h_active[i]);
        }
        ws.u_alpha.resize(ws.active.size());
        for (double& ua : ws.u_alpha) ua = cfg.Sigma_alpha > 0 ? alpha_normal(alpha_gen) : 0.0;
        const InputVector u_des = u.vec();
        InputVector u_proj = u_des;
        const InputVector u_low(cfg.bounds.jerk_min, cfg.bounds.steer_rate_min);
        const InputVector u_high(cfg.bounds.jerk_max, cfg.bounds.steer_rate_max);
        const bool ok = soft_project_scaled_identity(
            u_proj, std::span<double>(ws.u_alpha), std::span<const BarrierRates>(ws.rates),
            std::span<const double>(ws.alpha_active), cfg.projection.Q1, cfg.projection.q2, cfg.projection.rho, u_low,
            u_high, cfg.projection.u_alpha_min, cfg.projection.u_alpha_max, cfg.projection.jitter);
        if (!ok) {
          u_proj = u_des;
          for (double& ua : ws.u_alpha) ua = 0.0;
          ++out.fallbacks;
          extra += cfg.fallback_penalty;
        }
        u = cfg.bounds.clamp(ControlInput::from(u_proj));
        // Bounds can leave a row unmet. A row whose barrier falls faster than the
        // largest admissible rate allows is treated like a failed projection.
        if (ok) {
          const InputVector uv = u.vec();
          for (const BarrierRates& r : ws.rates)
            if (r.lie_f + r.lie_g.dot(uv) + cfg.alpha_max * r.value < -cfg.rate_tolerance) {
              ++out.fallbacks;
              extra += cfg.fallback_penalty;
              break;
            }
        }
        for (Eigen::Index i = 0; i < m; ++i) {
          const std::size_t k = static_cast<std::size_t>(i);
          const std::size_t pair = static_cast<std::size_t>(ws.active[k].pair);
          const double ua = std::clamp(ws.u_alpha[k], cfg.projection.u_alpha_min, cfg.projection.u_alpha_max);
          ws.alpha[pair] = std::clamp(ws.alpha[pair] + ua, cfg.alpha_min, cfg.alpha_max);
          ws.alpha_active[k] = ws.alpha[pair];
        }
        extra += buffer_alpha_cost(ws.alpha_active, ws.h_active, w);
      }
    } else if (variant == Variant::kMppiCollision && n_obs > 0) {
      extra += collision_penalty(x, g, ws.layout, ws.bounds, pb.obstacles[static_cast<std::size_t>(tau)], w.w_collision,
                                 cfg.barrier_margin);
    }

    out.cost += contouring_stage_cost(x, u, {s, vs}, w, path) + extra;
    applied[static_cast<std::size_t>(tau)] = {u.jerk, u.steer_rate, vs};
    x = saturate(step_unclamped(x, u, g, cfg.Ts), cfg.limits);
    s = std::min(s + cfg.Ts * vs, L);
    if (record) {
      record->trajectory.inputs.push_back(u);
      record->trajectory.states.push_back(x);
      record->progress.push_back(s);
      record->alpha.push_back(ws.alpha);
      record->min_lifted.push_back(min_lifted);
    }
    if (!is_finite(x)) {
      out.cost = std::numeric_limits<double>::infinity();
      for (int r = tau + 1; r < H; ++r) applied[static_cast<std::size_t>(r)] = {};
      return out;
    }
  }
  out.cost += contouring_state_cost(x, path.query(s), w);
  if (w.q_terminal_speed > 0 && s >= L - 1e-9) out.cost += w.q_terminal_speed * x.v * x.v;
  return out;
}

struct MppiDiagnostics {
  double min_cost{0};
  int finite_rollouts{0};
  int fallback_projections{0};
  double effective_samples{0};  ///< 1 / sum(w^2)
};

struct MppiStepResult {
  ControlInput u0;
  double v_s0{0};
  std::vector<NominalInput> updated;  ///< weighted average of the applied rollout inputs
  std::vector<NominalInput> shifted;  ///< updated, advanced one step with the last entry repeated
  MppiDiagnostics diag;
  std::vector<double> costs;
  std::vector<std::vector<NominalInput>> samples;  ///< filled when requested
};

/// One MPPI iteration: sample S perturbed sequences, roll them out (with the
/// variant's projection or penalty), weight them by exp(-(J - min J)/lambda),
/// and average the applied inputs into the new nominal sequence.
inline MppiStepResult mppi_step(const StepProblem& pb, std::span<const NominalInput> nominal,
                                const ControllerConfig& cfg, const CostWeights& w, Variant variant,
                                bool record_samples = false) {
  if (static_cast<int>(nominal.size()) != cfg.H) throw std::invalid_argument("mppi_step: nominal length must equal H");
  if (pb.path == nullptr) throw std::invalid_argument("mppi_step: missing reference path");
  if (!pb.obstacles.empty() && static_cast<int>(pb.obstacles.size()) < cfg.H + 1)
    throw std::invalid_argument("mppi_step: obstacle prediction shorter than the horizon");
  const std::size_t S = static_cast<std::size_t>(cfg.S), H = static_cast<std::size_t>(cfg.H);
  std::vector<NominalInput> applied(S * H);
  std::vector<double> costs(S, 0.0);
  std::vector<int> fallbacks(S, 0);

  parallel_chunks(S, cfg.workers, [&](std::size_t begin, std::size_t end) {
    detail::Workspace ws;
    for (std::size_t i = begin; i < end; ++i) {
      const RolloutNoise noise = sample_noise(cfg, pb.step_index, i);
      const auto r = run_rollout(pb, nominal, noise, cfg, w, variant,
                                 std::span<NominalInput>(applied.data() + i * H, H), ws);
      costs[i] = r.cost;
      fallbacks[i] = r.fallbacks;
    }
  });

  const std::vector<double> weights = importance_weights(costs, cfg.lambda);
  MppiStepResult res;
  res.updated.assign(H, NominalInput{});
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < S; ++i) {
    if (std::isfinite(costs[i])) ++res.diag.finite_rollouts;
    res.diag.fallback_projections += fallbacks[i];
    sum_sq += weights[i] * weights[i];
    if (weights[i] == 0.0) continue;
    for (std::size_t t = 0; t < H; ++t) {
      const NominalInput& a = applied[i * H + t];
      res.updated[t].jerk += weights[i] * a.jerk;
      res.updated[t].steer_rate += weights[i] * a.steer_rate;
      res.updated[t].v_s += weights[i] * a.v_s;
    }
  }
  res.diag.min_cost = *std::min_element(costs.begin(), costs.end());
  res.diag.effective_samples = sum_sq > 0 ? 1.0 / sum_sq : 0.0;
  res.u0 = {res.updated.front().jerk, res.updated.front().steer_rate};
  res.v_s0 = res.updated.front().v_s;
  res.shifted.assign(res.updated.begin() + 1, res.updated.end());
  res.shifted.push_back(res.updated.back());
  res.costs = std::move(costs);
  if (record_samples) {
    res.samples.resize(S);
    for (std::size_t i = 0; i < S; ++i) res.samples[i].assign(applied.begin() + static_cast<long>(i * H),
                                                              applied.begin() + static_cast<long>((i + 1) * H));
  }
  return res;
}

/// Single BR-MPPI rollout with its full trajectory, cost, and barrier-rate trace.
inline std::pair<RolloutRecord, double> br_mppi_rollout(const StepProblem& pb, std::span<const NominalInput> nominal,
                                                        const RolloutNoise& noise, const ControllerConfig& cfg,
                                                        const CostWeights& w, Variant variant = Variant::kBrMppi) {
  std::vector<NominalInput> applied(static_cast<std::size_t>(cfg.H));
  detail::Workspace ws;
  RolloutRecord rec;
  const auto r = run_rollout(pb, nominal, noise, cfg, w, variant, applied, ws, &rec);
  return {std::move(rec), r.cost};
}

}  // namespace brmppi
