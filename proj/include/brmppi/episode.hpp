#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "brmppi/barriers.hpp"
#include "brmppi/clearance.hpp"
#include "brmppi/controller.hpp"
#include "brmppi/costs.hpp"
#include "brmppi/dynamics.hpp"
#include "brmppi/hitch_filter.hpp"
#include "brmppi/mppi.hpp"
#include "brmppi/reference_path.hpp"
#include "brmppi/scenario.hpp"

namespace brmppi {

enum class EpisodeStatus { kParked, kCollided, kTimeout, kJackknifed };

inline const char* to_string(EpisodeStatus s) {
  switch (s) {
    case EpisodeStatus::kParked: return "parked";
    case EpisodeStatus::kCollided: return "collided";
    case EpisodeStatus::kJackknifed: return "jackknifed";
    default: return "timeout";
  }
}

struct EpisodeOptions {
  double Ts{0.04};
  InputBounds bounds;
  StateLimits limits;
  HitchConfig hitch;
  bool hitch_filter{true};
  /// Zero-mean Gaussian input disturbance added after the hitch filter.
  bool disturbance{false};
  double disturbance_jerk_std{0.2};
  double disturbance_steer_std{0.05};
  std::uint64_t disturbance_seed{0};
  double jackknife_margin{0.1};  ///< jackknifed when |hitch angle| > delta_bar + margin
  double progress_window{2.0};   ///< search window of the per-step path projection [m]
  /// Segment switch at a cusp once within this distance of the segment end and nearly stopped.
  double cusp_distance{0.5};
  double cusp_speed{0.1};
  ClearanceOptions clearance;
};

struct StepRecord {
  long step{0};
  double t{0};
  State x;
  ControlInput u;  ///< input applied to the plant (zero on the terminal record)
  double clearance{0};
  double e_c{0}, e_l{0};
  double s{0};
  double tracking_error{0};
  int segment{0};
  bool controlled{false};  ///< the controller ran on this step
  bool hitch_modified{false};
  double compute_ms{0};
};

struct EpisodeLog {
  std::vector<StepRecord> records;
  EpisodeStatus status{EpisodeStatus::kTimeout};
  std::string diagnostic;
  int jackknife_warnings{0};
};

struct Metrics {
  double tracking_error_mean{0};
  double min_clearance{std::numeric_limits<double>::infinity()};
  double mean_step_time{0};
  double p95_step_time{0};
  bool success{false};
};

/// Closed loop: predict obstacles, controller step, hitch filter, plant step,
/// log. Stops when the goal is met, on collision, on jackknife, or at the time limit.
inline EpisodeLog run_episode(const Scenario& sc, Controller& controller, const EpisodeOptions& opt) {
  EpisodeLog log;
  const auto segments_wp = split_at_cusps(sc.reference);
  std::vector<ReferencePath> segments;
  segments.reserve(segments_wp.size());
  for (const auto& w : segments_wp) segments.push_back(fit_path(w));
  if (segments.empty()) throw std::invalid_argument("run_episode: empty reference");

  const int H = std::max(controller.horizon(), 1);
  const long max_steps = static_cast<long>(std::floor(sc.max_episode_time / opt.Ts + 1e-9));
  std::mt19937_64 dist_gen(opt.disturbance_seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  State x = sc.initial_state;
  std::size_t seg = 0;
  double s = segments[0].project(x.px, x.py, 0.0, std::max(segments[0].length(), opt.progress_window));

  for (long k = 0;; ++k) {
    const double t = static_cast<double>(k) * opt.Ts;
    const ReferencePath* path = &segments[seg];
    s = path->project(x.px, x.py, s, opt.progress_window);
    if (seg + 1 < segments.size() && path->length() - s <= opt.cusp_distance && std::abs(x.v) < opt.cusp_speed) {
      ++seg;
      path = &segments[seg];
      controller.reset();
      s = path->project(x.px, x.py, 0.0, opt.progress_window);
    }

    StepRecord rec;
    rec.step = k;
    rec.t = t;
    rec.x = x;
    rec.s = s;
    rec.segment = static_cast<int>(seg);
    const PathPoint ref = path->query(s);
    const ContourErrors e = contour_errors(x.px, x.py, ref);
    rec.e_c = e.contour;
    rec.e_l = e.lag;
    rec.tracking_error = std::hypot(x.px - ref.x, x.py - ref.y);
    const auto poses_now = sc.obstacles_at(t);
    rec.clearance = clearance(x, sc.geometry, poses_now, opt.clearance);

    auto finish = [&](EpisodeStatus st) {
      log.records.push_back(rec);
      log.status = st;
    };
    if (rec.clearance < 0) {
      finish(EpisodeStatus::kCollided);
      break;
    }
    if (std::abs(wrap_angle(x.theta2 - x.theta1)) > opt.hitch.delta_bar + opt.jackknife_margin) {
      finish(EpisodeStatus::kJackknifed);
      break;
    }
    if (seg + 1 == segments.size() && sc.goal.reached(x)) {
      finish(EpisodeStatus::kParked);
      break;
    }
    if (k >= max_steps) {
      finish(EpisodeStatus::kTimeout);
      break;
    }

    const auto predicted = predict_obstacles(sc.obstacles, k, H, opt.Ts);
    ControlRequest req;
    req.x = x;
    req.step = k;
    req.s = s;
    req.path = path;
    req.obstacles = predicted;
    req.geom = sc.geometry;
    ControlOutput out;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      out = controller.compute(req);
    } catch (const std::runtime_error& err) {
      log.diagnostic = err.what();
      finish(EpisodeStatus::kTimeout);
      break;
    }
    rec.compute_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    rec.controlled = true;

    ControlInput u = opt.bounds.clamp(out.u);
    if (opt.hitch_filter && opt.hitch.enabled) {
      const HitchFilterResult hf = hitch_qp_filter(u, x, sc.geometry, opt.hitch, opt.Ts, opt.bounds);
      u = hf.u;
      rec.hitch_modified = hf.modified;
      if (hf.jackknife_risk) ++log.jackknife_warnings;
    }
    if (opt.disturbance) {
      u.jerk += opt.disturbance_jerk_std * normal(dist_gen);
      u.steer_rate += opt.disturbance_steer_std * normal(dist_gen);
      u = opt.bounds.clamp(u);
    }
    rec.u = u;
    log.records.push_back(rec);
    x = step(x, u, sc.geometry, opt.Ts, opt.limits);
  }
  return log;
}

inline Metrics metrics(const EpisodeLog& log) {
  Metrics m;
  if (log.records.empty()) throw std::invalid_argument("metrics: empty log");
  double sum = 0.0;
  std::vector<double> times;
  for (const auto& r : log.records) {
    sum += r.tracking_error;
    m.min_clearance = std::min(m.min_clearance, r.clearance);
    if (r.controlled) times.push_back(r.compute_ms);
  }
  m.tracking_error_mean = sum / static_cast<double>(log.records.size());
  if (!times.empty()) {
    m.mean_step_time = std::accumulate(times.begin(), times.end(), 0.0) / static_cast<double>(times.size());
    std::sort(times.begin(), times.end());
    const std::size_t idx = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(times.size()))) - 1;
    m.p95_step_time = times[std::min(idx, times.size() - 1)];
  }
  m.success = log.status == EpisodeStatus::kParked;
  return m;
}

/// Tracking error recomputed against `path` rather than the logged segment.
inline Metrics metrics(const EpisodeLog& log, const ReferencePath& path) {
  Metrics m = metrics(log);
  double sum = 0.0, s = 0.0;
  for (const auto& r : log.records) {
    s = path.project(r.x.px, r.x.py, s, std::max(2.0, path.length()));
    const PathPoint p = path.query(s);
    sum += std::hypot(r.x.px - p.x, r.x.py - p.y);
  }
  m.tracking_error_mean = sum / static_cast<double>(log.records.size());
  return m;
}

// ---------------------------------------------------------------------------
// Writers. Numbers use a fixed printf format so repeated runs are byte-identical.

inline std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline void write_episode_csv(std::ostream& os, const EpisodeLog& log) {
  os << "step,t,px,py,v,a,theta1,theta2,delta,jerk,steer_rate,clearance,e_c,e_l,s,segment,hitch_modified\n";
  for (const auto& r : log.records) {
    os << r.step << ',' << fmt(r.t) << ',' << fmt(r.x.px) << ',' << fmt(r.x.py) << ',' << fmt(r.x.v) << ','
       << fmt(r.x.a) << ',' << fmt(r.x.theta1) << ',' << fmt(r.x.theta2) << ',' << fmt(r.x.delta) << ','
       << fmt(r.u.jerk) << ',' << fmt(r.u.steer_rate) << ',' << fmt(r.clearance) << ',' << fmt(r.e_c) << ','
       << fmt(r.e_l) << ',' << fmt(r.s) << ',' << r.segment << ',' << (r.hitch_modified ? 1 : 0) << '\n';
  }
}

/// Time series for plotting: inputs, minimum signed distance, hitch angle and speed.
inline void write_plot_csv(std::ostream& os, const EpisodeLog& log) {
  os << "t,jerk,steer_rate,clearance,hitch_angle,v\n";
  for (const auto& r : log.records) {
    os << fmt(r.t) << ',' << fmt(r.u.jerk) << ',' << fmt(r.u.steer_rate) << ',' << fmt(r.clearance) << ','
       << fmt(wrap_angle(r.x.theta2 - r.x.theta1)) << ',' << fmt(r.x.v) << '\n';
  }
}

}  // namespace brmppi
