#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "brmppi/types.hpp"

namespace brmppi {

enum class Direction { kForward, kReverse };

inline const char* to_string(Direction d) { return d == Direction::kForward ? "forward" : "reverse"; }

inline Direction parse_direction(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "forward" || s == "f" || s == "1" || s == "+1") return Direction::kForward;
  if (s == "reverse" || s == "backward" || s == "r" || s == "b" || s == "-1")
    return Direction::kReverse;
  throw std::invalid_argument("unknown direction '" + s + "'");
}

/// Planner output sample. Headings are optional; when absent they are
/// derived from the fitted curve tangent.
struct Waypoint {
  double x{0};
  double y{0};
  std::optional<double> theta1;
  std::optional<double> theta2;
  Direction direction{Direction::kForward};
};

struct PathPoint {
  double x{0};
  double y{0};
  double theta1{0};
  double theta2{0};
};

struct PathFitOptions {
  double max_spacing{2.0};
  double duplicate_tol{1e-9};
  int lookup_samples_per_segment{16};
};

namespace detail {

// 10-point Gauss-Legendre nodes and weights on [-1, 1].
inline constexpr std::array<double, 10> kGaussNodes = {
    -0.9739065285171717, -0.8650633666889845, -0.6794095682990244, -0.4333953941292472,
    -0.1488743389816312, 0.1488743389816312,  0.4333953941292472,  0.6794095682990244,
    0.8650633666889845,  0.9739065285171717};
inline constexpr std::array<double, 10> kGaussWeights = {
    0.0666713443086881, 0.1494513491505806, 0.2190863625159820, 0.2692667193099963,
    0.2955242247147529, 0.2955242247147529, 0.2692667193099963, 0.2190863625159820,
    0.1494513491505806, 0.0666713443086881};

/// Natural cubic spline through (t_i, y_i); returns per-segment coefficients
/// y(t) = a + b dt + c dt^2 + d dt^3 with dt = t - t_i.
struct CubicSegment {
  double a, b, c, d;
  double eval(double dt) const { return a + dt * (b + dt * (c + dt * d)); }
  double deriv(double dt) const { return b + dt * (2.0 * c + dt * 3.0 * d); }
};

inline std::vector<CubicSegment> natural_cubic(const std::vector<double>& t,
                                               const std::vector<double>& y) {
  const std::size_t n = t.size() - 1;
  std::vector<double> h(n), m(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) h[i] = t[i + 1] - t[i];
  // Tridiagonal solve for second derivatives with natural end conditions.
  std::vector<double> diag(n + 1, 1.0), upper(n + 1, 0.0), rhs(n + 1, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    diag[i] = 2.0 * (h[i - 1] + h[i]);
    upper[i] = h[i];
    rhs[i] = 6.0 * ((y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1]);
  }
  // Thomas algorithm; lower[i] = h[i-1] for interior rows, 0 at the ends.
  std::vector<double> c_prime(n + 1, 0.0), d_prime(n + 1, 0.0);
  c_prime[0] = upper[0] / diag[0];
  d_prime[0] = rhs[0] / diag[0];
  for (std::size_t i = 1; i <= n; ++i) {
    const double lower = (i < n) ? h[i - 1] : 0.0;
    const double denom = diag[i] - lower * c_prime[i - 1];
    c_prime[i] = upper[i] / denom;
    d_prime[i] = (rhs[i] - lower * d_prime[i - 1]) / denom;
  }
  m[n] = d_prime[n];
  for (std::size_t i = n; i-- > 0;) m[i] = d_prime[i] - c_prime[i] * m[i + 1];

  std::vector<CubicSegment> seg(n);
  for (std::size_t i = 0; i < n; ++i) {
    seg[i].a = y[i];
    seg[i].b = (y[i + 1] - y[i]) / h[i] - h[i] * (2.0 * m[i] + m[i + 1]) / 6.0;
    seg[i].c = m[i] / 2.0;
    seg[i].d = (m[i + 1] - m[i]) / (6.0 * h[i]);
  }
  return seg;
}

}  // namespace detail

/// Arc-length parameterized cubic spline through planner waypoints.
///
/// The curve is fitted in the cumulative chord parameter and re-parameterized
/// by a monotone table of (arc length, chord parameter) pairs. Immutable after
/// construction; every query is const.
class ReferencePath {
 public:
  ReferencePath() = default;

  static ReferencePath fit(const std::vector<Waypoint>& wps, const PathFitOptions& opt = {}) {
    if (wps.size() < 4) throw std::invalid_argument("fit_path: at least 4 waypoints required");
    for (std::size_t i = 0; i < wps.size(); ++i) {
      if (!std::isfinite(wps[i].x) || !std::isfinite(wps[i].y))
        throw std::invalid_argument("fit_path: non-finite waypoint " + std::to_string(i));
      if (wps[i].direction != wps.front().direction)
        throw std::invalid_argument(
            "fit_path: mixed directions; split the path at cusps first");
    }
    ReferencePath p;
    p.direction_ = wps.front().direction;
    const std::size_t n = wps.size();
    p.knot_t_.assign(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) {
      const double dist = std::hypot(wps[i].x - wps[i - 1].x, wps[i].y - wps[i - 1].y);
      if (dist <= opt.duplicate_tol)
        throw std::invalid_argument("fit_path: duplicate consecutive waypoints at index " +
                                    std::to_string(i));
      if (dist > opt.max_spacing)
        throw std::invalid_argument("fit_path: waypoint spacing exceeds limit at index " +
                                    std::to_string(i));
      p.knot_t_[i] = p.knot_t_[i - 1] + dist;
    }
    std::vector<double> xs(n), ys(n);
    for (std::size_t i = 0; i < n; ++i) {
      xs[i] = wps[i].x;
      ys[i] = wps[i].y;
    }
    p.sx_ = detail::natural_cubic(p.knot_t_, xs);
    p.sy_ = detail::natural_cubic(p.knot_t_, ys);

    // Arc-length table, refined inside each segment.
    const int m = std::max(1, opt.lookup_samples_per_segment);
    p.table_s_.clear();
    p.table_t_.clear();
    p.knot_s_.assign(n, 0.0);
    p.table_s_.push_back(0.0);
    p.table_t_.push_back(0.0);
    double s_acc = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double t0 = p.knot_t_[i];
      const double h = p.knot_t_[i + 1] - t0;
      for (int j = 0; j < m; ++j) {
        const double ta = t0 + h * j / m;
        const double tb = t0 + h * (j + 1) / m;
        s_acc += p.arc_length_between(i, ta, tb);
        p.table_s_.push_back(s_acc);
        p.table_t_.push_back(j + 1 == m ? p.knot_t_[i + 1] : tb);
      }
      p.knot_s_[i + 1] = s_acc;
    }
    p.length_ = s_acc;

    // Heading tables at the knots, unwrapped for continuous interpolation.
    p.derived_headings_ = false;
    for (const auto& w : wps)
      if (!w.theta1 || !w.theta2) p.derived_headings_ = true;
    if (!p.derived_headings_) {
      p.knot_theta1_.resize(n);
      p.knot_theta2_.resize(n);
      p.knot_theta1_[0] = *wps[0].theta1;
      p.knot_theta2_[0] = *wps[0].theta2;
      for (std::size_t i = 1; i < n; ++i) {
        p.knot_theta1_[i] = p.knot_theta1_[i - 1] + wrap_angle(*wps[i].theta1 - p.knot_theta1_[i - 1]);
        p.knot_theta2_[i] = p.knot_theta2_[i - 1] + wrap_angle(*wps[i].theta2 - p.knot_theta2_[i - 1]);
      }
    }
    return p;
  }

  double length() const { return length_; }
  Direction direction() const { return direction_; }
  bool headings_derived() const { return derived_headings_; }
  const std::vector<double>& knot_arc_lengths() const { return knot_s_; }

  /// Reference point at arc length s; s is clamped to [0, L].
  PathPoint query(double s) const {
    const auto [seg, dt] = locate(s);
    PathPoint out;
    out.x = sx_[seg].eval(dt);
    out.y = sy_[seg].eval(dt);
    if (derived_headings_) {
      double tangent = std::atan2(sy_[seg].deriv(dt), sx_[seg].deriv(dt));
      if (direction_ == Direction::kReverse) tangent += std::numbers::pi;
      out.theta1 = wrap_angle(tangent);
      out.theta2 = out.theta1;
    } else {
      const double sc = std::clamp(s, 0.0, length_);
      const double span = knot_s_[seg + 1] - knot_s_[seg];
      const double frac = span > 0 ? std::clamp((sc - knot_s_[seg]) / span, 0.0, 1.0) : 0.0;
      out.theta1 = wrap_angle(knot_theta1_[seg] + frac * (knot_theta1_[seg + 1] - knot_theta1_[seg]));
      out.theta2 = wrap_angle(knot_theta2_[seg] + frac * (knot_theta2_[seg + 1] - knot_theta2_[seg]));
    }
    return out;
  }

  /// Unit tangent (dx/ds, dy/ds) in the direction of increasing s.
  std::array<double, 2> tangent(double s) const {
    const auto [seg, dt] = locate(s);
    const double dx = sx_[seg].deriv(dt), dy = sy_[seg].deriv(dt);
    const double n = std::hypot(dx, dy);
    return {dx / n, dy / n};
  }

  /// Arc length of the closest path point within [s_hint - window, s_hint + window].
  /// Grid search followed by golden-section refinement; deterministic.
  double project(double px, double py, double s_hint, double window) const {
    if (!(window > 0)) throw std::invalid_argument("project_point: window must be positive");
    const double lo = std::clamp(s_hint - window, 0.0, length_);
    const double hi = std::clamp(s_hint + window, 0.0, length_);
    if (hi <= lo) return lo;
    auto dist2 = [&](double s) {
      const PathPoint q = query(s);
      return (q.x - px) * (q.x - px) + (q.y - py) * (q.y - py);
    };
    const int n = std::max(8, static_cast<int>(std::ceil((hi - lo) / 0.05)));
    const double h = (hi - lo) / n;
    int best = 0;
    double best_d = dist2(lo);
    for (int i = 1; i <= n; ++i) {
      const double d = dist2(lo + h * i);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    double a = std::max(lo, lo + h * (best - 1));
    double b = std::min(hi, lo + h * (best + 1));
    constexpr double inv_phi = 0.6180339887498949;
    double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
    double fc = dist2(c), fd = dist2(d);
    while (b - a > 1e-7) {
      if (fc < fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - inv_phi * (b - a);
        fc = dist2(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + inv_phi * (b - a);
        fd = dist2(d);
      }
    }
    const double s_star = 0.5 * (a + b);
    // Keep the grid point if refinement wandered off a non-unimodal bracket.
    return dist2(s_star) <= best_d ? s_star : lo + h * best;
  }

 private:
  // Maps arc length to (segment index, local chord offset).
  std::pair<std::size_t, double> locate(double s) const {
    const double sc = std::clamp(s, 0.0, length_);
    auto it = std::upper_bound(table_s_.begin(), table_s_.end(), sc);
    std::size_t j = static_cast<std::size_t>(std::distance(table_s_.begin(), it));
    j = std::clamp<std::size_t>(j, 1, table_s_.size() - 1);
    const double s0 = table_s_[j - 1], s1 = table_s_[j];
    const double frac = s1 > s0 ? (sc - s0) / (s1 - s0) : 0.0;
    const double t = table_t_[j - 1] + frac * (table_t_[j] - table_t_[j - 1]);
    auto kt = std::upper_bound(knot_t_.begin(), knot_t_.end(), t);
    std::size_t seg = static_cast<std::size_t>(std::distance(knot_t_.begin(), kt));
    seg = std::clamp<std::size_t>(seg, 1, knot_t_.size() - 1) - 1;
    return {seg, t - knot_t_[seg]};
  }

  double arc_length_between(std::size_t seg, double ta, double tb) const {
    const double half = 0.5 * (tb - ta), mid = 0.5 * (tb + ta);
    double sum = 0.0;
    for (std::size_t k = 0; k < detail::kGaussNodes.size(); ++k) {
      const double dt = mid + half * detail::kGaussNodes[k] - knot_t_[seg];
      sum += detail::kGaussWeights[k] * std::hypot(sx_[seg].deriv(dt), sy_[seg].deriv(dt));
    }
    return half * sum;
  }

  Direction direction_{Direction::kForward};
  double length_{0};
  bool derived_headings_{true};
  std::vector<double> knot_t_, knot_s_;
  std::vector<detail::CubicSegment> sx_, sy_;
  std::vector<double> table_s_, table_t_;
  std::vector<double> knot_theta1_, knot_theta2_;
};

inline ReferencePath fit_path(const std::vector<Waypoint>& wps, const PathFitOptions& opt = {}) {
  return ReferencePath::fit(wps, opt);
}

/// Splits a waypoint list at direction changes. The cusp waypoint ends one
/// segment and starts the next.
inline std::vector<std::vector<Waypoint>> split_at_cusps(const std::vector<Waypoint>& wps) {
  std::vector<std::vector<Waypoint>> out;
  if (wps.empty()) return out;
  out.push_back({wps.front()});
  for (std::size_t i = 1; i < wps.size(); ++i) {
    if (wps[i].direction != out.back().back().direction) {
      Waypoint cusp = out.back().back();
      cusp.direction = wps[i].direction;
      out.push_back({cusp});
    }
    out.back().push_back(wps[i]);
  }
  return out;
}

/// Parses the waypoint text format: one record per line,
/// `x,y,theta1,theta2,direction`. Blank lines, lines starting with '#', and a
/// header line beginning with "x" are skipped. Empty heading fields mean
/// "derive from the curve tangent".
inline std::vector<Waypoint> parse_waypoints(std::istream& in) {
  std::vector<Waypoint> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    if (line[first] == 'x' || line[first] == 'X') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) {
      f.erase(0, f.find_first_not_of(" \t\r"));
      f.erase(f.find_last_not_of(" \t\r") + 1);
      fields.push_back(f);
    }
    if (fields.size() < 2)
      throw std::invalid_argument("waypoints line " + std::to_string(line_no) +
                                  ": expected x,y[,theta1,theta2,direction]");
    Waypoint w;
    try {
      w.x = std::stod(fields[0]);
      w.y = std::stod(fields[1]);
      if (fields.size() > 2 && !fields[2].empty()) w.theta1 = std::stod(fields[2]);
      if (fields.size() > 3 && !fields[3].empty()) w.theta2 = std::stod(fields[3]);
      if (fields.size() > 4 && !fields[4].empty()) w.direction = parse_direction(fields[4]);
    } catch (const std::exception& e) {
      throw std::invalid_argument("waypoints line " + std::to_string(line_no) + ": " + e.what());
    }
    out.push_back(w);
  }
  return out;
}

inline std::vector<Waypoint> read_waypoints(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open waypoint file " + path);
  return parse_waypoints(in);
}

}  // namespace brmppi
