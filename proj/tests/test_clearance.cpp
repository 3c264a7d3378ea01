#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "brmppi/clearance.hpp"

using namespace brmppi;

namespace {

ObstaclePose circle(double cx, double cy, double r) {
  ObstaclePose o;
  o.cx = cx;
  o.cy = cy;
  o.ax = o.ay = r;
  return o;
}

// Distance from a point to a solid oriented rectangle.
double rect_distance(const Rect& r, double px, double py) {
  const double dx = px - r.cx, dy = py - r.cy;
  const double lx = std::abs(r.c * dx + r.s * dy) - r.half_length;
  const double ly = std::abs(-r.s * dx + r.c * dy) - r.half_width;
  return std::hypot(std::max(lx, 0.0), std::max(ly, 0.0)) + std::min(std::max(lx, ly), 0.0);
}

}  // namespace

TEST(Clearance, InfiniteWithoutObstacles) {
  EXPECT_TRUE(std::isinf(clearance(State{}, VehicleGeometry{}, {})));
}

TEST(Clearance, CircleBesideTractor) {
  const std::vector<ObstaclePose> o{circle(1.5, 3.0, 1.0)};
  EXPECT_NEAR(clearance(State{}, VehicleGeometry{}, o), 1.0, 1e-3);
}

TEST(Clearance, PenetrationDepthIsNegative) {
  const std::vector<ObstaclePose> o{circle(1.5, 1.5, 1.0)};
  EXPECT_NEAR(clearance(State{}, VehicleGeometry{}, o), -0.5, 5e-3);
}

TEST(Clearance, BodyRectanglesMatchGeometry) {
  const VehicleGeometry g;
  const auto r = body_rectangles(State{}, g);
  EXPECT_NEAR(r[0].cx - r[0].half_length, -g.tractor_overhang_rear, 1e-12);
  EXPECT_NEAR(r[0].cx + r[0].half_length, g.l1 + g.tractor_overhang_front, 1e-12);
  EXPECT_NEAR(r[1].cx + r[1].half_length, -g.lh, 1e-12);
  EXPECT_NEAR(r[1].cx - r[1].half_length, -g.lh - g.l2 - g.trailer_overhang_rear, 1e-12);
  EXPECT_DOUBLE_EQ(r[1].half_width, 0.5 * g.w_trailer);
}

TEST(Clearance, MatchesRectangleDistanceForCircles) {
  const VehicleGeometry g;
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> pos(-12, 12), th(-3.1, 3.1), hitch(-0.5, 0.5), rad(0.3, 2.0);
  int checked = 0;
  for (int k = 0; k < 200; ++k) {
    State x;
    x.px = pos(gen) * 0.2;
    x.py = pos(gen) * 0.2;
    x.theta1 = th(gen);
    x.theta2 = x.theta1 + hitch(gen);
    const ObstaclePose o = circle(pos(gen), pos(gen), rad(gen));
    const auto rects = body_rectangles(x, g);
    const double want = std::min(rect_distance(rects[0], o.cx, o.cy), rect_distance(rects[1], o.cx, o.cy)) - o.ax;
    if (want <= 0.05) continue;
    const std::vector<ObstaclePose> obs{o};
    EXPECT_NEAR(clearance(x, g, obs), want, 5e-3);
    ++checked;
  }
  EXPECT_GT(checked, 50);
}

TEST(Clearance, RigidMotionInvariance) {
  const VehicleGeometry g;
  State x;
  x.theta2 = 0.3;
  ObstaclePose box = circle(2.0, -3.5, 1.0);
  box.exponent = 4;
  box.ay = 0.6;
  const std::vector<ObstaclePose> o{box};
  const double base = clearance(x, g, o);

  const double rot = 0.7, tx = 5.0, ty = -2.0;
  const double c = std::cos(rot), s = std::sin(rot);
  State y = x;
  y.px = tx;
  y.py = ty;
  y.theta1 += rot;
  y.theta2 += rot;
  ObstaclePose moved = box;
  moved.cx = tx + c * box.cx - s * box.cy;
  moved.cy = ty + s * box.cx + c * box.cy;
  moved.cos_t = c;
  moved.sin_t = s;
  const std::vector<ObstaclePose> o2{moved};
  EXPECT_NEAR(clearance(y, g, o2), base, 5e-3);
}

TEST(Clearance, TakesMinimumOverObstacles) {
  const std::vector<ObstaclePose> a{circle(1.5, 4.0, 1.0)}, b{circle(-8.0, 0.0, 0.5)};
  std::vector<ObstaclePose> both = a;
  both.push_back(b[0]);
  const double ca = clearance(State{}, VehicleGeometry{}, a), cb = clearance(State{}, VehicleGeometry{}, b);
  EXPECT_DOUBLE_EQ(clearance(State{}, VehicleGeometry{}, both), std::min(ca, cb));
}

TEST(Boundary, SuperellipsePointsLieOnTheCurve) {
  ObstaclePose o = circle(1.0, -2.0, 1.5);
  o.ay = 0.7;
  o.exponent = 4;
  o.cos_t = std::cos(0.4);
  o.sin_t = std::sin(0.4);
  const auto pts = superellipse_boundary(o, 1.0);
  EXPECT_EQ(pts.size(), 360u);
  for (const auto& p : pts) EXPECT_NEAR(superellipse_value<double>(o, p.x, p.y, 0.0), 0.0, 1e-12);
}

TEST(Boundary, RectangleSamplesOnEdges) {
  const Rect r{0.0, 0.0, 1.0, 0.0, 2.0, 1.0};
  const auto pts = rect_boundary(r, 0.1);
  EXPECT_EQ(pts.size(), 120u);
  for (const auto& p : pts) EXPECT_NEAR(rect_distance(r, p.x, p.y), 0.0, 1e-12);
}
