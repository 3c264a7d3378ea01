#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "brmppi/episode.hpp"

using namespace brmppi;

namespace {

Scenario straight_scenario() {
  Scenario sc;
  sc.name = "line";
  for (int i = 0; i <= 20; ++i) sc.reference.push_back({static_cast<double>(i), 0.0, {}, {}, Direction::kForward});
  sc.goal.x = 20.0;
  sc.max_episode_time = 1.0;
  return sc;
}

ObstacleSpec wall(double cx) {
  ObstacleSpec o;
  o.name = "wall";
  o.cx = cx;
  o.ax = 0.5;
  o.ay = 3.0;
  o.exponent = 4;
  return o;
}

// Replays a fixed input and counts resets.
class Scripted final : public Controller {
 public:
  explicit Scripted(ControlInput u) : u_(u) {}
  ControlOutput compute(const ControlRequest& req) override {
    last_s = req.s;
    ++calls;
    return {u_, 0.0, {}};
  }
  void reset() override { ++resets; }
  int horizon() const override { return 5; }

  int calls{0}, resets{0};
  double last_s{0};

 private:
  ControlInput u_;
};

}  // namespace

TEST(Episode, TimeoutAtRest) {
  const Scenario sc = straight_scenario();
  ZeroController z;
  const EpisodeLog log = run_episode(sc, z, EpisodeOptions{});
  EXPECT_EQ(log.status, EpisodeStatus::kTimeout);
  ASSERT_EQ(log.records.size(), 26u);
  EXPECT_FALSE(log.records.back().controlled);
  EXPECT_NEAR(log.records.back().t, 1.0, 1e-12);
  for (const auto& r : log.records) EXPECT_EQ(r.x.px, 0.0);
}

TEST(Episode, CollisionStopsTheEpisode) {
  Scenario sc = straight_scenario();
  sc.initial_state.v = 2.0;
  sc.max_episode_time = 10.0;
  sc.obstacles.push_back(wall(6.5));
  ZeroController z;
  const EpisodeLog log = run_episode(sc, z, EpisodeOptions{});
  EXPECT_EQ(log.status, EpisodeStatus::kCollided);
  EXPECT_LT(log.records.back().clearance, 0.0);
  EXPECT_GE(log.records[log.records.size() - 2].clearance, 0.0);
  const Metrics m = metrics(log);
  EXPECT_FALSE(m.success);
  EXPECT_LT(m.min_clearance, 0.0);
}

TEST(Episode, ParkedWhenStartingAtGoal) {
  Scenario sc = straight_scenario();
  sc.initial_state.px = 19.9;
  ZeroController z;
  const EpisodeLog log = run_episode(sc, z, EpisodeOptions{});
  EXPECT_EQ(log.status, EpisodeStatus::kParked);
  EXPECT_EQ(log.records.size(), 1u);
  EXPECT_TRUE(metrics(log).success);
}

TEST(Episode, JackknifeDetected) {
  Scenario sc = straight_scenario();
  sc.initial_state.theta2 = 0.75;
  ZeroController z;
  EXPECT_EQ(run_episode(sc, z, EpisodeOptions{}).status, EpisodeStatus::kJackknifed);
}

TEST(Episode, HitchFilterModifiesUnsafeSteering) {
  Scenario sc = straight_scenario();
  sc.initial_state.v = -1.0;
  sc.initial_state.theta2 = 0.45;
  sc.initial_state.delta = 0.3;
  sc.max_episode_time = 0.2;
  Scripted c({0.0, 0.9});
  EpisodeOptions opt;
  const EpisodeLog on = run_episode(sc, c, opt);
  int modified = 0;
  for (const auto& r : on.records) modified += r.hitch_modified;
  EXPECT_GT(modified, 0);
  opt.hitch_filter = false;
  Scripted c2({0.0, 0.9});
  for (const auto& r : run_episode(sc, c2, opt).records) EXPECT_FALSE(r.hitch_modified);
}

TEST(Episode, SwitchesSegmentAtCusp) {
  Scenario sc = straight_scenario();
  sc.reference.clear();
  for (int i = 0; i <= 5; ++i) sc.reference.push_back({static_cast<double>(i), 0.0, {}, {}, Direction::kForward});
  for (int i = 4; i >= 0; --i) sc.reference.push_back({static_cast<double>(i), 0.0, {}, {}, Direction::kReverse});
  sc.goal.x = 0.0;
  sc.goal.theta1 = sc.goal.theta2 = 0.0;
  sc.initial_state.px = 4.8;
  Scripted c({0, 0});
  const EpisodeLog log = run_episode(sc, c, EpisodeOptions{});
  EXPECT_EQ(log.records.front().segment, 1);
  EXPECT_EQ(c.resets, 1);
  EXPECT_NEAR(c.last_s, 0.2, 0.05);
}

TEST(Episode, DisturbanceIsSeeded) {
  Scenario sc = straight_scenario();
  EpisodeOptions opt;
  opt.disturbance = true;
  opt.hitch_filter = false;
  opt.disturbance_seed = 5;
  ZeroController z;
  const EpisodeLog a = run_episode(sc, z, opt), b = run_episode(sc, z, opt);
  ASSERT_EQ(a.records.size(), b.records.size());
  bool nonzero = false;
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].u, b.records[i].u);
    nonzero = nonzero || a.records[i].u.jerk != 0.0;
  }
  EXPECT_TRUE(nonzero);
}

TEST(Metrics, HandComputedLog) {
  EpisodeLog log;
  for (int i = 0; i < 20; ++i) {
    StepRecord r;
    r.tracking_error = i;
    r.clearance = 5.0 - i * 0.1;
    r.controlled = i < 19;
    r.compute_ms = i + 1.0;
    log.records.push_back(r);
  }
  const Metrics m = metrics(log);
  EXPECT_DOUBLE_EQ(m.tracking_error_mean, 9.5);
  EXPECT_DOUBLE_EQ(m.min_clearance, 5.0 - 1.9);
  EXPECT_DOUBLE_EQ(m.mean_step_time, 10.0);
  EXPECT_DOUBLE_EQ(m.p95_step_time, 19.0);
  EXPECT_FALSE(m.success);
  EXPECT_THROW(metrics(EpisodeLog{}), std::invalid_argument);
}

TEST(Writers, CsvLayout) {
  Scenario sc = straight_scenario();
  sc.max_episode_time = 0.08;
  ZeroController z;
  const EpisodeLog log = run_episode(sc, z, EpisodeOptions{});
  std::ostringstream ep, plot;
  write_episode_csv(ep, log);
  write_plot_csv(plot, log);
  std::istringstream in(ep.str());
  std::string header, row;
  std::getline(in, header);
  EXPECT_EQ(header.rfind("step,t,px,py,v,a,theta1,theta2,delta,jerk,steer_rate,clearance", 0), 0u);
  int rows = 0;
  while (std::getline(in, row)) ++rows;
  EXPECT_EQ(rows, 3);
  EXPECT_EQ(plot.str().substr(0, plot.str().find('\n')), "t,jerk,steer_rate,clearance,hitch_angle,v");
  EXPECT_EQ(fmt(INFINITY), "inf");
  EXPECT_EQ(fmt(0.1), "0.1");
}

TEST(Episode, MppiParksOnShortStraightReference) {
  Scenario sc;
  for (int i = 0; i <= 10; ++i) sc.reference.push_back({static_cast<double>(i), 0.0, {}, {}, Direction::kForward});
  sc.goal.x = 10.0;
  sc.max_episode_time = 30.0;
  ControllerConfig cc;
  cc.S = 256;
  cc.H = 40;
  cc.seed = 1;
  MppiController ctl(cc, CostWeights{}, Variant::kMppi);
  const EpisodeLog log = run_episode(sc, ctl, EpisodeOptions{});
  const Metrics m = metrics(log, fit_path(sc.reference));
  EXPECT_EQ(log.status, EpisodeStatus::kParked);
  EXPECT_TRUE(std::isinf(m.min_clearance));
  EXPECT_LT(m.tracking_error_mean, 0.1);

  // The logged inputs replayed through the plant reproduce the logged states.
  State x = sc.initial_state;
  for (const auto& r : log.records) {
    for (int i = 0; i < kStateDim; ++i) ASSERT_EQ(r.x[i], x[i]) << "step " << r.step;
    x = step(x, r.u, sc.geometry, 0.04);
  }
}

TEST(Metrics, PathTrackingError) {
  std::vector<Waypoint> w;
  for (int i = 0; i <= 10; ++i) w.push_back({static_cast<double>(i), 0.0, {}, {}, Direction::kForward});
  const ReferencePath p = fit_path(w);
  EpisodeLog log;
  for (double off : {0.1, 0.3}) {
    StepRecord r;
    r.x.px = 4.0;
    r.x.py = off;
    r.clearance = -0.2;
    log.records.push_back(r);
  }
  const Metrics m = metrics(log, p);
  EXPECT_NEAR(m.tracking_error_mean, 0.2, 1e-9);
  EXPECT_DOUBLE_EQ(m.min_clearance, -0.2);
}
