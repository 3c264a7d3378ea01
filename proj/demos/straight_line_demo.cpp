// Drives the tractor-trailer along a straight lane past a box that blocks
// half of it, once with each controller, and prints how close each one came.

#include <cstdio>

#include "brmppi/brmppi.hpp"

using namespace brmppi;

int main() {
  Scenario sc;
  sc.name = "lane";
  for (int i = 0; i <= 40; ++i) sc.reference.push_back({static_cast<double>(i), 0.0, {}, {}, Direction::kForward});
  sc.goal.x = 40.0;
  sc.initial_state.v = 1.0;
  sc.max_episode_time = 12.0;
  ObstacleSpec box;
  box.name = "box";
  box.cx = 15.0;
  box.cy = 1.8;
  box.ax = 1.0;
  box.ay = 1.0;
  box.exponent = 4;
  sc.obstacles.push_back(box);

  ControllerConfig cc;
  cc.S = 512;
  cc.H = 50;
  cc.seed = 1;
  cc.activation_threshold = 0.5;
  cc.closest_disc_rows = true;

  std::printf("%-16s %-9s %8s %14s %12s\n", "controller", "status", "steps", "min clear [m]", "step [ms]");
  for (Variant v : {Variant::kMppi, Variant::kMppiCollision, Variant::kBrMppi}) {
    MppiController ctl(cc, CostWeights{}, v);
    const EpisodeLog log = run_episode(sc, ctl, EpisodeOptions{});
    const Metrics m = metrics(log);
    std::printf("%-16s %-9s %8zu %14.3f %12.1f\n", to_string(v), to_string(log.status), log.records.size(),
                m.min_clearance, m.mean_step_time);
  }
}
