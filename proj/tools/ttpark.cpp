// ttpark: run tractor-trailer parking episodes and benchmark controller steps.

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "brmppi/brmppi.hpp"

namespace fs = std::filesystem;
using namespace brmppi;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitEpisode = 2;

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto dash = item.find('-');
    try {
      if (dash != std::string::npos && dash > 0) {
        const std::uint64_t a = std::stoull(item.substr(0, dash)), b = std::stoull(item.substr(dash + 1));
        if (b < a) throw std::invalid_argument("descending range");
        for (std::uint64_t s = a; s <= b; ++s) out.push_back(s);
      } else {
        out.push_back(std::stoull(item));
      }
    } catch (const std::exception&) {
      throw std::invalid_argument("bad seed list entry '" + item + "'");
    }
  }
  if (out.empty()) throw std::invalid_argument("empty seed list");
  return out;
}

std::vector<Variant> parse_variants(const std::string& name) {
  if (name == "all") return {Variant::kMppi, Variant::kMppiCollision, Variant::kBrMppi};
  return {parse_variant(name)};
}

std::string scenario_label(const Scenario& sc, const std::string& path) {
  return sc.name.empty() ? fs::path(path).stem().string() : sc.name;
}

struct EpisodeJob {
  std::size_t scenario{0};
  Variant variant{Variant::kBrMppi};
  std::uint64_t seed{0};
};

struct EpisodeResult {
  EpisodeLog log;
  Metrics m;
  std::string error;
};

std::string episode_stem(const std::string& scenario, Variant v, std::uint64_t seed) {
  return scenario + "_" + to_string(v) + "_seed" + std::to_string(seed);
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double p95_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t idx = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(v.size()))) - 1;
  return v[std::min(idx, v.size() - 1)];
}

int cmd_run(const std::vector<std::string>& scenario_paths, const std::string& controller,
            const std::string& config_path, const std::string& seeds_text, const std::string& out_dir,
            bool disturbance) {
  std::vector<Scenario> scenarios;
  std::vector<std::string> labels;
  std::vector<Variant> variants;
  std::vector<std::uint64_t> seeds;
  RunConfig rc;
  try {
    variants = parse_variants(controller);
    seeds = parse_seeds(seeds_text);
    if (!config_path.empty()) rc = load_run_config(config_path);
    for (const auto& p : scenario_paths) {
      scenarios.push_back(load_scenario(p));
      labels.push_back(scenario_label(scenarios.back(), p));
    }
    fs::create_directories(fs::path(out_dir) / "episodes");
    fs::create_directories(fs::path(out_dir) / "plots");
  } catch (const std::exception& e) {
    std::cerr << "ttpark: " << e.what() << "\n";
    return kExitConfig;
  }
  if (disturbance) rc.episode.disturbance = true;

  std::vector<EpisodeJob> jobs;
  for (std::size_t s = 0; s < scenarios.size(); ++s)
    for (Variant v : variants)
      for (std::uint64_t seed : seeds) jobs.push_back({s, v, seed});

  const int workers = workers_from_env();
  const bool parallel_episodes = static_cast<int>(jobs.size()) >= workers && workers > 1;
  std::vector<EpisodeResult> results(jobs.size());

  auto run_job = [&](std::size_t i) {
    const EpisodeJob& job = jobs[i];
    ControllerConfig cc = rc.controller;
    cc.seed = job.seed;
    cc.workers = parallel_episodes ? 1 : workers;
    EpisodeOptions eo = rc.episode_options();
    eo.disturbance_seed = detail::stream_seed(job.seed, -1, 0, 7);
    try {
      MppiController ctl(cc, rc.weights, job.variant);
      results[i].log = run_episode(scenarios[job.scenario], ctl, eo);
      results[i].m = metrics(results[i].log);
    } catch (const std::exception& e) {
      results[i].error = e.what();
    }
  };
  // Episodes are claimed in a fixed interleaved order; each writes only its own slot.
  parallel_chunks(jobs.size(), parallel_episodes ? workers : 1, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) run_job(i);
  });

  int exit_code = kExitOk;
  const fs::path out(out_dir);
  std::ofstream summary(out / "summary.csv");
  summary << "scenario,controller,seed,status,steps,tracking_error_mean,min_clearance,success\n";
  std::ofstream timing(out / "timing.csv");
  timing << "scenario,controller,seed,mean_step_ms,p95_step_ms\n";

  struct Agg {
    std::vector<double> tracking, clearance, times;
    int success{0}, episodes{0}, nonnegative{0};
  };
  std::map<std::pair<std::string, std::string>, Agg> agg;
  std::vector<std::pair<std::string, std::string>> order;

  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const EpisodeJob& job = jobs[i];
    const EpisodeResult& r = results[i];
    const std::string& label = labels[job.scenario];
    const std::string stem = episode_stem(label, job.variant, job.seed);
    if (!r.error.empty()) {
      std::cerr << "ttpark: episode " << stem << " failed: " << r.error << "\n";
      exit_code = kExitEpisode;
      continue;
    }
    if (!r.log.diagnostic.empty()) {
      std::cerr << "ttpark: episode " << stem << ": " << r.log.diagnostic << "\n";
      exit_code = kExitEpisode;
    }
    {
      std::ofstream f(out / "episodes" / (stem + ".csv"));
      write_episode_csv(f, r.log);
    }
    {
      std::ofstream f(out / "plots" / (stem + ".csv"));
      write_plot_csv(f, r.log);
    }
    summary << label << ',' << to_string(job.variant) << ',' << job.seed << ',' << to_string(r.log.status) << ','
            << r.log.records.size() << ',' << fmt(r.m.tracking_error_mean) << ',' << fmt(r.m.min_clearance) << ','
            << (r.m.success ? 1 : 0) << '\n';
    timing << label << ',' << to_string(job.variant) << ',' << job.seed << ',' << fmt(r.m.mean_step_time) << ','
           << fmt(r.m.p95_step_time) << '\n';
    const auto key = std::make_pair(label, std::string(to_string(job.variant)));
    if (!agg.count(key)) order.push_back(key);
    Agg& a = agg[key];
    a.tracking.push_back(r.m.tracking_error_mean);
    a.clearance.push_back(r.m.min_clearance);
    for (const auto& rec : r.log.records)
      if (rec.controlled) a.times.push_back(rec.compute_ms);
    a.success += r.m.success ? 1 : 0;
    a.nonnegative += r.m.min_clearance >= 0 ? 1 : 0;
    ++a.episodes;
  }

  // Aggregates per scenario and controller. Step times live in timing.csv so
  // the summary files stay identical across repeated runs.
  nlohmann::ordered_json table = nlohmann::ordered_json::array();
  std::ofstream table_csv(out / "summary_table.csv");
  table_csv << "scenario,controller,episodes,tracking_error_mean,min_clearance_mean,min_clearance_worst,"
               "clearance_nonnegative,success\n";
  for (const auto& key : order) {
    const Agg& a = agg[key];
    const double worst = *std::min_element(a.clearance.begin(), a.clearance.end());
    table_csv << key.first << ',' << key.second << ',' << a.episodes << ',' << fmt(mean_of(a.tracking)) << ','
              << fmt(mean_of(a.clearance)) << ',' << fmt(worst) << ',' << a.nonnegative << ',' << a.success << '\n';
    nlohmann::ordered_json row;
    row["scenario"] = key.first;
    row["controller"] = key.second;
    row["episodes"] = a.episodes;
    row["tracking_error_mean"] = fmt(mean_of(a.tracking));
    row["min_clearance_mean"] = fmt(mean_of(a.clearance));
    row["min_clearance_worst"] = fmt(worst);
    row["clearance_nonnegative"] = a.nonnegative;
    row["success"] = a.success;
    table.push_back(row);
    timing << key.first << ',' << key.second << ",all," << fmt(mean_of(a.times)) << ',' << fmt(p95_of(a.times))
           << '\n';
  }
  nlohmann::ordered_json doc;
  doc["episodes"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (!results[i].error.empty()) continue;
    nlohmann::ordered_json e;
    e["scenario"] = labels[jobs[i].scenario];
    e["controller"] = to_string(jobs[i].variant);
    e["seed"] = jobs[i].seed;
    e["status"] = to_string(results[i].log.status);
    e["steps"] = results[i].log.records.size();
    e["tracking_error_mean"] = fmt(results[i].m.tracking_error_mean);
    e["min_clearance"] = fmt(results[i].m.min_clearance);
    e["success"] = results[i].m.success;
    doc["episodes"].push_back(e);
  }
  doc["table"] = table;
  std::ofstream(out / "summary.json") << doc.dump(2) << "\n";

  std::cout << "scenario            controller       eps  track[m]   clear_mean[m]  clear_worst[m]  ok  >=0\n";
  for (const auto& key : order) {
    const Agg& a = agg[key];
    char line[256];
    std::snprintf(line, sizeof line, "%-19s %-16s %3d  %8.3f   %12.3f  %14.3f  %2d  %3d\n", key.first.c_str(),
                  key.second.c_str(), a.episodes, mean_of(a.tracking), mean_of(a.clearance),
                  *std::min_element(a.clearance.begin(), a.clearance.end()), a.success, a.nonnegative);
    std::cout << line;
  }
  return exit_code;
}

/// Straight reference along x with obstacles placed beside it so the
/// barriers stay active during the measured steps.
Scenario bench_scenario(int n_obstacles) {
  Scenario sc;
  sc.name = "bench";
  for (int i = 0; i <= 30; ++i) sc.reference.push_back({static_cast<double>(i), 0.0, {}, {}, Direction::kForward});
  sc.initial_state.px = 2.0;
  sc.initial_state.v = 1.0;
  for (int i = 0; i < n_obstacles; ++i) {
    ObstacleSpec o;
    o.name = "bench" + std::to_string(i);
    o.cx = 4.0 + 2.5 * (i / 2);
    o.cy = (i % 2 == 0) ? 3.2 : -3.2;
    o.ax = 1.0;
    o.ay = 1.0;
    o.exponent = (i % 3 == 0) ? 2 : 4;
    sc.obstacles.push_back(o);
  }
  sc.goal.x = 30.0;
  sc.max_episode_time = 1e6;
  return sc;
}

int cmd_bench(const std::string& controller, const std::string& config_path, const std::vector<int>& S_list,
              const std::vector<int>& H_list, const std::vector<int>& obs_list, int steps,
              const std::string& out_path) {
  RunConfig rc;
  std::vector<Variant> variants;
  try {
    variants = parse_variants(controller);
    if (!config_path.empty()) rc = load_run_config(config_path);
    if (steps < 1) throw std::invalid_argument("--steps must be >= 1");
  } catch (const std::exception& e) {
    std::cerr << "ttpark: " << e.what() << "\n";
    return kExitConfig;
  }
  std::ostringstream csv;
  csv << "controller,S,H,obstacles,steps,mean_ms,p95_ms\n";
  for (Variant v : variants)
    for (int S : S_list)
      for (int H : H_list)
        for (int n_obs : obs_list) {
          ControllerConfig cc = rc.controller;
          cc.S = S;
          cc.H = H;
          cc.workers = workers_from_env();
          const Scenario sc = bench_scenario(n_obs);
          const ReferencePath path = fit_path(sc.reference);
          std::vector<double> times;
          try {
            MppiController ctl(cc, rc.weights, v);
            State x = sc.initial_state;
            for (int k = 0; k < steps; ++k) {
              const auto predicted = predict_obstacles(sc.obstacles, k, H, cc.Ts);
              ControlRequest req;
              req.x = x;
              req.step = k;
              req.s = path.project(x.px, x.py, x.px, 2.0);
              req.path = &path;
              req.obstacles = predicted;
              req.geom = sc.geometry;
              const auto t0 = std::chrono::steady_clock::now();
              const ControlOutput out = ctl.compute(req);
              times.push_back(
                  std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
              x = step(x, out.u, sc.geometry, cc.Ts, cc.limits);
            }
          } catch (const std::exception& e) {
            std::cerr << "ttpark: bench failed: " << e.what() << "\n";
            return kExitEpisode;
          }
          csv << to_string(v) << ',' << S << ',' << H << ',' << n_obs << ',' << steps << ',' << fmt(mean_of(times))
              << ',' << fmt(p95_of(times)) << '\n';
        }
  std::cout << csv.str();
  if (!out_path.empty()) {
    std::ofstream f(out_path);
    if (!f) {
      std::cerr << "ttpark: cannot write " << out_path << "\n";
      return kExitConfig;
    }
    f << csv.str();
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tractor-trailer parking with MPPI, MPPI with collision cost, and BR-MPPI"};
  app.require_subcommand(1);

  std::vector<std::string> scenarios;
  std::string controller = "br-mppi", config, seeds = "0", out_dir = "ttpark_out";
  bool disturbance = false;
  auto* run = app.add_subcommand("run", "run closed-loop episodes");
  run->add_option("--scenario", scenarios, "scenario JSON file (repeatable)")->required()->check(CLI::ExistingFile);
  run->add_option("--controller", controller, "mppi | mppi-collision | br-mppi | all");
  run->add_option("--config", config, "run configuration JSON")->check(CLI::ExistingFile);
  run->add_option("--seeds", seeds, "seed list, e.g. 0-9 or 1,4,7");
  run->add_option("--out-dir", out_dir, "output directory");
  run->add_flag("--disturbance", disturbance, "add the configured zero-mean input disturbance");

  std::vector<int> S_list{1024}, H_list{60}, obs_list{0, 8};
  int steps = 20;
  std::string bench_controller = "br-mppi", bench_config, bench_out;
  auto* bench = app.add_subcommand("bench", "time controller steps over (S, H, obstacle count) grids");
  bench->add_option("--controller", bench_controller, "mppi | mppi-collision | br-mppi | all");
  bench->add_option("--config", bench_config, "run configuration JSON")->check(CLI::ExistingFile);
  bench->add_option("--S", S_list, "rollout counts")->delimiter(',');
  bench->add_option("--H", H_list, "horizons")->delimiter(',');
  bench->add_option("--obstacles", obs_list, "obstacle counts")->delimiter(',');
  bench->add_option("--steps", steps, "controller steps per grid point");
  bench->add_option("--out", bench_out, "also write the table to this CSV file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }
  if (*run) return cmd_run(scenarios, controller, config, seeds, out_dir, disturbance);
  return cmd_bench(bench_controller, bench_config, S_list, H_list, obs_list, steps, bench_out);
}
