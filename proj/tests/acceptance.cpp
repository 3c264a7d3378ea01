// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any gated criterion fails. Criterion 9 is a report only.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Dense>
#include <json.hpp>

#include "brmppi/brmppi.hpp"

namespace fs = std::filesystem;
using namespace brmppi;

namespace {

const std::string kBinary = TTPARK_BINARY;
const std::string kData = TTPARK_DATA_DIR;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass{false};
  std::string detail;
  bool gated{true};
};

std::string num(double v, int prec = 3) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

int shell(const std::string& cmd) {
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

State random_state(std::mt19937_64& gen, double vmax = 3.0) {
  std::uniform_real_distribution<double> pos(-3, 3), v(-vmax, vmax), a(-2, 2), th(-3.1, 3.1), d(-0.5, 0.5),
      hitch(-0.5, 0.5);
  State x;
  x.px = pos(gen);
  x.py = pos(gen);
  x.v = v(gen);
  x.a = a(gen);
  x.theta1 = th(gen);
  x.theta2 = x.theta1 + hitch(gen);
  x.delta = d(gen);
  return x;
}

ObstacleSpec random_obstacle(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> c(-6, 6), ax(0.5, 3.0), th(-3.1, 3.1);
  ObstacleSpec o;
  o.cx = c(gen);
  o.cy = c(gen);
  o.ax = ax(gen);
  o.ay = ax(gen);
  o.theta = th(gen);
  o.exponent = std::uniform_int_distribution<int>(1, 2)(gen) * 2;
  return o;
}

// ---------------------------------------------------------------------------
// 1. Projection against a KKT solve.

Eigen::MatrixXd random_spd(Eigen::Index n, std::mt19937_64& gen) {
  std::normal_distribution<double> nd;
  Eigen::MatrixXd R = Eigen::MatrixXd::NullaryExpr(n, n, [&] { return nd(gen); });
  return R * R.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
}

Outcome criterion_projection() {
  const auto t0 = Clock::now();
  std::mt19937_64 gen(1001);
  std::normal_distribution<double> nd;
  double worst_z = 0, worst_res = 0;
  int fallbacks = 0;
  const double rhos[] = {0.0, 0.1, 10.0};
  for (int k = 0; k < 1000; ++k) {
    const int m = 1 + k % 3;
    const double rho = rhos[(k / 3) % 3];
    AugmentedInput z;
    z.u = InputVector(nd(gen), nd(gen));
    z.u_alpha = Eigen::VectorXd::NullaryExpr(m, [&] { return nd(gen); });
    ProjectionConfig cfg;
    cfg.Q1 = random_spd(2, gen);
    cfg.Q2 = random_spd(m, gen);
    cfg.rho = rho;
    cfg.jitter = 0.0;
    cfg.z_low = Eigen::VectorXd::Constant(2 + m, -2.0);
    cfg.z_high = Eigen::VectorXd::Constant(2 + m, 2.0);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, 2 + m);
    Eigen::VectorXd b(m);
    for (int i = 0; i < m; ++i) {
      A(i, 0) = nd(gen);
      A(i, 1) = nd(gen);
      A(i, 2 + i) = 0.1 + std::abs(nd(gen));
      b[i] = nd(gen);
    }
    const ProjectionResult r = soft_project(z, cfg, A, b);
    if (r.fallback) {
      ++fallbacks;
      continue;
    }
    // Stationarity of |z - zd|_W^2 + rho/2 (|z - lo|^2 + |hi - z|^2) subject to A z = b.
    const Eigen::Index n = 2 + m;
    const Eigen::MatrixXd W = cfg.weight();
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + m, n + m);
    K.topLeftCorner(n, n) = 2 * (W + rho * Eigen::MatrixXd::Identity(n, n));
    K.topRightCorner(n, m) = A.transpose();
    K.bottomLeftCorner(m, n) = A;
    Eigen::VectorXd rhs(n + m);
    rhs << 2 * W * z.stacked() + rho * (cfg.z_low + cfg.z_high), b;
    const Eigen::VectorXd oracle = K.fullPivLu().solve(rhs).head(n);
    worst_z = std::max(worst_z, (r.z - oracle).cwiseAbs().maxCoeff());
    worst_res = std::max(worst_res, (A * r.z - b).cwiseAbs().maxCoeff());
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = fallbacks == 0 && worst_z <= 1e-6 && worst_res <= 1e-6 && secs < 5.0;
  o.detail = "max |z - z_kkt| = " + sci(worst_z) + ", max residual = " + sci(worst_res) +
             ", fallbacks = " + std::to_string(fallbacks) + ", " + num(secs) + " s";
  return o;
}

// ---------------------------------------------------------------------------
// 2. Local error of the lifted barrier.

State drift_flow(State x, const VehicleGeometry& g, double T, int n = 400) {
  const double h = T / n;
  auto f = [&](const State& s) { return to_vector(drift(s, g)); };
  for (int i = 0; i < n; ++i) {
    const StateVector x0 = to_vector(x);
    const StateVector k1 = f(x);
    const StateVector k2 = f(from_vector(x0 + 0.5 * h * k1));
    const StateVector k3 = f(from_vector(x0 + 0.5 * h * k2));
    const StateVector k4 = f(from_vector(x0 + h * k3));
    x = from_vector(x0 + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4));
  }
  return x;
}

Outcome criterion_taylor() {
  const auto t0 = Clock::now();
  const VehicleGeometry g;
  const auto layout = footprint_layout(g, 3, 3);
  std::mt19937_64 gen(2002);
  double lo = INFINITY, hi = 0, sum1 = 0, sum2 = 0;
  int outside = 0, used = 0;
  for (int k = 0; k < 100; ++k) {
    const State x = random_state(gen);
    const ObstacleSpec o = random_obstacle(gen);
    const DiscSpec& d = layout[static_cast<std::size_t>(k) % layout.size()];
    auto err = [&](double Ts) {
      const double lifted = taylor_barrier(ObstaclePose::from(o, o.cx, o.cy), d, x, g, Ts, d.radius).value;
      const auto c = disc_center(drift_flow(x, g, Ts), g, d);
      return std::abs(lifted - superellipse_value(o, c.x, c.y, d.radius));
    };
    const double e1 = err(0.04), e2 = err(0.02);
    if (e1 < 1e-13) continue;  // motion too slow for the error to rise above rounding
    ++used;
    sum1 += e1;
    sum2 += e2;
    const double r = e1 / e2;
    lo = std::min(lo, r);
    hi = std::max(hi, r);
    if (r < 4.0 || r > 16.0) ++outside;
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = outside == 0 && used >= 90 && secs < 5.0;
  o.detail = "ratio range [" + num(lo) + ", " + num(hi) + "], aggregate " + num(sum1 / sum2) + ", " +
             std::to_string(outside) + "/" + std::to_string(used) + " states outside [4, 16], " + num(secs) + " s";
  return o;
}

// ---------------------------------------------------------------------------
// 3. Barrier gradients against central differences.

Outcome criterion_gradients() {
  const VehicleGeometry g;
  const auto layout = footprint_layout(g, 3, 3);
  std::mt19937_64 gen(3003);
  HitchConfig hc;
  double worst[3] = {0, 0, 0};
  auto rel = [](double fd, double an) { return std::abs(fd - an) / std::max(1.0, std::abs(an)); };
  for (int k = 0; k < 200; ++k) {
    const State x = random_state(gen);
    const ObstacleSpec o = random_obstacle(gen);
    const std::size_t di = static_cast<std::size_t>(k) % layout.size();
    // Ts = 0 leaves the plain super-ellipse value at the disc center.
    const BarrierEval plain = taylor_barrier(o, layout, di, x, g, 0.0);
    const BarrierEval lifted = taylor_barrier(o, layout, di, x, g, 0.04);
    hc.lift_order = 1 + k % 2;
    const BarrierEval hitch = hitch_barrier(x, g, hc, 0.04);
    for (int i = 0; i < kStateDim; ++i) {
      const double h = 1e-6 * std::max(1.0, std::abs(x[i]));
      State xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      const double fd0 =
          (taylor_barrier(o, layout, di, xp, g, 0.0).value - taylor_barrier(o, layout, di, xm, g, 0.0).value) /
          (2 * h);
      const double fd1 =
          (taylor_barrier(o, layout, di, xp, g, 0.04).value - taylor_barrier(o, layout, di, xm, g, 0.04).value) /
          (2 * h);
      const double fd2 = (hitch_barrier(xp, g, hc, 0.04).value - hitch_barrier(xm, g, hc, 0.04).value) / (2 * h);
      worst[0] = std::max(worst[0], rel(fd0, plain.grad_x[i]));
      worst[1] = std::max(worst[1], rel(fd1, lifted.grad_x[i]));
      worst[2] = std::max(worst[2], rel(fd2, hitch.grad_x[i]));
    }
  }
  Outcome o;
  o.pass = worst[0] <= 1e-4 && worst[1] <= 1e-4 && worst[2] <= 1e-4;
  o.detail = "max relative error: super-ellipse " + sci(worst[0]) + ", lifted " + sci(worst[1]) + ", hitch " +
             sci(worst[2]);
  return o;
}

// ---------------------------------------------------------------------------
// 4. Dynamics identities.

Outcome criterion_dynamics() {
  const VehicleGeometry g;
  std::mt19937_64 gen(4004);
  int bad = 0;
  for (int k = 0; k < 500; ++k) {
    State x = random_state(gen);
    x.v = 0;
    x.a = 0;
    const State n = step(x, {0, 0}, g, 0.04);
    for (int i = 0; i < kStateDim; ++i) bad += n[i] != x[i];

    State y = random_state(gen);
    y.theta2 = y.theta1;
    y.delta = 0;
    y.a = 0;
    const State m = step(y, {0, 0}, g, 0.04);
    bad += m.px != y.px + 0.04 * (y.v * std::cos(y.theta1));
    bad += m.py != y.py + 0.04 * (y.v * std::sin(y.theta1));
    bad += m.theta1 != y.theta1 || m.theta2 != y.theta2 || m.v != y.v || m.delta != 0.0;

    // Jerk-only inputs keep an aligned hitch aligned.
    State z = y;
    std::uniform_real_distribution<double> uj(-2, 2);
    for (int i = 0; i < 50; ++i) {
      z = step(z, {uj(gen), 0.0}, g, 0.04);
      bad += z.theta2 != z.theta1;
    }
  }
  State line;
  line.v = 1.0;
  const State l1 = step(line, {0, 0}, g, 0.04);
  bad += l1.px != 0.04 || l1.py != 0.0 || l1.v != 1.0 || l1.a != 0.0 || l1.theta1 != 0.0 || l1.theta2 != 0.0 ||
         l1.delta != 0.0;
  Outcome o;
  o.pass = bad == 0;
  o.detail = std::to_string(bad) + " mismatches (fixed point, straight line, hitch equilibrium)";
  return o;
}

// ---------------------------------------------------------------------------
// 5. Importance weights.

Outcome criterion_weights() {
  std::mt19937_64 gen(5005);
  std::uniform_real_distribution<double> u(0, 20);
  double uniform_err = 0, shift_err = 0, min_mass = 1.0;
  for (int k = 0; k < 100; ++k) {
    const std::size_t n = 2 + static_cast<std::size_t>(k % 50);
    const std::vector<double> eq(n, u(gen));
    for (double w : importance_weights(eq, 0.5 + u(gen)))
      uniform_err = std::max(uniform_err, std::abs(w - 1.0 / static_cast<double>(n)));

    std::vector<double> c(n), shifted(n);
    const double shift = u(gen) * 50 - 500;
    for (std::size_t i = 0; i < n; ++i) {
      c[i] = u(gen);
      shifted[i] = c[i] + shift;
    }
    const auto a = importance_weights(c, 1.0), b = importance_weights(shifted, 1.0);
    for (std::size_t i = 0; i < n; ++i) shift_err = std::max(shift_err, std::abs(a[i] - b[i]));

    // Argmin separated from every other cost by at least 1.
    const std::size_t best = static_cast<std::size_t>(k) % n;
    for (std::size_t i = 0; i < n; ++i) c[i] = (i == best) ? 0.0 : 1.0 + u(gen);
    min_mass = std::min(min_mass, importance_weights(c, 1e-6)[best]);
  }
  Outcome o;
  o.pass = uniform_err <= 1e-15 && shift_err <= 1e-12 && min_mass >= 0.999;
  o.detail = "uniform error " + sci(uniform_err) + ", shift error " + sci(shift_err) + ", argmin mass " +
             num(min_mass, 6);
  return o;
}

// ---------------------------------------------------------------------------
// 6 and 10. Parking scenarios through the CLI.

struct ParkingRun {
  bool ok{false};
  double seconds{0};
  fs::path dir;
};

ParkingRun run_parking(const fs::path& dir) {
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string cmd = kBinary + " run --scenario " + kData + "/scenarios/forward_parking.json --scenario " +
                          kData + "/scenarios/backward_parking.json --controller all --config " + kData +
                          "/configs/acceptance.json --seeds 0-9 --out-dir " + dir.string() + " > " +
                          (dir / "stdout.txt").string() + " 2>&1";
  const auto t0 = Clock::now();
  const int rc = shell(cmd);
  ParkingRun r;
  r.seconds = seconds_since(t0);
  r.ok = rc == 0 && fs::exists(dir / "summary.json");
  r.dir = dir;
  return r;
}

Outcome criterion_parking(const ParkingRun& run) {
  Outcome o;
  if (!run.ok) {
    o.detail = "ttpark run failed, see " + (run.dir / "stdout.txt").string();
    return o;
  }
  const auto doc = nlohmann::json::parse(slurp(run.dir / "summary.json"));
  // scenario -> controller -> min clearances
  std::map<std::string, std::map<std::string, std::vector<double>>> clear;
  for (const auto& e : doc["episodes"])
    clear[e["scenario"].get<std::string>()][e["controller"].get<std::string>()].push_back(
        std::stod(e["min_clearance"].get<std::string>()));
  auto mean = [](const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return v.empty() ? NAN : s / static_cast<double>(v.size());
  };
  bool pass = clear.size() == 2;
  std::ostringstream os;
  for (const auto& [scenario, by] : clear) {
    const auto& br = by.count("br-mppi") ? by.at("br-mppi") : std::vector<double>{};
    const int safe = static_cast<int>(std::count_if(br.begin(), br.end(), [](double c) { return c >= 0; }));
    const double br_mean = mean(br);
    const double m0 = by.count("mppi") ? mean(by.at("mppi")) : NAN;
    const double m1 = by.count("mppi-collision") ? mean(by.at("mppi-collision")) : NAN;
    const bool ok = br.size() == 10 && safe >= 8 && m0 < br_mean && m1 < br_mean;
    pass = pass && ok;
    os << scenario << ": br-mppi " << safe << "/" << br.size() << " >= 0, mean " << num(br_mean) << "; mppi mean "
       << num(m0) << "; mppi-collision mean " << num(m1) << (ok ? "" : " [pattern not met]") << ". ";
  }
  const bool fast = run.seconds < 600.0;
  o.pass = pass && fast;
  os << "runtime " << num(run.seconds, 4) << " s" << (fast ? "" : " [exceeds 600 s]");
  o.detail = os.str();
  return o;
}

Outcome criterion_determinism(const ParkingRun& a, const ParkingRun& b) {
  Outcome o;
  if (!a.ok || !b.ok) {
    o.detail = "a parking run failed";
    return o;
  }
  std::vector<std::string> differ;
  for (const char* f : {"summary.json", "summary.csv", "summary_table.csv"})
    if (slurp(a.dir / f) != slurp(b.dir / f)) differ.push_back(f);
  o.pass = differ.empty();
  o.detail = differ.empty() ? "summary.json, summary.csv, summary_table.csv identical"
                            : "differing: " + differ.front();
  return o;
}

// ---------------------------------------------------------------------------
// 7. Hitch filter under adversarial steering while reversing.

class SinusoidalSteering final : public Controller {
 public:
  ControlOutput compute(const ControlRequest& req) override {
    const double t = static_cast<double>(req.step) * 0.04;
    const double delta_ref = 0.55 * std::sin(0.8 * t);
    ControlOutput out;
    out.u.jerk = 4.0 * (-1.0 - req.x.v) - 2.0 * req.x.a;
    out.u.steer_rate = 5.0 * (delta_ref - req.x.delta);
    return out;
  }
};

Scenario reverse_scenario() {
  Scenario sc;
  sc.name = "reverse";
  sc.direction = Direction::kReverse;
  for (int i = 0; i <= 40; ++i) sc.reference.push_back({-static_cast<double>(i), 0.0, {}, {}, Direction::kReverse});
  sc.goal.x = -40.0;
  sc.initial_state.v = -1.0;
  sc.max_episode_time = 10.0;
  return sc;
}

Outcome criterion_hitch() {
  const Scenario sc = reverse_scenario();
  EpisodeOptions opt;
  opt.jackknife_margin = 10.0;  // let the unfiltered run show how far the hitch folds
  const HitchConfig& hc = opt.hitch;
  auto worst_excess = [&](const EpisodeLog& log, double& max_hitch) {
    double excess = -INFINITY;
    max_hitch = 0;
    for (const auto& r : log.records) {
      const double d = std::abs(wrap_angle(r.x.theta2 - r.x.theta1));
      max_hitch = std::max(max_hitch, d);
      excess = std::max(excess, d - (hc.delta_bar - hc.kappa * std::abs(r.x.v)));
    }
    return excess;
  };
  SinusoidalSteering c1, c2;
  const EpisodeLog filtered = run_episode(sc, c1, opt);
  opt.hitch_filter = false;
  const EpisodeLog raw = run_episode(sc, c2, opt);
  double h_f = 0, h_r = 0;
  const double ex_f = worst_excess(filtered, h_f);
  const double ex_r = worst_excess(raw, h_r);
  double v_sum = 0;
  for (const auto& r : filtered.records) v_sum += r.x.v;
  const double duration = filtered.records.back().t;
  Outcome o;
  o.pass = ex_f <= 0.05 && duration >= 10.0 - 1e-9;
  o.detail = "filtered: max |hitch| " + num(h_f) + " rad, worst excess over bound " + num(ex_f) +
             " rad, mean v " + num(v_sum / static_cast<double>(filtered.records.size())) + " m/s over " +
             num(duration) + " s; unfiltered: max |hitch| " + num(h_r) + " rad, excess " + num(ex_r);
  return o;
}

// ---------------------------------------------------------------------------
// 8. BR-MPPI reduces to MPPI without obstacles.

Outcome criterion_equivalence() {
  Scenario sc;
  sc.name = "line";
  for (int i = 0; i <= 30; ++i) sc.reference.push_back({static_cast<double>(i), 0.0, {}, {}, Direction::kForward});
  sc.goal.x = 30.0;
  sc.initial_state.py = 0.8;
  sc.initial_state.theta1 = sc.initial_state.theta2 = 0.1;
  sc.max_episode_time = 4.0;
  ControllerConfig cc;
  cc.S = 256;
  cc.H = 40;
  cc.seed = 8;
  cc.Sigma_alpha = 0.0;
  cc.hitch_in_rollouts = false;
  EpisodeOptions opt;
  opt.hitch_filter = false;
  MppiController br(cc, CostWeights{}, Variant::kBrMppi), plain(cc, CostWeights{}, Variant::kMppi);
  const EpisodeLog a = run_episode(sc, br, opt), b = run_episode(sc, plain, opt);
  double dev = a.records.size() == b.records.size() ? 0.0 : INFINITY;
  for (std::size_t k = 0; k < std::min(a.records.size(), b.records.size()); ++k)
    for (int i = 0; i < kStateDim; ++i) dev = std::max(dev, std::abs(a.records[k].x[i] - b.records[k].x[i]));
  Outcome o;
  o.pass = dev <= 1e-9;
  o.detail = "max state deviation " + sci(dev) + " over " + std::to_string(a.records.size()) + " steps";
  return o;
}

// ---------------------------------------------------------------------------
// 9. Throughput report.

Outcome criterion_bench(const fs::path& work) {
  Outcome o;
  o.gated = false;
  const fs::path csv = work / "bench.csv";
  const int rc = shell(kBinary + " bench --controller all --config " + kData +
                       "/configs/acceptance.json --S 1024 --H 60 --obstacles 8 --steps 20 --out " + csv.string() +
                       " > /dev/null 2>&1");
  if (rc != 0) {
    o.detail = "bench failed";
    return o;
  }
  std::istringstream in(slurp(csv));
  std::string line;
  std::getline(in, line);
  std::ostringstream os;
  double br_ms = INFINITY;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() < 7) continue;
    os << f[0] << " " << num(std::stod(f[5])) << " ms (p95 " << num(std::stod(f[6])) << "); ";
    if (f[0] == "br-mppi") br_ms = std::stod(f[5]);
  }
  o.pass = br_ms <= 100.0;
  os << "S=1024 H=60 8 obstacles, desk target 100 ms; GPU figure from the original work is not comparable";
  o.detail = os.str();
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::string work = "acceptance_runs";
  std::vector<int> only;
  app.add_option("--work-dir", work, "directory for CLI run outputs");
  app.add_option("--only", only, "run only these criteria")->delimiter(',');
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(work);
  const std::set<int> selected(only.begin(), only.end());
  auto want = [&](int k) { return selected.empty() || selected.count(k) > 0; };

  int failed = 0;
  auto report = [&](int k, const std::string& name, const Outcome& o) {
    const char* tag = o.pass ? "PASS" : (o.gated ? "FAIL" : "FAIL (report only)");
    std::cout << "criterion " << k << " [" << name << "]: " << tag << " - " << o.detail << std::endl;
    if (!o.pass && o.gated) ++failed;
  };

  if (want(1)) report(1, "projection vs KKT", criterion_projection());
  if (want(2)) report(2, "lifted barrier error order", criterion_taylor());
  if (want(3)) report(3, "barrier gradients", criterion_gradients());
  if (want(4)) report(4, "dynamics identities", criterion_dynamics());
  if (want(5)) report(5, "importance weights", criterion_weights());
  ParkingRun first;
  if (want(6) || want(10)) first = run_parking(fs::path(work) / "parking_a");
  if (want(6)) report(6, "parking clearance pattern", criterion_parking(first));
  if (want(7)) report(7, "hitch filter in reverse", criterion_hitch());
  if (want(8)) report(8, "BR-MPPI reduces to MPPI", criterion_equivalence());
  if (want(9)) report(9, "throughput", criterion_bench(work));
  if (want(10)) report(10, "determinism", criterion_determinism(first, run_parking(fs::path(work) / "parking_b")));

  std::cout << (failed == 0 ? "all gated criteria passed" : std::to_string(failed) + " gated criteria failed")
            << std::endl;
  return failed == 0 ? 0 : 1;
}
