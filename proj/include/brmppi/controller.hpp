#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "brmppi/barriers.hpp"
#include "brmppi/costs.hpp"
#include "brmppi/mppi.hpp"
#include "brmppi/reference_path.hpp"
#include "brmppi/types.hpp"

namespace brmppi {

struct ControlRequest {
  State x;
  long step{0};
  double s{0};  ///< current progress along `path`
  const ReferencePath* path{nullptr};
  std::span<const std::vector<ObstaclePose>> obstacles;  ///< [tau][obstacle], may be empty
  VehicleGeometry geom;
};

struct ControlOutput {
  ControlInput u;
  double v_s{0};
  MppiDiagnostics diag;
};

class Controller {
 public:
  virtual ~Controller() = default;
  virtual ControlOutput compute(const ControlRequest& req) = 0;
  /// Called when the reference segment changes.
  virtual void reset() {}
  /// Prediction horizon the controller expects obstacle poses for.
  virtual int horizon() const { return 0; }
};

/// Always outputs zero inputs. Used for harness tests.
class ZeroController final : public Controller {
 public:
  ControlOutput compute(const ControlRequest&) override { return {}; }
};

/// MPPI with a warm-started nominal sequence; the variant selects plain MPPI,
/// the collision-penalty baseline, or BR-MPPI.
class MppiController final : public Controller {
 public:
  MppiController(ControllerConfig cfg, CostWeights w, Variant variant)
      : cfg_(std::move(cfg)), w_(std::move(w)), variant_(variant) {
    cfg_.validate();
    reset();
  }

  ControlOutput compute(const ControlRequest& req) override {
    StepProblem pb;
    pb.x0 = req.x;
    pb.s0 = req.s;
    pb.path = req.path;
    pb.obstacles = req.obstacles;
    pb.geom = req.geom;
    pb.step_index = req.step;
    MppiStepResult r = mppi_step(pb, nominal_, cfg_, w_, variant_);
    nominal_ = std::move(r.shifted);
    return {r.u0, r.v_s0, r.diag};
  }

  void reset() override { nominal_.assign(static_cast<std::size_t>(cfg_.H), NominalInput{}); }
  int horizon() const override { return cfg_.H; }

  const std::vector<NominalInput>& nominal() const { return nominal_; }
  const ControllerConfig& config() const { return cfg_; }
  Variant variant() const { return variant_; }

 private:
  ControllerConfig cfg_;
  CostWeights w_;
  Variant variant_;
  std::vector<NominalInput> nominal_;
};

}  // namespace brmppi
