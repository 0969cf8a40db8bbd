#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "hcfd/core/field.hpp"
#include "hcfd/integrator/metrics.hpp"
#include "hcfd/scheme/residual.hpp"
#include "hcfd/util/worker_pool.hpp"

namespace hcfd::integrator {

/// R(Q) for every local block, interior cells only.
struct ResidualField {
  std::vector<InteriorArray> blocks;
};

struct TimeControls {
  double cfl = 0.5;
  double dt = 0.0;        ///< used as is when fixedDt is set
  int maxIters = 50;
  double convergenceTol = 1e-8;  ///< relative L2 drop of R; <= 0 disables
  bool fixedDt = false;
  double finalTime = 0.0;  ///< > 0: stop there, shortening the last step

  void validate() const;
};

class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// Which cells of a block a residual pass covers. Interior cells are at least
/// the halo width away from every face, so their stencils never read ghosts.
enum class Region { All, Interior, Shell };

/// Disjoint boxes covering `region` of an interior of the given extent.
std::vector<IndexBox> regionBoxes(const Index3& extent, int halo, Region region);

struct ResidualOptions {
  int tileSize = 16;
  WorkerPool* pool = nullptr;  ///< null: run on the caller
};

/// Evaluates R = sum of the six directional contributions. Each (block, task,
/// tile) item writes its own buffer and buffers are added per cell in a fixed
/// order, so results do not depend on scheduling, worker count or tiling.
class ResidualEngine {
 public:
  ResidualEngine(GasModel gas, ResidualOptions options = {});

  const GasModel& gas() const { return gas_; }
  const ResidualOptions& options() const { return options_; }
  void setOptions(const ResidualOptions& o) { options_ = o; }

  /// Computes R on `region` of the listed blocks (all when null). `out` is
  /// resized to the block list on first use.
  void compute(const std::vector<BlockField>& q, ResidualField& out, Region region = Region::All,
               const std::vector<int>* subset = nullptr);

  /// Allocates `out` slots and scratch for the listed blocks (all when null).
  /// compute() does this itself; engines sharing one `out` from several
  /// threads call it up front.
  void prepare(const std::vector<BlockField>& q, ResidualField& out,
               const std::vector<int>* subset = nullptr);

  /// Fills one buffer per direction on the caller and sums them afterwards,
  /// skipping the worker pool. Reference for scheduling invariance.
  void computeSerial(const std::vector<BlockField>& q, ResidualField& out);

  /// Scratch reused across steps: Q^n interiors and the stage residual.
  struct StepWorkspace {
    std::vector<InteriorArray> base;
    ResidualField residual;
  };
  StepWorkspace& workspace() { return workspace_; }

 private:
  struct BlockBuffers {
    std::array<InteriorArray, 6> slot;  ///< computeSerial only
    scheme::PrimitiveCache prims;
  };
  void combine(const BlockField& q, std::size_t b, const std::vector<IndexBox>& boxes,
               ResidualField& out) const;

  GasModel gas_;
  ResidualOptions options_;
  std::vector<BlockBuffers> buffers_;
  StepWorkspace workspace_;
};

/// dt = cfl / max over cells (sum_d lambda_d / h_d + 2 mu gamma / (Pr rho h_min^2)),
/// the viscous term only for viscous gases. Returns +inf for no cells.
double stableDt(const std::vector<BlockField>& q, const GasModel& gas, double cfl);
double stableDt(const BlockField& q, const GasModel& gas, double cfl);

/// Stage combinations of the three-stage scheme:
///   q1 = qn + dt r,  q2 = 3/4 qn + 1/4 (q1 + dt r),  q3 = 1/3 qn + 2/3 (q2 + dt r).
/// Evaluated as increments on qn, so a zero residual leaves qn bit for bit.
inline double rk3Stage1(double qn, double r, double dt) { return qn + dt * r; }
inline double rk3Stage2(double qn, double q1, double r, double dt) {
  return qn + 0.25 * ((q1 - qn) + dt * r);
}
inline double rk3Stage3(double qn, double q2, double r, double dt) {
  return qn + (2.0 / 3.0) * ((q2 - qn) + dt * r);
}

/// One step of dq/dt = f(q) for a scalar, with the same stage formulas.
template <class F>
double rk3ScalarStep(double q, double dt, F&& f) {
  const double q1 = rk3Stage1(q, f(q), dt);
  const double q2 = rk3Stage2(q, q1, f(q1), dt);
  return rk3Stage3(q, q2, f(q2), dt);
}

/// Applies stage `stage` (0, 1, 2) to the interiors of the listed blocks.
void applyStage(int stage, std::vector<BlockField>& q, const std::vector<InteriorArray>& base,
                const ResidualField& r, double dt, const std::vector<int>* subset = nullptr);

/// Copies block interiors (the Q^n of a step).
void saveInteriors(const std::vector<BlockField>& q, std::vector<InteriorArray>& base);

/// Sum over cells and components of R^2, blocks in order.
double residualSumSquares(const ResidualField& r);

/// Fills ghosts of all local blocks. `overlap` may be run while messages are
/// in flight; it only touches interior-region work. Returns the seconds
/// charged to communication, overlap work excluded.
class HaloExchanger {
 public:
  virtual ~HaloExchanger() = default;
  virtual double exchange(std::vector<BlockField>& blocks, const std::function<void()>& overlap) = 0;
};

/// Global reductions across ranks; the default is a single rank.
class Reduction {
 public:
  virtual ~Reduction() = default;
  virtual double sum(double local) { return local; }
  virtual double min(double local) { return local; }
  virtual double max(double local) { return local; }
};

struct StepInfo {
  int iteration = 0;
  double time = 0.0;
  double dt = 0.0;
  double residualNorm = 0.0;
};

struct IterateOptions {
  ResidualOptions residual;
  /// Compute interior cells while halos are exchanged, the shell afterwards.
  bool overlap = false;
  std::function<void(const StepInfo&)> onStep;
  /// Called after every stage with the stage index, before the next exchange.
  std::function<void(int)> onStage;
};

struct LocalState;

/// Replaces the built-in step: advance `state` by dt, add timings to the
/// metrics and store the global residual norm of the first stage.
using StepFunction = std::function<void(LocalState& state, double dt, RunMetrics& metrics, double& norm)>;

struct LocalState {
  std::vector<BlockField> blocks;
  double time = 0.0;
  int iteration = 0;
};

/// One three-stage step with a halo exchange before every residual. Invalid
/// states are rethrown with the stage index.
void rk3Step(LocalState& state, ResidualEngine& engine, double dt, HaloExchanger& halos,
             bool overlap = false, RunMetrics* metrics = nullptr, double* residualNorm = nullptr,
             Reduction* reduction = nullptr, const std::function<void(int)>& onStage = {});

/// Advances until maxIters, finalTime or the convergence test. Residual growth
/// beyond 1e6 times the first norm raises DivergenceError.
RunMetrics iterate(LocalState& state, const GasModel& gas, const TimeControls& controls,
                   HaloExchanger& halos, Reduction& reduction, const IterateOptions& options = {});

/// Same loop with a custom step.
RunMetrics iterate(LocalState& state, const GasModel& gas, const TimeControls& controls,
                   Reduction& reduction, const StepFunction& step);

}  // namespace hcfd::integrator
