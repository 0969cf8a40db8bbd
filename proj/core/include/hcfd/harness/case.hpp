#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hcfd/core/field.hpp"
#include "hcfd/exchange/halo.hpp"
#include "hcfd/hetero/device.hpp"
#include "hcfd/integrator/integrator.hpp"
#include "hcfd/partition/plan.hpp"

namespace hcfd::harness {

class CaseError : public Error {
 public:
  using Error::Error;
};

enum class InitialKind { Uniform, DensityWave, Sod, Corner };
const char* initialName(InitialKind k);
InitialKind parseInitial(const std::string& s);

struct InitialCondition {
  InitialKind kind = InitialKind::Uniform;
  /// Uniform state, density-wave background (rho is the mean) and corner
  /// freestream (filled in by genCase).
  PrimitiveState state{1.0, 0.0, 0.0, 0.0, 1.0};
  // density wave: rho = rho0 + amplitude sin(2 pi (k . x - (k . u) t))
  double amplitude = 0.2;
  std::array<int, 3> waveNumber{1, 1, 1};
  // sod: left state for x_axis < interface, right state beyond
  int axis = 0;
  double interface = 0.5;
  PrimitiveState left{1.0, 0.0, 0.0, 0.0, 1.0};
  PrimitiveState right{0.125, 0.0, 0.0, 0.0, 0.1};
  // corner: freestream Mach number and wedge angle (degrees); synthetic defaults
  double mach = 3.0;
  double wedgeAngle = 10.0;
  // optional density noise, reproducible from the run seed
  double noise = 0.0;
};

enum class Schedule { Auto, Homogeneous, Collaborative };
const char* scheduleName(Schedule s);
Schedule parseSchedule(const std::string& s);

struct RunSettings {
  int ranks = 1;
  int blocks = 0;                     ///< target block count; 0: one per rank
  std::int64_t maxBlockCells = 0;     ///< alternative to blocks
  std::array<std::vector<int>, 3> cuts;  ///< explicit cut points (all axes or none)
  double loadRatio = 1.0;
  int workers = 1;                    ///< residual worker threads per rank (homogeneous)
  int tileSize = 16;
  bool overlap = false;
  exchange::ExchangeOptions exchange;
  exchange::NetworkModel network;     ///< charged to in-process messages
  Schedule schedule = Schedule::Auto;
  int bestOf = 1;
  std::uint64_t seed = 1;
  int cores = 0;  ///< host cores shared by in-process ranks; 0: all
};

struct OutputSettings {
  std::string dir;
  bool dumpField = false;
  bool perBlockDump = false;  ///< one dump record per block instead of the assembled zone
  bool timeline = false;
};

/// Everything needed to run one configuration. Stored as an INI-style text
/// file with a schema version.
struct CaseFile {
  static constexpr int kVersion = 1;

  std::string name = "case";
  partition::ZoneSpec zone;
  GasModel gas;
  InitialCondition initial;
  integrator::TimeControls time;
  partition::NodeTopology topology;
  hetero::DeviceModels devices = hetero::DeviceModels::defaults();
  RunSettings run;
  OutputSettings output;

  /// Throws CaseError naming the offending key.
  void validate() const;
  bool collaborative() const;
};

std::string caseToText(const CaseFile& c);
CaseFile caseFromText(const std::string& text);
void writeCase(const CaseFile& c, const std::string& path);
CaseFile readCase(const std::string& path);

struct GenOptions {
  std::string kind = "density-wave";  ///< uniform | density-wave | sod | corner
  Index3 cells{32, 32, 32};           ///< verification kinds
  int blocks = 1;
  int ranks = 1;
  // corner
  int nodes = 16;
  std::int64_t cellsPerNode = 40960;  ///< desk analog of the full-size per-node load
  std::array<int, 2> crossSection{16, 16};
  double loadRatio = 0.7;
};

/// Deterministic case generation. Corner cases cut every node's slab of the
/// zone into five blocks along x: CPU, three coprocessor blocks, CPU, sized
/// by the load ratio. Throws CaseError for an unknown kind or empty sizes.
CaseFile genCase(const GenOptions& options);

/// Cut points along x of the corner layout for one load ratio.
std::vector<int> cornerCuts(int nodes, int nodeLength, double loadRatio);

/// Density of the advected wave at a point and time.
double densityWaveExact(const CaseFile& c, const std::array<double, 3>& x, double t);

/// Block geometry of plan block `id`.
BlockGeometry blockGeometry(const partition::PartitionPlan& plan, int id);
/// Allocates and initializes one block (ghosts left zero).
BlockField initialBlock(const CaseFile& c, const partition::PartitionPlan& plan, int id, int halo);

}  // namespace hcfd::harness
