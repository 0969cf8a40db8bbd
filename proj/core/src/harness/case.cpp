#include "hcfd/harness/case.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "hcfd/util/csv.hpp"

namespace hcfd::harness {

namespace pt = boost::property_tree;
using partition::BoundaryKind;

namespace {

constexpr const char* kFaceKeys[6] = {"xlo", "xhi", "ylo", "yhi", "zlo", "zhi"};

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"case", {"version", "name"}},
      {"zone", {"cells", "lower", "upper", "xlo", "xhi", "ylo", "yhi", "zlo", "zhi", "inflow_xlo", "inflow_xhi",
                "inflow_ylo", "inflow_yhi", "inflow_zlo", "inflow_zhi"}},
      {"gas", {"gamma", "prandtl", "reynolds", "viscous"}},
      {"initial", {"kind", "state", "amplitude", "wave", "axis", "interface", "left", "right", "mach",
                   "wedge_angle", "noise"}},
      {"time", {"cfl", "dt", "fixed_dt", "max_iters", "tolerance", "final_time"}},
      {"topology", {"nodes", "cpu_devices", "coprocessor_devices", "workers_per_device", "rank_slots_per_node"}},
      {"cpu_device", {"workers", "throughput", "pin"}},
      {"coprocessor_device", {"workers", "throughput", "bandwidth", "latency", "pin", "memory"}},
      {"calibration", {"cell_rate", "net_latency", "net_bandwidth", "host_copy_bandwidth", "recompute_cost"}},
      {"run", {"ranks", "blocks", "max_block_cells", "cuts_x", "cuts_y", "cuts_z", "load_ratio", "workers",
               "tile_size", "overlap", "exchange_mode", "coalesce", "resolve_singular", "net_latency",
               "net_bandwidth", "schedule", "best_of", "seed", "cores"}},
      {"output", {"dir", "dump_field", "per_block_dump", "timeline"}},
  };
  return s;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + formatDouble(v[i]);
  return s;
}
std::string joinInts(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::to_string(v[i]);
  return s;
}
std::string prim(const PrimitiveState& w) { return join({w.rho, w.u, w.v, w.w, w.p}); }
std::string b(bool v) { return v ? "true" : "false"; }
std::string d(double v) { return formatDouble(v); }

class Reader {
 public:
  explicit Reader(const pt::ptree& t) : t_(t) {}

  bool has(const std::string& key) const { return static_cast<bool>(t_.get_optional<std::string>(path(key))); }

  std::string str(const std::string& key, const std::string& def) const {
    return t_.get<std::string>(path(key), def);
  }
  double num(const std::string& key, double def) const {
    const auto v = t_.get_optional<std::string>(path(key));
    if (!v) return def;
    try {
      std::size_t used = 0;
      const double x = std::stod(*v, &used);
      if (used != v->size()) throw std::invalid_argument("trailing");
      return x;
    } catch (const std::exception&) {
      throw CaseError("case key " + key + ": '" + *v + "' is not a number");
    }
  }
  long long integer(const std::string& key, long long def) const {
    const double x = num(key, static_cast<double>(def));
    if (x != std::floor(x)) throw CaseError("case key " + key + " must be an integer");
    return static_cast<long long>(x);
  }
  bool flag(const std::string& key, bool def) const {
    const auto v = t_.get_optional<std::string>(path(key));
    if (!v) return def;
    if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
    if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
    throw CaseError("case key " + key + ": '" + *v + "' is not a boolean");
  }
  std::vector<double> list(const std::string& key) const {
    const auto v = t_.get_optional<std::string>(path(key));
    std::vector<double> out;
    if (!v) return out;
    std::istringstream in(*v);
    std::string tok;
    while (in >> tok) {
      try {
        out.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw CaseError("case key " + key + ": '" + tok + "' is not a number");
      }
    }
    return out;
  }
  std::vector<double> fixed(const std::string& key, std::size_t n, std::vector<double> def) const {
    if (!has(key)) return def;
    auto v = list(key);
    if (v.size() != n) throw CaseError("case key " + key + " needs " + std::to_string(n) + " values");
    return v;
  }
  PrimitiveState primitive(const std::string& key, const PrimitiveState& def) const {
    const auto v = fixed(key, 5, {def.rho, def.u, def.v, def.w, def.p});
    return {v[0], v[1], v[2], v[3], v[4]};
  }

 private:
  static pt::ptree::path_type path(const std::string& key) { return pt::ptree::path_type(key, '/'); }
  const pt::ptree& t_;
};

}  // namespace

const char* initialName(InitialKind k) {
  switch (k) {
    case InitialKind::Uniform: return "uniform";
    case InitialKind::DensityWave: return "density-wave";
    case InitialKind::Sod: return "sod";
    case InitialKind::Corner: return "corner";
  }
  return "?";
}

InitialKind parseInitial(const std::string& s) {
  for (auto k : {InitialKind::Uniform, InitialKind::DensityWave, InitialKind::Sod, InitialKind::Corner})
    if (s == initialName(k)) return k;
  throw CaseError("unsupported case kind '" + s + "' (uniform, density-wave, sod, corner)");
}

const char* scheduleName(Schedule s) {
  switch (s) {
    case Schedule::Auto: return "auto";
    case Schedule::Homogeneous: return "homogeneous";
    case Schedule::Collaborative: return "collaborative";
  }
  return "?";
}

Schedule parseSchedule(const std::string& s) {
  for (auto k : {Schedule::Auto, Schedule::Homogeneous, Schedule::Collaborative})
    if (s == scheduleName(k)) return k;
  throw CaseError("unknown schedule '" + s + "'");
}

bool CaseFile::collaborative() const {
  if (run.schedule == Schedule::Auto) return topology.coprocessorDevices > 0;
  return run.schedule == Schedule::Collaborative;
}

void CaseFile::validate() const {
  try {
    zone.validate();
    gas.validate();
    time.validate();
    topology.validate();
    devices.cpu.validate();
    devices.coprocessor.validate();
    devices.calibration.validate();
  } catch (const CaseError&) {
    throw;
  } catch (const Error& e) {
    throw CaseError(std::string("invalid case: ") + e.what());
  }
  if (run.ranks < 1) throw CaseError("run.ranks must be >= 1");
  if (run.blocks < 0 || run.maxBlockCells < 0) throw CaseError("run.blocks / max_block_cells must be >= 0");
  if (run.workers < 1) throw CaseError("run.workers must be >= 1");
  if (run.tileSize < 1) throw CaseError("run.tile_size must be >= 1");
  if (run.bestOf < 1) throw CaseError("run.best_of must be >= 1");
  if (run.cores < 0) throw CaseError("run.cores must be >= 0");
  if (!(run.loadRatio > 0.0)) throw CaseError("run.load_ratio must be positive");
  const bool anyCuts = !run.cuts[0].empty() || !run.cuts[1].empty() || !run.cuts[2].empty();
  if (anyCuts)
    for (int a = 0; a < 3; ++a)
      if (run.cuts[static_cast<std::size_t>(a)].size() < 2)
        throw CaseError("run.cuts: all three axes need cut points when any is given");
  if (initial.kind == InitialKind::Sod && (initial.axis < 0 || initial.axis > 2))
    throw CaseError("initial.axis must be 0, 1 or 2");
  if (initial.noise < 0.0) throw CaseError("initial.noise must be >= 0");
}

std::string caseToText(const CaseFile& c) {
  std::ostringstream o;
  o << "# hcfd case file\n[case]\nversion = " << CaseFile::kVersion << "\nname = " << c.name << "\n\n";
  o << "[zone]\ncells = " << joinInts({c.zone.cells[0], c.zone.cells[1], c.zone.cells[2]}) << "\n";
  o << "lower = " << join({c.zone.lower[0], c.zone.lower[1], c.zone.lower[2]}) << "\n";
  o << "upper = " << join({c.zone.upper[0], c.zone.upper[1], c.zone.upper[2]}) << "\n";
  for (int f = 0; f < 6; ++f) o << kFaceKeys[f] << " = " << partition::boundaryName(c.zone.boundaries[static_cast<std::size_t>(f)]) << "\n";
  for (int f = 0; f < 6; ++f) {
    if (c.zone.boundaries[static_cast<std::size_t>(f)] != BoundaryKind::SupersonicInflow) continue;
    const auto w = primitiveFromConserved(ConservedState::fromVec(c.zone.inflow[static_cast<std::size_t>(f)]), c.gas);
    o << "inflow_" << kFaceKeys[f] << " = " << prim(w) << "\n";
  }
  o << "\n[gas]\ngamma = " << d(c.gas.gamma) << "\nprandtl = " << d(c.gas.prandtl) << "\nreynolds = " << d(c.gas.reynolds)
    << "\nviscous = " << b(c.gas.viscous) << "\n\n";
  const auto& in = c.initial;
  o << "[initial]\nkind = " << initialName(in.kind) << "\nstate = " << prim(in.state) << "\namplitude = " << d(in.amplitude)
    << "\nwave = " << joinInts({in.waveNumber[0], in.waveNumber[1], in.waveNumber[2]}) << "\naxis = " << in.axis
    << "\ninterface = " << d(in.interface) << "\nleft = " << prim(in.left) << "\nright = " << prim(in.right)
    << "\nmach = " << d(in.mach) << "\nwedge_angle = " << d(in.wedgeAngle) << "\nnoise = " << d(in.noise) << "\n\n";
  o << "[time]\ncfl = " << d(c.time.cfl) << "\ndt = " << d(c.time.dt) << "\nfixed_dt = " << b(c.time.fixedDt)
    << "\nmax_iters = " << c.time.maxIters << "\ntolerance = " << d(c.time.convergenceTol) << "\nfinal_time = " << d(c.time.finalTime)
    << "\n\n";
  o << "[topology]\nnodes = " << c.topology.nodes << "\ncpu_devices = " << c.topology.cpuDevices
    << "\ncoprocessor_devices = " << c.topology.coprocessorDevices << "\nworkers_per_device = " << c.topology.workersPerDevice
    << "\nrank_slots_per_node = " << c.topology.rankSlotsPerNode << "\n\n";
  o << "[cpu_device]\nworkers = " << c.devices.cpu.workerCount << "\nthroughput = " << d(c.devices.cpu.relativeThroughput)
    << "\npin = " << b(c.devices.cpu.pinWorkers) << "\n\n";
  const auto& cop = c.devices.coprocessor;
  const auto link = cop.link.value_or(hetero::LinkModel{});
  o << "[coprocessor_device]\nworkers = " << cop.workerCount << "\nthroughput = " << d(cop.relativeThroughput)
    << "\nbandwidth = " << d(link.bandwidth) << "\nlatency = " << d(link.latency) << "\npin = " << b(cop.pinWorkers)
    << "\nmemory = " << cop.memoryBytes << "\n\n";
  const auto& cal = c.devices.calibration;
  o << "[calibration]\ncell_rate = " << d(cal.cellRate) << "\nnet_latency = " << d(cal.network.latency)
    << "\nnet_bandwidth = " << d(cal.network.bandwidth) << "\nhost_copy_bandwidth = " << d(cal.hostCopyBandwidth)
    << "\nrecompute_cost = " << d(cal.recomputeCostPerCell) << "\n\n";
  const auto& r = c.run;
  o << "[run]\nranks = " << r.ranks << "\nblocks = " << r.blocks << "\nmax_block_cells = " << r.maxBlockCells << "\n";
  if (!r.cuts[0].empty())
    o << "cuts_x = " << joinInts(r.cuts[0]) << "\ncuts_y = " << joinInts(r.cuts[1]) << "\ncuts_z = " << joinInts(r.cuts[2]) << "\n";
  o << "load_ratio = " << d(r.loadRatio) << "\nworkers = " << r.workers << "\ntile_size = " << r.tileSize
    << "\noverlap = " << b(r.overlap)
    << "\nexchange_mode = " << (r.exchange.mode == exchange::ExchangeMode::Blocking ? "blocking" : "nonblocking")
    << "\ncoalesce = " << b(r.exchange.coalesce) << "\nresolve_singular = " << b(r.exchange.resolveSingular)
    << "\nnet_latency = " << d(r.network.latency) << "\nnet_bandwidth = " << d(r.network.bandwidth)
    << "\nschedule = " << scheduleName(r.schedule) << "\nbest_of = " << r.bestOf << "\nseed = " << r.seed << "\ncores = " << r.cores << "\n\n";
  o << "[output]\ndir = " << c.output.dir << "\ndump_field = " << b(c.output.dumpField)
    << "\nper_block_dump = " << b(c.output.perBlockDump) << "\ntimeline = " << b(c.output.timeline) << "\n";
  return o.str();
}

CaseFile caseFromText(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw CaseError(std::string("case file: ") + e.what());
  }
  for (const auto& [section, body] : tree) {
    const auto it = schema().find(section);
    if (it == schema().end()) throw CaseError("case file: unknown section [" + section + "]");
    if (body.empty() && !body.data().empty()) throw CaseError("case file: key '" + section + "' outside a section");
    for (const auto& [key, v] : body) {
      (void)v;
      if (!it->second.count(key)) throw CaseError("case file: unknown key " + section + "." + key);
    }
  }
  const Reader r(tree);
  const long long version = r.integer("case/version", -1);
  if (version != CaseFile::kVersion)
    throw CaseError("case file: unsupported version " + std::to_string(version) + " (expected " +
                    std::to_string(CaseFile::kVersion) + ")");

  CaseFile c;
  c.name = r.str("case/name", c.name);
  c.gas.gamma = r.num("gas/gamma", c.gas.gamma);
  c.gas.prandtl = r.num("gas/prandtl", c.gas.prandtl);
  c.gas.reynolds = r.num("gas/reynolds", c.gas.reynolds);
  c.gas.viscous = r.flag("gas/viscous", c.gas.viscous);

  if (!r.has("zone/cells")) throw CaseError("case file: zone.cells is required");
  const auto cells = r.fixed("zone/cells", 3, {});
  for (int a = 0; a < 3; ++a) c.zone.cells[a] = static_cast<int>(cells[static_cast<std::size_t>(a)]);
  const auto lo = r.fixed("zone/lower", 3, {0, 0, 0});
  const auto hi = r.fixed("zone/upper", 3, {1, 1, 1});
  for (std::size_t a = 0; a < 3; ++a) {
    c.zone.lower[a] = lo[a];
    c.zone.upper[a] = hi[a];
  }
  for (int f = 0; f < 6; ++f) {
    const std::string key = std::string("zone/") + kFaceKeys[f];
    if (!r.has(key)) throw CaseError(std::string("case file: boundary zone.") + kFaceKeys[f] + " is not defined");
    try {
      c.zone.boundaries[static_cast<std::size_t>(f)] = partition::parseBoundary(r.str(key, ""));
    } catch (const Error& e) {
      throw CaseError(std::string("case file: zone.") + kFaceKeys[f] + ": " + e.what());
    }
    const std::string inflowKey = std::string("zone/inflow_") + kFaceKeys[f];
    if (c.zone.boundaries[static_cast<std::size_t>(f)] == BoundaryKind::SupersonicInflow) {
      if (!r.has(inflowKey)) throw CaseError(std::string("case file: zone.inflow_") + kFaceKeys[f] + " is required");
      c.zone.inflow[static_cast<std::size_t>(f)] = conservedFromPrimitive(r.primitive(inflowKey, {}), c.gas).asVec();
    } else if (r.has(inflowKey)) {
      throw CaseError(std::string("case file: zone.inflow_") + kFaceKeys[f] + " given for a face that is not an inflow");
    }
  }

  auto& in = c.initial;
  in.kind = parseInitial(r.str("initial/kind", initialName(in.kind)));
  in.state = r.primitive("initial/state", in.state);
  in.amplitude = r.num("initial/amplitude", in.amplitude);
  const auto wave = r.fixed("initial/wave", 3, {1, 1, 1});
  for (std::size_t a = 0; a < 3; ++a) in.waveNumber[a] = static_cast<int>(wave[a]);
  in.axis = static_cast<int>(r.integer("initial/axis", in.axis));
  in.interface = r.num("initial/interface", in.interface);
  in.left = r.primitive("initial/left", in.left);
  in.right = r.primitive("initial/right", in.right);
  in.mach = r.num("initial/mach", in.mach);
  in.wedgeAngle = r.num("initial/wedge_angle", in.wedgeAngle);
  in.noise = r.num("initial/noise", in.noise);

  c.time.cfl = r.num("time/cfl", c.time.cfl);
  c.time.dt = r.num("time/dt", c.time.dt);
  c.time.fixedDt = r.flag("time/fixed_dt", c.time.fixedDt);
  c.time.maxIters = static_cast<int>(r.integer("time/max_iters", c.time.maxIters));
  c.time.convergenceTol = r.num("time/tolerance", c.time.convergenceTol);
  c.time.finalTime = r.num("time/final_time", c.time.finalTime);

  c.topology.nodes = static_cast<int>(r.integer("topology/nodes", c.topology.nodes));
  c.topology.cpuDevices = static_cast<int>(r.integer("topology/cpu_devices", c.topology.cpuDevices));
  c.topology.coprocessorDevices = static_cast<int>(r.integer("topology/coprocessor_devices", c.topology.coprocessorDevices));
  c.topology.workersPerDevice = static_cast<int>(r.integer("topology/workers_per_device", c.topology.workersPerDevice));
  c.topology.rankSlotsPerNode = static_cast<int>(r.integer("topology/rank_slots_per_node", c.topology.rankSlotsPerNode));

  auto& cpu = c.devices.cpu;
  cpu.workerCount = static_cast<int>(r.integer("cpu_device/workers", cpu.workerCount));
  cpu.relativeThroughput = r.num("cpu_device/throughput", cpu.relativeThroughput);
  cpu.pinWorkers = r.flag("cpu_device/pin", cpu.pinWorkers);
  auto& cop = c.devices.coprocessor;
  cop.workerCount = static_cast<int>(r.integer("coprocessor_device/workers", cop.workerCount));
  cop.relativeThroughput = r.num("coprocessor_device/throughput", cop.relativeThroughput);
  cop.link->bandwidth = r.num("coprocessor_device/bandwidth", cop.link->bandwidth);
  cop.link->latency = r.num("coprocessor_device/latency", cop.link->latency);
  cop.pinWorkers = r.flag("coprocessor_device/pin", cop.pinWorkers);
  cop.memoryBytes = static_cast<std::uint64_t>(r.num("coprocessor_device/memory", static_cast<double>(cop.memoryBytes)));
  auto& cal = c.devices.calibration;
  cal.cellRate = r.num("calibration/cell_rate", cal.cellRate);
  cal.network.latency = r.num("calibration/net_latency", cal.network.latency);
  cal.network.bandwidth = r.num("calibration/net_bandwidth", cal.network.bandwidth);
  cal.hostCopyBandwidth = r.num("calibration/host_copy_bandwidth", cal.hostCopyBandwidth);
  cal.recomputeCostPerCell = r.num("calibration/recompute_cost", cal.recomputeCostPerCell);

  auto& run = c.run;
  run.ranks = static_cast<int>(r.integer("run/ranks", run.ranks));
  run.blocks = static_cast<int>(r.integer("run/blocks", run.blocks));
  run.maxBlockCells = r.integer("run/max_block_cells", run.maxBlockCells);
  const char* cutKeys[3] = {"run/cuts_x", "run/cuts_y", "run/cuts_z"};
  for (std::size_t a = 0; a < 3; ++a)
    for (double v : r.list(cutKeys[a])) run.cuts[a].push_back(static_cast<int>(v));
  run.loadRatio = r.num("run/load_ratio", run.loadRatio);
  run.workers = static_cast<int>(r.integer("run/workers", run.workers));
  run.tileSize = static_cast<int>(r.integer("run/tile_size", run.tileSize));
  run.overlap = r.flag("run/overlap", run.overlap);
  const std::string mode = r.str("run/exchange_mode", "nonblocking");
  if (mode == "blocking")
    run.exchange.mode = exchange::ExchangeMode::Blocking;
  else if (mode == "nonblocking")
    run.exchange.mode = exchange::ExchangeMode::NonBlocking;
  else
    throw CaseError("case file: run.exchange_mode must be blocking or nonblocking");
  run.exchange.coalesce = r.flag("run/coalesce", run.exchange.coalesce);
  run.exchange.resolveSingular = r.flag("run/resolve_singular", run.exchange.resolveSingular);
  run.network.latency = r.num("run/net_latency", run.network.latency);
  run.network.bandwidth = r.num("run/net_bandwidth", run.network.bandwidth);
  run.schedule = parseSchedule(r.str("run/schedule", scheduleName(run.schedule)));
  run.bestOf = static_cast<int>(r.integer("run/best_of", run.bestOf));
  run.cores = static_cast<int>(r.integer("run/cores", run.cores));
  run.seed = static_cast<std::uint64_t>(r.integer("run/seed", static_cast<long long>(run.seed)));

  c.output.dir = r.str("output/dir", c.output.dir);
  c.output.dumpField = r.flag("output/dump_field", c.output.dumpField);
  c.output.perBlockDump = r.flag("output/per_block_dump", c.output.perBlockDump);
  c.output.timeline = r.flag("output/timeline", c.output.timeline);
  c.validate();
  return c;
}

void writeCase(const CaseFile& c, const std::string& path) { writeTextFile(path, caseToText(c)); }
CaseFile readCase(const std::string& path) { return caseFromText(readTextFile(path)); }

std::vector<int> cornerCuts(int nodes, int nodeLength, double loadRatio) {
  if (nodes < 1 || !(loadRatio > 0.0)) throw CaseError("corner layout needs nodes >= 1 and a positive load ratio");
  const int cpu = static_cast<int>(std::lround(nodeLength / (2.0 + 3.0 * loadRatio)));
  const int rest = nodeLength - 2 * cpu;
  if (cpu < 1 || rest < 3) throw CaseError("corner node length " + std::to_string(nodeLength) + " too short for ratio " + formatDouble(loadRatio));
  const int cop[3] = {rest / 3 + (rest % 3 > 0), rest / 3 + (rest % 3 > 1), rest / 3};
  std::vector<int> cuts{0};
  for (int n = 0; n < nodes; ++n) {
    const int base = n * nodeLength;
    int x = base + cpu;
    cuts.push_back(x);
    for (int k = 0; k < 3; ++k) cuts.push_back(x += cop[k]);
    cuts.push_back(base + nodeLength);
  }
  return cuts;
}

CaseFile genCase(const GenOptions& g) {
  CaseFile c;
  const InitialKind kind = parseInitial(g.kind);
  c.initial.kind = kind;
  c.name = g.kind;
  for (int a = 0; a < 3; ++a)
    if (g.cells[a] < 1) throw CaseError("case size must be at least one cell per axis");
  c.zone.cells = g.cells;
  c.run.blocks = g.blocks;
  c.run.ranks = g.ranks;
  c.time.maxIters = 50;

  switch (kind) {
    case InitialKind::Uniform:
      c.initial.state = {1.0, 0.5, 0.25, -0.125, 1.0};
      break;
    case InitialKind::DensityWave:
      c.initial.state = {1.0, 1.0, 1.0, 1.0, 1.0};
      c.initial.amplitude = 0.2;
      c.initial.waveNumber = {1, 1, 1};
      c.time.convergenceTol = 0.0;
      break;
    case InitialKind::Sod:
      for (int f = 0; f < 2; ++f) c.zone.boundaries[static_cast<std::size_t>(f)] = BoundaryKind::ExtrapolationOutflow;
      // Unit-length tube, square cells across the extrusion.
      for (int a = 1; a < 3; ++a) c.zone.upper[static_cast<std::size_t>(a)] = static_cast<double>(g.cells[a]) / g.cells[0];
      c.time.finalTime = 0.2;
      c.time.maxIters = 100000;
      c.time.convergenceTol = 0.0;
      break;
    case InitialKind::Corner: {
      if (g.nodes < 1 || g.cellsPerNode < 1) throw CaseError("corner case needs nodes >= 1 and cells per node >= 1");
      const int ny = g.crossSection[0], nz = g.crossSection[1];
      const int nodeLength = static_cast<int>(std::lround(static_cast<double>(g.cellsPerNode) / (ny * nz)));
      c.zone.cells = {g.nodes * nodeLength, ny, nz};
      const double h = 1.0 / ny;
      c.zone.upper = {c.zone.cells[0] * h, 1.0, nz * h};
      const double theta = c.initial.wedgeAngle * std::numbers::pi / 180.0;
      const double a = 1.0;  // rho = 1, p = 1/gamma
      c.initial.state = {1.0, c.initial.mach * a * std::cos(theta), -c.initial.mach * a * std::sin(theta), 0.0,
                         1.0 / c.gas.gamma};
      // Frame of the ramp: the stream turns into the wall at the wedge angle.
      c.zone.boundaries = {BoundaryKind::SupersonicInflow, BoundaryKind::ExtrapolationOutflow, BoundaryKind::SlipWall,
                           BoundaryKind::SupersonicInflow, BoundaryKind::Periodic, BoundaryKind::Periodic};
      const Vec5 inflow = conservedFromPrimitive(c.initial.state, c.gas).asVec();
      c.zone.inflow[0] = inflow;
      c.zone.inflow[3] = inflow;
      c.topology.nodes = g.nodes;
      c.topology.cpuDevices = 2;
      c.topology.coprocessorDevices = 3;
      c.topology.workersPerDevice = 1;
      c.run.ranks = g.nodes;
      c.run.loadRatio = g.loadRatio;
      c.run.cuts = {cornerCuts(g.nodes, nodeLength, g.loadRatio), {0, ny}, {0, nz}};
      c.run.overlap = true;
      c.run.schedule = Schedule::Collaborative;
      c.time.convergenceTol = 0.0;
      c.time.maxIters = 2;
      break;
    }
  }
  c.validate();
  return c;
}

double densityWaveExact(const CaseFile& c, const std::array<double, 3>& x, double t) {
  const auto& in = c.initial;
  const double vel[3] = {in.state.u, in.state.v, in.state.w};
  double phase = 0.0;
  for (std::size_t a = 0; a < 3; ++a) {
    const double len = c.zone.upper[a] - c.zone.lower[a];
    phase += in.waveNumber[a] * ((x[a] - c.zone.lower[a]) - vel[a] * t) / len;
  }
  return in.state.rho + in.amplitude * std::sin(2.0 * std::numbers::pi * phase);
}

BlockGeometry blockGeometry(const partition::PartitionPlan& plan, int id) {
  BlockGeometry g;
  g.spacing = plan.zone.spacing();
  g.lower = plan.zone.lower;
  g.origin = plan.blocks[static_cast<std::size_t>(id)].box.lo;
  return g;
}

BlockField initialBlock(const CaseFile& c, const partition::PartitionPlan& plan, int id, int halo) {
  const IndexBox box = plan.blocks[static_cast<std::size_t>(id)].box;
  const BlockGeometry geom = blockGeometry(plan, id);
  BlockField f(id, box.extents(), halo, geom);
  const auto& in = c.initial;
  const auto e = box.extents();
  // Noise depends only on the global cell index, so any partition sees the same field.
  auto noise = [&](int gi, int gj, int gk) {
    if (in.noise <= 0.0) return 0.0;
    const std::uint64_t cell = static_cast<std::uint64_t>(gi) +
                               static_cast<std::uint64_t>(c.zone.cells[0]) *
                                   (static_cast<std::uint64_t>(gj) + static_cast<std::uint64_t>(c.zone.cells[1]) * gk);
    std::mt19937_64 rng(c.run.seed * 0x9E3779B97F4A7C15ull + cell);
    return in.noise * std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
  };
  for (int k = 0; k < e[2]; ++k)
    for (int j = 0; j < e[1]; ++j)
      for (int i = 0; i < e[0]; ++i) {
        const std::array<double, 3> x{geom.center(0, i), geom.center(1, j), geom.center(2, k)};
        PrimitiveState w = in.state;
        switch (in.kind) {
          case InitialKind::Uniform:
          case InitialKind::Corner:
            break;
          case InitialKind::DensityWave:
            w.rho = densityWaveExact(c, x, 0.0);
            break;
          case InitialKind::Sod:
            w = x[static_cast<std::size_t>(in.axis)] < in.interface ? in.left : in.right;
            break;
        }
        w.rho += noise(box.lo[0] + i, box.lo[1] + j, box.lo[2] + k);
        f.set(i, j, k, conservedFromPrimitive(w, c.gas).asVec());
      }
  return f;
}

}  // namespace hcfd::harness
