#include "hcfd/integrator/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hcfd::integrator {

void TimeControls::validate() const {
  if (!(cfl > 0.0)) throw Error("cfl must be positive");
  if (maxIters < 0) throw Error("maxIters must be >= 0");
  if (fixedDt && !(dt > 0.0)) throw Error("fixed time step must be positive");
  if (finalTime < 0.0) throw Error("finalTime must be >= 0");
}

std::vector<IndexBox> regionBoxes(const Index3& extent, int halo, Region region) {
  const IndexBox all{{0, 0, 0}, extent};
  if (region == Region::All) return {all};
  IndexBox in;
  for (int a = 0; a < 3; ++a) {
    in.lo[a] = halo;
    in.hi[a] = std::max(halo, extent[a] - halo);
  }
  if (in.empty()) {
    if (region == Region::Interior) return {};
    return {all};
  }
  if (region == Region::Interior) return {in};

  std::vector<IndexBox> out;
  auto push = [&](const IndexBox& b) {
    if (!b.empty()) out.push_back(b);
  };
  // z slabs, then y slabs inside the z range, then x slabs inside both.
  push({{0, 0, 0}, {extent[0], extent[1], in.lo[2]}});
  push({{0, 0, in.hi[2]}, {extent[0], extent[1], extent[2]}});
  push({{0, 0, in.lo[2]}, {extent[0], in.lo[1], in.hi[2]}});
  push({{0, in.hi[1], in.lo[2]}, {extent[0], extent[1], in.hi[2]}});
  push({{0, in.lo[1], in.lo[2]}, {in.lo[0], in.hi[1], in.hi[2]}});
  push({{in.hi[0], in.lo[1], in.lo[2]}, {extent[0], in.hi[1], in.hi[2]}});
  return out;
}

ResidualEngine::ResidualEngine(GasModel gas, ResidualOptions options)
    : gas_(gas), options_(options) {
  gas_.validate();
}

void ResidualEngine::prepare(const std::vector<BlockField>& q, ResidualField& out,
                             const std::vector<int>* subset) {
  if (buffers_.size() != q.size()) buffers_.resize(q.size());
  if (out.blocks.size() != q.size()) out.blocks.resize(q.size());
  auto one = [&](std::size_t b) {
    const Index3 e = q[b].extent();
    if (out.blocks[b].extent() != e) out.blocks[b] = InteriorArray(e);
  };
  if (subset) {
    for (int b : *subset) one(static_cast<std::size_t>(b));
  } else {
    for (std::size_t b = 0; b < q.size(); ++b) one(b);
  }
}

void ResidualEngine::combine(const BlockField& q, std::size_t b, const std::vector<IndexBox>& boxes,
                             ResidualField& out) const {
  (void)q;
  const auto& s = buffers_[b].slot;
  InteriorArray& r = out.blocks[b];
  const bool viscous = gas_.viscous;
  for (const IndexBox& box : boxes)
    for (int c = 0; c < kNumVars; ++c) {
      const double* a0 = s[0].component(c).data();
      const double* a1 = s[1].component(c).data();
      const double* a2 = s[2].component(c).data();
      const double* a3 = s[3].component(c).data();
      const double* a4 = s[4].component(c).data();
      const double* a5 = s[5].component(c).data();
      double* dst = r.component(c).data();
      for (int k = box.lo[2]; k < box.hi[2]; ++k)
        for (int j = box.lo[1]; j < box.hi[1]; ++j) {
          const std::size_t o0 = r.offset(box.lo[0], j, k);
          const std::size_t n = static_cast<std::size_t>(box.hi[0] - box.lo[0]);
          if (viscous) {
            for (std::size_t o = o0; o < o0 + n; ++o)
              dst[o] = a0[o] + a1[o] + a2[o] + a3[o] + a4[o] + a5[o];
          } else {
            for (std::size_t o = o0; o < o0 + n; ++o) dst[o] = a0[o] + a1[o] + a2[o];
          }
        }
    }
}

void ResidualEngine::compute(const std::vector<BlockField>& q, ResidualField& out, Region region,
                             const std::vector<int>* subset) {
  prepare(q, out, subset);
  std::vector<std::size_t> list;
  if (subset) {
    for (int b : *subset) list.push_back(static_cast<std::size_t>(b));
  } else {
    for (std::size_t b = 0; b < q.size(); ++b) list.push_back(b);
  }

  std::vector<std::vector<IndexBox>> boxes(q.size());
  for (std::size_t b : list) boxes[b] = regionBoxes(q[b].extent(), q[b].halo(), region);

  WorkerPool* pool = options_.pool;
  auto forEach = [&](std::size_t n, const std::function<void(std::size_t)>& fn) {
    if (pool) {
      pool->parallelFor(n, fn);
    } else {
      for (std::size_t i = 0; i < n; ++i) fn(i);
    }
  };

  if (gas_.viscous) {
    forEach(list.size(), [&](std::size_t i) {
      const std::size_t b = list[i];
      if (region == Region::Interior) {
        const IndexBox in = q[b].interior();
        buffers_[b].prims.compute(q[b], gas_, &in);
      } else {
        buffers_[b].prims.compute(q[b], gas_);
      }
    });
  }

  // One phase per direction in slot order, each adding into the residual, so
  // every cell sums its contributions in the same order as combine().
  struct Item {
    std::size_t block;
    IndexBox tile;
  };
  const int tasks = gas_.viscous ? 6 : 3;
  std::vector<Item> items;
  for (int t = 0; t < tasks; ++t) {
    const auto task = scheme::kDirectionalTasks[static_cast<std::size_t>(t)];
    items.clear();
    for (std::size_t b : list)
      for (const IndexBox& box : boxes[b])
        for (const IndexBox& tile : scheme::sweepTiles(box, task.axis, options_.tileSize)) items.push_back({b, tile});
    forEach(items.size(), [&](std::size_t i) {
      const Item& it = items[i];
      scheme::sweepTile(q[it.block], gas_, task.axis, task.kind, it.tile, out.blocks[it.block],
                        &buffers_[it.block].prims, t > 0);
    });
  }
}

void ResidualEngine::computeSerial(const std::vector<BlockField>& q, ResidualField& out) {
  prepare(q, out);
  const int tasks = gas_.viscous ? 6 : 3;
  for (std::size_t b = 0; b < q.size(); ++b) {
    for (auto& s : buffers_[b].slot)
      if (s.extent() != q[b].extent()) s = InteriorArray(q[b].extent());
    if (gas_.viscous) buffers_[b].prims.compute(q[b], gas_);
    for (int t = 0; t < tasks; ++t) {
      const auto task = scheme::kDirectionalTasks[static_cast<std::size_t>(t)];
      scheme::blockResidualDirection(q[b], gas_, task.axis, task.kind,
                                     buffers_[b].slot[static_cast<std::size_t>(task.slot())],
                                     options_.tileSize, nullptr, &buffers_[b].prims);
    }
    combine(q[b], b, {q[b].interior()}, out);
  }
}

double stableDt(const BlockField& q, const GasModel& gas, double cfl) {
  const auto& h = q.geometry().spacing;
  const double hmin = q.geometry().minSpacing();
  const double gm1 = gas.gamma - 1.0;
  const double viscCoef = gas.viscous ? 2.0 * gas.viscosity() * gas.gamma / gas.prandtl / (hmin * hmin) : 0.0;
  double rate = 0.0;
  const auto ext = q.extent();
  for (int k = 0; k < ext[2]; ++k)
    for (int j = 0; j < ext[1]; ++j)
      for (int i = 0; i < ext[0]; ++i) {
        const Vec5 s = q.get(i, j, k);
        const double rho = s[0];
        const double inv = 1.0 / rho;
        const double u = s[1] * inv, v = s[2] * inv, w = s[3] * inv;
        const double p = gm1 * (s[4] - 0.5 * rho * (u * u + v * v + w * w));
        if (!(rho > 0.0) || !(p > 0.0))
          throw InvalidStateError("invalid state in time step control", StateLocation{q.id(), i, j, k, -1, "stableDt"});
        const double a = std::sqrt(gas.gamma * p * inv);
        double cell = (std::abs(u) + a) / h[0] + (std::abs(v) + a) / h[1] + (std::abs(w) + a) / h[2];
        if (gas.viscous) cell += viscCoef * inv;
        rate = std::max(rate, cell);
      }
  if (!(rate > 0.0)) return std::numeric_limits<double>::infinity();
  return cfl / rate;
}

double stableDt(const std::vector<BlockField>& q, const GasModel& gas, double cfl) {
  double dt = std::numeric_limits<double>::infinity();
  for (const auto& b : q) dt = std::min(dt, stableDt(b, gas, cfl));
  return dt;
}

void saveInteriors(const std::vector<BlockField>& q, std::vector<InteriorArray>& base) {
  if (base.size() != q.size()) base.resize(q.size());
  for (std::size_t b = 0; b < q.size(); ++b) {
    const Index3 e = q[b].extent();
    if (base[b].extent() != e) base[b] = InteriorArray(e);
    for (int c = 0; c < kNumVars; ++c) {
      const double* src = q[b].component(c).data();
      double* dst = base[b].component(c).data();
      for (int k = 0; k < e[2]; ++k)
        for (int j = 0; j < e[1]; ++j)
          std::copy_n(src + q[b].offset(0, j, k), e[0], dst + base[b].offset(0, j, k));
    }
  }
}

void applyStage(int stage, std::vector<BlockField>& q, const std::vector<InteriorArray>& base,
                const ResidualField& r, double dt, const std::vector<int>* subset) {
  auto one = [&](std::size_t b) {
    const Index3 e = q[b].extent();
    for (int c = 0; c < kNumVars; ++c) {
      double* cur = q[b].component(c).data();
      const double* qn = base[b].component(c).data();
      const double* res = r.blocks[b].component(c).data();
      for (int k = 0; k < e[2]; ++k)
        for (int j = 0; j < e[1]; ++j) {
          double* dst = cur + q[b].offset(0, j, k);
          const std::size_t o = base[b].offset(0, j, k);
          switch (stage) {
            case 0:
              for (int i = 0; i < e[0]; ++i) dst[i] = rk3Stage1(qn[o + i], res[o + i], dt);
              break;
            case 1:
              for (int i = 0; i < e[0]; ++i) dst[i] = rk3Stage2(qn[o + i], dst[i], res[o + i], dt);
              break;
            default:
              for (int i = 0; i < e[0]; ++i) dst[i] = rk3Stage3(qn[o + i], dst[i], res[o + i], dt);
              break;
          }
        }
    }
  };
  if (subset) {
    for (int b : *subset) one(static_cast<std::size_t>(b));
  } else {
    for (std::size_t b = 0; b < q.size(); ++b) one(b);
  }
}

double residualSumSquares(const ResidualField& r) {
  double s = 0.0;
  for (const auto& b : r.blocks)
    for (double x : b.raw()) s += x * x;
  return s;
}

void rk3Step(LocalState& state, ResidualEngine& engine, double dt, HaloExchanger& halos, bool overlap,
             RunMetrics* metrics, double* residualNorm, Reduction* reduction,
             const std::function<void(int)>& onStage) {
  if (!(dt > 0.0)) throw Error("time step must be positive");
  auto& ws = engine.workspace();
  auto& blocks = state.blocks;
  saveInteriors(blocks, ws.base);
  for (int stage = 0; stage < 3; ++stage) {
    try {
      const WorkerPool* pool = engine.options().pool;
      double overlapTime = 0.0;
      double exchangeTime = 0.0;
      if (overlap) {
        exchangeTime = halos.exchange(blocks, [&] {
          CpuMeter w(pool);
          engine.compute(blocks, ws.residual, Region::Interior);
          overlapTime += w.seconds();
        });
      } else {
        exchangeTime = halos.exchange(blocks, {});
      }

      CpuMeter rs(pool);
      engine.compute(blocks, ws.residual, overlap ? Region::Shell : Region::All);
      const double residualTime = rs.seconds() + overlapTime;

      if (stage == 0 && residualNorm) {
        const double local = residualSumSquares(ws.residual);
        *residualNorm = std::sqrt(reduction ? reduction->sum(local) : local);
      }
      CpuMeter up;
      applyStage(stage, blocks, ws.base, ws.residual, dt);
      const double updateTime = up.seconds();
      if (metrics) {
        metrics->commTime += exchangeTime;
        metrics->compTime += residualTime + updateTime;
        metrics->phases["exchange"] += exchangeTime;
        metrics->phases["residual"] += residualTime;
        metrics->phases["update"] += updateTime;
      }
      if (onStage) onStage(stage);
    } catch (const InvalidStateError& e) {
      StateLocation where;
      where.stage = stage;
      throw e.withContext(where);
    }
  }
}

RunMetrics iterate(LocalState& state, const GasModel& gas, const TimeControls& controls, HaloExchanger& halos,
                   Reduction& reduction, const IterateOptions& options) {
  ResidualEngine engine(gas, options.residual);
  return iterate(state, gas, controls, reduction,
                 [&](LocalState& s, double dt, RunMetrics& m, double& norm) {
                   rk3Step(s, engine, dt, halos, options.overlap, &m, &norm, &reduction, options.onStage);
                   if (options.onStep) options.onStep({s.iteration + 1, s.time + dt, dt, norm});
                 });
}

RunMetrics iterate(LocalState& state, const GasModel& gas, const TimeControls& controls, Reduction& reduction,
                   const StepFunction& step) {
  controls.validate();
  RunMetrics m;
  std::int64_t localCells = 0;
  for (const auto& b : state.blocks) localCells += b.interiorCells();
  m.totalCells = static_cast<std::int64_t>(std::llround(reduction.sum(static_cast<double>(localCells))));
  m.finalTime = state.time;
  if (controls.maxIters == 0) return m;

  const double cpu0 = threadCpuSeconds();
  Stopwatch wall;
  double r0 = 0.0;
  for (int it = 0; it < controls.maxIters; ++it) {
    if (controls.finalTime > 0.0 && state.time >= controls.finalTime) break;
    CpuMeter dtWatch;
    double dt = controls.fixedDt ? controls.dt : reduction.min(stableDt(state.blocks, gas, controls.cfl));
    const bool last = controls.finalTime > 0.0 && dt >= controls.finalTime - state.time;
    if (last) dt = controls.finalTime - state.time;
    m.phases["dt"] += dtWatch.seconds();
    m.compTime += dtWatch.seconds();

    double norm = 0.0;
    const double itCpu = threadCpuSeconds();
    step(state, dt, m, norm);
    m.iterationCpu.push_back(threadCpuSeconds() - itCpu);
    state.time = last ? controls.finalTime : state.time + dt;
    ++state.iteration;
    ++m.iterations;
    if (it == 0) {
      r0 = norm;
      m.initialResidual = norm;
    }
    m.finalResidual = norm;
    if (!std::isfinite(norm) || (r0 > 0.0 && norm > 1e6 * r0))
      throw DivergenceError("residual grew from " + std::to_string(r0) + " to " + std::to_string(norm) +
                            " at iteration " + std::to_string(state.iteration));
    if (controls.convergenceTol > 0.0 && r0 > 0.0 && it > 0 && norm / r0 < controls.convergenceTol) {
      m.converged = true;
      break;
    }
  }
  m.wallTime = wall.seconds();
  m.cpuTime = threadCpuSeconds() - cpu0;
  m.finalTime = state.time;
  return m;
}

}  // namespace hcfd::integrator
