#include "hcfd/scheme/residual.hpp"

#include <algorithm>
#include <cmath>

#include "hcfd/scheme/difference.hpp"
#include "hcfd/scheme/wcns.hpp"

namespace hcfd::scheme {

std::string DirectionalTask::name() const {
  static const char* const names[] = {"invFlux_X", "invFlux_Y", "invFlux_Z",
                                      "visFlux_X", "visFlux_Y", "visFlux_Z"};
  return names[slot()];
}

void PrimitiveCache::compute(const BlockField& q, const GasModel& gas, const IndexBox* region) {
  if (points_ != q.pointsPerComponent() || data_.size() != points_ * 4) {
    points_ = q.pointsPerComponent();
    data_.assign(points_ * 4, 0.0);
  }
  const IndexBox box = region ? intersect(*region, q.allocated()) : q.allocated();
  const double* rho = q.component(0).data();
  const double* mx = q.component(1).data();
  const double* my = q.component(2).data();
  const double* mz = q.component(3).data();
  const double* en = q.component(4).data();
  const double gm1 = gas.gamma - 1.0;
  double* u = data_.data();
  double* v = u + points_;
  double* w = v + points_;
  double* t = w + points_;
  for (int k = box.lo[2]; k < box.hi[2]; ++k)
    for (int j = box.lo[1]; j < box.hi[1]; ++j)
      for (int i = box.lo[0]; i < box.hi[0]; ++i) {
        const auto o = static_cast<std::size_t>(q.offset(i, j, k));
        const double r = rho[o];
        if (!(r > 0.0))
          throw InvalidStateError("nonpositive density " + std::to_string(r),
                                  StateLocation{q.id(), i, j, k, -1, "primitives"});
        const double inv = 1.0 / r;
        u[o] = mx[o] * inv;
        v[o] = my[o] * inv;
        w[o] = mz[o] * inv;
        const double p = gm1 * (en[o] - 0.5 * r * (u[o] * u[o] + v[o] * v[o] + w[o] * w[o]));
        if (!(p > 0.0))
          throw InvalidStateError("nonpositive pressure " + std::to_string(p),
                                  StateLocation{q.id(), i, j, k, -1, "primitives"});
        t[o] = p * inv;
      }
}

std::vector<IndexBox> sweepTiles(const IndexBox& region, Axis axis, int tileSize) {
  const int d = index(axis);
  const int t1 = (d + 1) % 3;
  const int t2 = (d + 2) % 3;
  const int ts = std::max(1, tileSize);
  std::vector<IndexBox> tiles;
  if (region.empty()) return tiles;
  for (int b = region.lo[t2]; b < region.hi[t2]; b += ts) {
    for (int a = region.lo[t1]; a < region.hi[t1]; a += ts) {
      IndexBox t = region;
      t.lo[t1] = a;
      t.hi[t1] = std::min(region.hi[t1], a + ts);
      t.lo[t2] = b;
      t.hi[t2] = std::min(region.hi[t2], b + ts);
      tiles.push_back(t);
    }
  }
  return tiles;
}

namespace {

struct LineScratch {
  std::vector<double> q[kNumVars];
  std::vector<double> f[kNumVars];
  std::vector<double> edge[kNumVars];
  std::vector<double> radius;

  void reserve(std::size_t nodes) {
    if (radius.size() >= nodes) return;
    for (int c = 0; c < kNumVars; ++c) {
      q[c].resize(nodes);
      f[c].resize(nodes);
      edge[c].resize(nodes);
    }
    radius.resize(nodes);
  }
};

[[noreturn]] void throwInvalid(const BlockField& q, Axis axis, int node, Index3 p, double rho,
                               double pressure, FluxKind kind) {
  p[index(axis)] = node;
  StateLocation where{q.id(), p[0], p[1], p[2], -1,
                      DirectionalTask{axis, kind}.name()};
  if (!(rho > 0.0)) throw InvalidStateError("nonpositive density " + std::to_string(rho), where);
  throw InvalidStateError("nonpositive pressure " + std::to_string(pressure), where);
}

// Inviscid contribution -dF/dxi on nodes [lo, hi) of the line through p.
void inviscidLine(const BlockField& q, const GasModel& gas, Axis axis, Index3 p, int lo, int hi,
                  InteriorArray& out, LineScratch& s, bool add) {
  const int d = index(axis);
  const int first = lo - kHaloWidth;
  const int nodes = hi - lo + 2 * kHaloWidth;
  s.reserve(static_cast<std::size_t>(nodes));
  p[d] = first;
  const std::ptrdiff_t base = q.offset(p[0], p[1], p[2]);
  const std::ptrdiff_t stride = q.stride(axis);
  const double* comp[kNumVars];
  for (int c = 0; c < kNumVars; ++c) comp[c] = q.component(c).data();
  const double gm1 = gas.gamma - 1.0;
  const int mom = 1 + d;

  for (int m = 0; m < nodes; ++m) {
    const std::ptrdiff_t o = base + m * stride;
    const double rho = comp[0][o];
    const double mu = comp[1][o];
    const double mv = comp[2][o];
    const double mw = comp[3][o];
    const double en = comp[4][o];
    s.q[0][m] = rho;
    s.q[1][m] = mu;
    s.q[2][m] = mv;
    s.q[3][m] = mw;
    s.q[4][m] = en;
    const double inv = 1.0 / rho;
    const double pr = gm1 * (en - 0.5 * inv * (mu * mu + mv * mv + mw * mw));
    if (!(rho > 0.0) || !(pr > 0.0)) throwInvalid(q, axis, first + m, p, rho, pr, FluxKind::Inviscid);
    const double un = s.q[mom][m] * inv;
    s.radius[m] = std::abs(un) + std::sqrt(gas.gamma * pr * inv);
    s.f[0][m] = rho * un;
    s.f[1][m] = mu * un;
    s.f[2][m] = mv * un;
    s.f[3][m] = mw * un;
    s.f[mom][m] += pr;
    s.f[4][m] = (en + pr) * un;
  }

  // Edge e+1/2 for e in [lo-3, hi+1]; edge slot k <-> e = lo-3+k, its left
  // stencil starts at scratch node k.
  const int edges = hi - lo + 5;
  for (int k = 0; k < edges; ++k) {
    const double* r = s.radius.data() + k;
    const double lambda = std::max({r[0], r[1], r[2], r[3], r[4], r[5]});
    for (int c = 0; c < kNumVars; ++c) {
      const double* f = s.f[c].data() + k;
      const double* qq = s.q[c].data() + k;
      const double p0 = 0.5 * (f[0] + lambda * qq[0]);
      const double p1 = 0.5 * (f[1] + lambda * qq[1]);
      const double p2 = 0.5 * (f[2] + lambda * qq[2]);
      const double p3 = 0.5 * (f[3] + lambda * qq[3]);
      const double p4 = 0.5 * (f[4] + lambda * qq[4]);
      const double m1 = 0.5 * (f[1] - lambda * qq[1]);
      const double m2 = 0.5 * (f[2] - lambda * qq[2]);
      const double m3 = 0.5 * (f[3] - lambda * qq[3]);
      const double m4 = 0.5 * (f[4] - lambda * qq[4]);
      const double m5 = 0.5 * (f[5] - lambda * qq[5]);
      s.edge[c][k] = wcnsLeftBiased(p0, p1, p2, p3, p4) + wcnsLeftBiased(m5, m4, m3, m2, m1);
    }
  }

  const double invH = 1.0 / q.geometry().spacing[d];
  Index3 cell = p;
  for (int i = lo; i < hi; ++i) {
    cell[d] = i;
    const std::size_t o = out.offset(cell[0], cell[1], cell[2]);
    const int k = i - lo;
    for (int c = 0; c < kNumVars; ++c) {
      const double* e = s.edge[c].data() + k;
      const double dF = (kEdgeCoef1 * (e[3] - e[2]) - kEdgeCoef3 * (e[4] - e[1]) +
                         kEdgeCoef5 * (e[5] - e[0])) *
                        invH;
      double& r = out.component(c)[o];
      r = add ? r + -dF : -dF;
    }
  }
}

inline double c4(const double* f, std::ptrdiff_t o, std::ptrdiff_t s, double inv12h) {
  return (-f[o + 2 * s] + 8.0 * f[o + s] - 8.0 * f[o - s] + f[o - 2 * s]) * inv12h;
}

// Viscous contribution +dFv/dxi on nodes [lo, hi) of the line through p.
void viscousLine(const BlockField& q, const GasModel& gas, const PrimitiveCache& prims, Axis axis,
                 Index3 p, int lo, int hi, InteriorArray& out, LineScratch& s, bool add) {
  const int d = index(axis);
  const int first = lo - 2;
  const int nodes = hi - lo + 4;
  s.reserve(static_cast<std::size_t>(nodes));
  const double* u = prims.component(0).data();
  const double* v = prims.component(1).data();
  const double* w = prims.component(2).data();
  const double* t = prims.component(3).data();
  const auto& h = q.geometry().spacing;
  const std::array<double, 3> inv12h{1.0 / (12.0 * h[0]), 1.0 / (12.0 * h[1]),
                                     1.0 / (12.0 * h[2])};
  const std::array<std::ptrdiff_t, 3> stride{q.stride(Axis::X), q.stride(Axis::Y),
                                             q.stride(Axis::Z)};
  const double mu = gas.viscosity();
  const double kappa = gas.conductivity();

  p[d] = first;
  const std::ptrdiff_t base = q.offset(p[0], p[1], p[2]);
  for (int m = 0; m < nodes; ++m) {
    const std::ptrdiff_t o = base + m * stride[d];
    double g[3][3];
    for (int b = 0; b < 3; ++b) {
      g[0][b] = c4(u, o, stride[b], inv12h[b]);
      g[1][b] = c4(v, o, stride[b], inv12h[b]);
      g[2][b] = c4(w, o, stride[b], inv12h[b]);
    }
    const double dT = c4(t, o, stride[d], inv12h[d]);
    const double div = g[0][0] + g[1][1] + g[2][2];
    double tau[3];
    for (int a = 0; a < 3; ++a) {
      tau[a] = mu * (g[a][d] + g[d][a]);
      if (a == d) tau[a] -= mu * (2.0 / 3.0) * div;
    }
    s.f[0][m] = 0.0;
    s.f[1][m] = tau[0];
    s.f[2][m] = tau[1];
    s.f[3][m] = tau[2];
    s.f[4][m] = u[o] * tau[0] + v[o] * tau[1] + w[o] * tau[2] + kappa * dT;
  }

  Index3 cell = p;
  for (int i = lo; i < hi; ++i) {
    cell[d] = i;
    const std::size_t o = out.offset(cell[0], cell[1], cell[2]);
    const int m = i - first;
    for (int c = 0; c < kNumVars; ++c) {
      const double* f = s.f[c].data();
      const double g = (-f[m + 2] + 8.0 * f[m + 1] - 8.0 * f[m - 1] + f[m - 2]) * inv12h[d];
      double& r = out.component(c)[o];
      r = add ? r + g : g;
    }
  }
}

}  // namespace

void sweepTile(const BlockField& q, const GasModel& gas, Axis axis, FluxKind kind,
               const IndexBox& tile, InteriorArray& out, const PrimitiveCache* prims, bool accumulate) {
  if (tile.empty()) return;
  if (q.halo() < kHaloWidth) {
    throw InsufficientHaloError("block " + std::to_string(q.id()) + " has halo " +
                                std::to_string(q.halo()) + ", sweeps need " +
                                std::to_string(kHaloWidth));
  }
  if (kind == FluxKind::Viscous && prims == nullptr) {
    throw Error("viscous sweep requires a primitive cache");
  }
  thread_local LineScratch scratch;
  const int d = index(axis);
  const int t1 = (d + 1) % 3;
  const int t2 = (d + 2) % 3;
  Index3 p{};
  for (int b = tile.lo[t2]; b < tile.hi[t2]; ++b) {
    for (int a = tile.lo[t1]; a < tile.hi[t1]; ++a) {
      p[t1] = a;
      p[t2] = b;
      if (kind == FluxKind::Inviscid) {
        inviscidLine(q, gas, axis, p, tile.lo[d], tile.hi[d], out, scratch, accumulate);
      } else {
        viscousLine(q, gas, *prims, axis, p, tile.lo[d], tile.hi[d], out, scratch, accumulate);
      }
    }
  }
}

void blockResidualDirection(const BlockField& q, const GasModel& gas, Axis axis, FluxKind kind,
                            InteriorArray& out, int tileSize, const IndexBox* region,
                            const PrimitiveCache* prims) {
  const IndexBox whole = q.interior();
  PrimitiveCache local;
  if (kind == FluxKind::Viscous && prims == nullptr) {
    local.compute(q, gas);
    prims = &local;
  }
  for (const IndexBox& tile : sweepTiles(region ? *region : whole, axis, tileSize)) {
    sweepTile(q, gas, axis, kind, tile, out, prims);
  }
}

}  // namespace hcfd::scheme
