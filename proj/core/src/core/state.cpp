#include "hcfd/core/state.hpp"

#include <cmath>
#include <sstream>

namespace hcfd {

const char* axisName(Axis a) {
  switch (a) {
    case Axis::X: return "x";
    case Axis::Y: return "y";
    case Axis::Z: return "z";
  }
  return "?";
}

namespace {

std::string describe(const std::string& what, const StateLocation& where) {
  std::ostringstream os;
  os << "invalid state: " << what;
  if (where.block >= 0) os << " [block " << where.block;
  else os << " [";
  if (where.i != -1 || where.j != -1 || where.k != -1)
    os << " cell (" << where.i << "," << where.j << "," << where.k << ")";
  if (where.stage >= 0) os << " stage " << where.stage;
  if (!where.task.empty()) os << " task " << where.task;
  os << "]";
  return os.str();
}

}  // namespace

InvalidStateError::InvalidStateError(const std::string& what, StateLocation where)
    : Error(describe(what, where)), detail_(what), where_(std::move(where)) {}

InvalidStateError InvalidStateError::withContext(const StateLocation& outer) const {
  StateLocation merged = where_;
  if (merged.block < 0) merged.block = outer.block;
  if (merged.stage < 0) merged.stage = outer.stage;
  if (merged.task.empty()) merged.task = outer.task;
  return InvalidStateError(detail_, merged);
}

double ConservedState::momentum(Axis a) const {
  switch (a) {
    case Axis::X: return rho_u;
    case Axis::Y: return rho_v;
    case Axis::Z: return rho_w;
  }
  return 0.0;
}

double PrimitiveState::velocity(Axis a) const {
  switch (a) {
    case Axis::X: return u;
    case Axis::Y: return v;
    case Axis::Z: return w;
  }
  return 0.0;
}

double GasModel::conductivity() const {
  return viscosity() * gamma / ((gamma - 1.0) * prandtl);
}

void GasModel::validate() const {
  if (!(gamma > 1.0)) throw Error("gas model: gamma must be > 1");
  if (!(prandtl > 0.0)) throw Error("gas model: prandtl must be > 0");
  if (viscous && !(reynolds > 0.0)) throw Error("gas model: reynolds must be > 0 when viscous");
}

PrimitiveState primitiveFromConserved(const ConservedState& q, const GasModel& gas,
                                      const StateLocation& where) {
  if (!(q.rho > 0.0) || !std::isfinite(q.rho)) {
    throw InvalidStateError("nonpositive density " + std::to_string(q.rho), where);
  }
  PrimitiveState w;
  w.rho = q.rho;
  w.u = q.rho_u / q.rho;
  w.v = q.rho_v / q.rho;
  w.w = q.rho_w / q.rho;
  const double kinetic = 0.5 * q.rho * (w.u * w.u + w.v * w.v + w.w * w.w);
  w.p = (gas.gamma - 1.0) * (q.rho_E - kinetic);
  if (!(w.p > 0.0) || !std::isfinite(w.p)) {
    throw InvalidStateError("nonpositive pressure " + std::to_string(w.p), where);
  }
  return w;
}

ConservedState conservedFromPrimitive(const PrimitiveState& w, const GasModel& gas) {
  ConservedState q;
  q.rho = w.rho;
  q.rho_u = w.rho * w.u;
  q.rho_v = w.rho * w.v;
  q.rho_w = w.rho * w.w;
  q.rho_E = w.p / (gas.gamma - 1.0) + 0.5 * w.rho * (w.u * w.u + w.v * w.v + w.w * w.w);
  return q;
}

WaveSpeeds soundSpeedAndSpectralRadius(const PrimitiveState& w, const GasModel& gas, Axis axis) {
  WaveSpeeds s;
  s.soundSpeed = std::sqrt(gas.gamma * w.p / w.rho);
  s.spectralRadius = std::abs(w.velocity(axis)) + s.soundSpeed;
  return s;
}

FluxVector inviscidFlux(const ConservedState& q, const GasModel& gas, Axis axis,
                        const StateLocation& where) {
  const PrimitiveState w = primitiveFromConserved(q, gas, where);
  const double un = w.velocity(axis);
  FluxVector f;
  f[0] = q.rho * un;
  f[1] = q.rho_u * un;
  f[2] = q.rho_v * un;
  f[3] = q.rho_w * un;
  f[1 + index(axis)] += w.p;
  f[4] = un * (q.rho_E + w.p);
  return f;
}

std::array<std::array<double, 3>, 3> viscousStress(const ViscousInputs& in, const GasModel& gas) {
  const double mu = gas.viscosity();
  const auto& g = in.gradVelocity;
  const double divergence = g[0][0] + g[1][1] + g[2][2];
  std::array<std::array<double, 3>, 3> tau{};
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      tau[a][b] = mu * (g[a][b] + g[b][a]);
    }
    tau[a][a] -= mu * (2.0 / 3.0) * divergence;
  }
  return tau;
}

FluxVector viscousFlux(const ViscousInputs& in, const GasModel& gas, Axis axis) {
  const auto tau = viscousStress(in, gas);
  const int d = index(axis);
  FluxVector f;
  f[0] = 0.0;
  f[1] = tau[0][d];
  f[2] = tau[1][d];
  f[3] = tau[2][d];
  f[4] = in.u * tau[0][d] + in.v * tau[1][d] + in.w * tau[2][d] +
         gas.conductivity() * in.gradTemperature[d];
  return f;
}

}  // namespace hcfd
