#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace hcfd {

/// Number of conserved components: (rho, rho*u, rho*v, rho*w, rho*E).
inline constexpr int kNumVars = 5;

enum class Axis : int { X = 0, Y = 1, Z = 2 };

inline constexpr std::array<Axis, 3> kAxes{Axis::X, Axis::Y, Axis::Z};

constexpr int index(Axis a) { return static_cast<int>(a); }

const char* axisName(Axis a);

/// Base class of all structured errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Where an invalid state was found. Fields that are unknown stay at -1.
struct StateLocation {
  int block = -1;
  int i = -1, j = -1, k = -1;
  int stage = -1;
  std::string task;
};

/// Nonpositive density or pressure (or non-finite values) detected in a state.
class InvalidStateError : public Error {
 public:
  InvalidStateError(const std::string& what, StateLocation where);

  const StateLocation& where() const { return where_; }

  /// Returns a copy with additional context filled in where it was unknown.
  InvalidStateError withContext(const StateLocation& outer) const;

 private:
  std::string detail_;
  StateLocation where_;
};

/// Five-component vector laid out like the conserved state. Used for states,
/// fluxes and residual contributions alike.
struct Vec5 {
  std::array<double, kNumVars> v{};

  constexpr double& operator[](int c) { return v[static_cast<std::size_t>(c)]; }
  constexpr double operator[](int c) const { return v[static_cast<std::size_t>(c)]; }

  friend constexpr Vec5 operator+(const Vec5& a, const Vec5& b) {
    Vec5 r;
    for (int c = 0; c < kNumVars; ++c) r[c] = a[c] + b[c];
    return r;
  }
  friend constexpr Vec5 operator-(const Vec5& a, const Vec5& b) {
    Vec5 r;
    for (int c = 0; c < kNumVars; ++c) r[c] = a[c] - b[c];
    return r;
  }
  friend constexpr Vec5 operator*(double s, const Vec5& a) {
    Vec5 r;
    for (int c = 0; c < kNumVars; ++c) r[c] = s * a[c];
    return r;
  }
  friend constexpr bool operator==(const Vec5&, const Vec5&) = default;
};

/// Q = (rho, rho*u, rho*v, rho*w, rho*E), nondimensional.
struct ConservedState {
  double rho = 0.0;
  double rho_u = 0.0;
  double rho_v = 0.0;
  double rho_w = 0.0;
  double rho_E = 0.0;

  Vec5 asVec() const { return Vec5{{rho, rho_u, rho_v, rho_w, rho_E}}; }
  static ConservedState fromVec(const Vec5& q) { return {q[0], q[1], q[2], q[3], q[4]}; }
  double momentum(Axis a) const;

  friend constexpr bool operator==(const ConservedState&, const ConservedState&) = default;
};

struct PrimitiveState {
  double rho = 0.0;
  double u = 0.0;
  double v = 0.0;
  double w = 0.0;
  double p = 0.0;

  double velocity(Axis a) const;

  friend constexpr bool operator==(const PrimitiveState&, const PrimitiveState&) = default;
};

using FluxVector = Vec5;

/// Ideal-gas constants. Viscosity is constant, mu = 1/Re.
struct GasModel {
  double gamma = 1.4;
  double prandtl = 0.72;
  double reynolds = 1.0e3;
  bool viscous = false;

  double viscosity() const { return 1.0 / reynolds; }
  /// k = mu*gamma/((gamma-1)*Pr), paired with temperature T = p/rho.
  double conductivity() const;
  /// Throws Error if the invariants (gamma > 1, Pr > 0, Re > 0 when viscous) fail.
  void validate() const;
};

PrimitiveState primitiveFromConserved(const ConservedState& q, const GasModel& gas,
                                      const StateLocation& where = {});

ConservedState conservedFromPrimitive(const PrimitiveState& w, const GasModel& gas);

struct WaveSpeeds {
  double soundSpeed = 0.0;
  double spectralRadius = 0.0;
};

/// a = sqrt(gamma*p/rho); spectral radius |u_axis| + a.
WaveSpeeds soundSpeedAndSpectralRadius(const PrimitiveState& w, const GasModel& gas, Axis axis);

/// Convective flux along an axis: F, G or H.
FluxVector inviscidFlux(const ConservedState& q, const GasModel& gas, Axis axis,
                        const StateLocation& where = {});

/// Velocity and temperature gradients at a point. grad_u[i][j] = d u_i / d x_j.
/// Temperature is the nondimensional T = p/rho.
struct ViscousInputs {
  double u = 0.0, v = 0.0, w = 0.0;
  std::array<std::array<double, 3>, 3> gradVelocity{};
  std::array<double, 3> gradTemperature{};
};

/// Newtonian stress with Stokes' hypothesis plus Fourier heat flux.
/// Returns (0, tau_x., tau_y., tau_z., u_i tau_i. + k dT/dx.) for the given axis.
FluxVector viscousFlux(const ViscousInputs& in, const GasModel& gas, Axis axis);

/// Full symmetric stress tensor, exposed for diagnostics and tests.
std::array<std::array<double, 3>, 3> viscousStress(const ViscousInputs& in, const GasModel& gas);

}  // namespace hcfd
