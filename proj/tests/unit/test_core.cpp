#include <cmath>
#include <random>

#include "doctest.h"
#include "hcfd/core/field.hpp"
#include "hcfd/core/state.hpp"

using namespace hcfd;
using doctest::Approx;

namespace {

// gamma - 1 is not exactly 0.4, so "exact" algebra holds to rounding.
void checkNear(const Vec5& a, const Vec5& b) {
  for (int c = 0; c < kNumVars; ++c) CHECK(a[c] == Approx(b[c]).epsilon(1e-15));
}

}  // namespace

TEST_CASE("primitive from conserved at rest") {
  GasModel gas;
  const auto w = primitiveFromConserved({1.0, 0.0, 0.0, 0.0, 2.5}, gas);
  checkNear({{w.rho, w.u, w.v, w.w, w.p}}, {{1.0, 0.0, 0.0, 0.0, 1.0}});
}

TEST_CASE("primitive from conserved with x velocity") {
  GasModel gas;
  const auto w = primitiveFromConserved({1.0, 1.0, 0.0, 0.0, 3.0}, gas);
  CHECK(w.u == 1.0);
  CHECK(w.p == Approx(1.0).epsilon(1e-15));
}

TEST_CASE("conserved from primitive") {
  GasModel gas;
  checkNear(conservedFromPrimitive({1.0, 0.0, 0.0, 0.0, 1.0}, gas).asVec(), {{1.0, 0.0, 0.0, 0.0, 2.5}});
  const auto q = conservedFromPrimitive({2.0, 1.0, 1.0, 1.0, 2.0}, gas);
  CHECK(q.rho == 2.0);
  CHECK(q.rho_u == 2.0);
  CHECK(q.rho_v == 2.0);
  CHECK(q.rho_w == 2.0);
  CHECK(q.rho_E == Approx(8.0).epsilon(1e-15));
}

TEST_CASE("invalid states carry their location") {
  GasModel gas;
  StateLocation where;
  where.block = 3;
  where.i = 1;
  where.j = 2;
  where.k = 4;
  CHECK_THROWS_AS(primitiveFromConserved({-1.0, 0.0, 0.0, 0.0, 2.5}, gas, where), InvalidStateError);
  CHECK_THROWS_AS(primitiveFromConserved({1.0, 0.0, 0.0, 0.0, -1.0}, gas), InvalidStateError);
  CHECK_THROWS_AS(primitiveFromConserved({NAN, 0.0, 0.0, 0.0, 2.5}, gas), InvalidStateError);
  try {
    primitiveFromConserved({1.0, 0.0, 0.0, 0.0, 0.0}, gas, where);
    FAIL("no error");
  } catch (const InvalidStateError& e) {
    CHECK(e.where().block == 3);
    CHECK(e.where().k == 4);
    StateLocation outer;
    outer.stage = 2;
    outer.block = 9;
    const auto ctx = e.withContext(outer);
    CHECK(ctx.where().stage == 2);
    CHECK(ctx.where().block == 3);
  }
}

TEST_CASE("round trip on random states") {
  GasModel gas;
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> pos(0.1, 5.0), vel(-3.0, 3.0);
  for (int n = 0; n < 1000; ++n) {
    const PrimitiveState w{pos(rng), vel(rng), vel(rng), vel(rng), pos(rng)};
    const auto back = primitiveFromConserved(conservedFromPrimitive(w, gas), gas);
    CHECK(back.rho == Approx(w.rho).epsilon(1e-13));
    CHECK(back.u == Approx(w.u).epsilon(1e-12));
    CHECK(back.p == Approx(w.p).epsilon(1e-11));
  }
}

TEST_CASE("sound speed and spectral radius") {
  GasModel gas;
  const auto s = soundSpeedAndSpectralRadius({1.0, 0.0, 0.0, 0.0, 1.0}, gas, Axis::X);
  CHECK(s.soundSpeed == Approx(1.18322).epsilon(1e-5));
  CHECK(s.spectralRadius == s.soundSpeed);
  // a = 1 needs p = rho / gamma
  const auto m = soundSpeedAndSpectralRadius({1.0, 0.0, -2.0, 0.0, 1.0 / 1.4}, gas, Axis::Y);
  CHECK(m.soundSpeed == Approx(1.0).epsilon(1e-15));
  CHECK(m.spectralRadius == Approx(3.0).epsilon(1e-15));
}

TEST_CASE("inviscid flux") {
  GasModel gas;
  const auto rest = inviscidFlux({1.0, 0.0, 0.0, 0.0, 2.5}, gas, Axis::X);
  checkNear(rest, {{0.0, 1.0, 0.0, 0.0, 0.0}});
  const auto q = conservedFromPrimitive({1.0, 1.0, 0.0, 0.0, 1.0}, gas);
  const auto f = inviscidFlux(q, gas, Axis::X);
  CHECK(f[0] == 1.0);
  CHECK(f[1] == Approx(2.0));
  CHECK(f[2] == 0.0);
  CHECK(f[3] == 0.0);
  CHECK(f[4] == Approx(4.0));
  const auto g = inviscidFlux({1.0, 0.0, 0.0, 0.0, 2.5}, gas, Axis::Z);
  checkNear(g, {{0.0, 0.0, 0.0, 1.0, 0.0}});
}

TEST_CASE("viscous flux") {
  GasModel gas;
  gas.viscous = true;
  SUBCASE("no gradients") {
    ViscousInputs in;
    in.u = 1.0;
    in.v = 2.0;
    for (Axis a : kAxes) CHECK(viscousFlux(in, gas, a) == Vec5{});
  }
  SUBCASE("pure shear") {
    gas.reynolds = 1.0;
    ViscousInputs in;
    in.gradVelocity[0][1] = 1.0;
    const auto g = viscousFlux(in, gas, Axis::Y);
    CHECK(g[1] == Approx(1.0).epsilon(1e-15));
    CHECK(viscousStress(in, gas)[0][1] == Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("rotation has a traceless stress") {
    // u = -y, v = x: solid-body rotation, gradients taken numerically
    gas.reynolds = 1.0;
    const double h = 1e-4;
    auto u = [](double, double y) { return -y; };
    auto v = [](double x, double) { return x; };
    const double x0 = 0.3, y0 = -0.7;
    ViscousInputs in;
    in.gradVelocity[0][0] = (u(x0 + h, y0) - u(x0 - h, y0)) / (2 * h);
    in.gradVelocity[0][1] = (u(x0, y0 + h) - u(x0, y0 - h)) / (2 * h);
    in.gradVelocity[1][0] = (v(x0 + h, y0) - v(x0 - h, y0)) / (2 * h);
    in.gradVelocity[1][1] = (v(x0, y0 + h) - v(x0, y0 - h)) / (2 * h);
    const auto tau = viscousStress(in, gas);
    CHECK(std::abs(tau[0][0] + tau[1][1] + tau[2][2]) < 1e-12);
    CHECK(std::abs(tau[0][1]) < 1e-12);
  }
  SUBCASE("heat flux") {
    ViscousInputs in;
    in.gradTemperature[2] = 2.0;
    const auto h = viscousFlux(in, gas, Axis::Z);
    CHECK(h[4] == Approx(2.0 * gas.conductivity()));
  }
}

TEST_CASE("gas model validation") {
  GasModel gas;
  gas.gamma = 1.0;
  CHECK_THROWS_AS(gas.validate(), Error);
  gas = {};
  gas.viscous = true;
  gas.reynolds = 0.0;
  CHECK_THROWS_AS(gas.validate(), Error);
}

TEST_CASE("block field layout") {
  BlockField b(7, {4, 3, 2}, 5);
  CHECK(b.id() == 7);
  CHECK(b.interiorCells() == 24);
  CHECK(b.pointsPerComponent() == 14u * 13u * 12u);
  CHECK(b.stride(Axis::X) == 1);
  CHECK(b.stride(Axis::Y) == 14);
  CHECK(b.stride(Axis::Z) == 14 * 13);
  b.fill({{1.0, 2.0, 3.0, 4.0, 5.0}});
  CHECK(b.at(4, -5, -5, -5) == 5.0);
  b.set(3, 2, 1, {{9.0, 0.0, 0.0, 0.0, 30.0}});
  CHECK(b.get(3, 2, 1)[4] == 30.0);
  CHECK(b.state(3, 2, 1).rho == 9.0);
  CHECK(b.allocated() == IndexBox{{-5, -5, -5}, {9, 8, 7}});
}

TEST_CASE("index boxes") {
  const IndexBox a{{0, 0, 0}, {4, 4, 4}};
  const IndexBox b{{2, -1, 3}, {6, 2, 9}};
  CHECK(intersect(a, b) == IndexBox{{2, 0, 3}, {4, 2, 4}});
  CHECK(intersect(a, b.shifted({10, 0, 0})).empty());
  CHECK(a.grown(1).cells() == 216);
  CHECK(a.contains({3, 3, 3}));
  CHECK_FALSE(a.contains({4, 0, 0}));
}
