#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <cstring>
#include <span>

#include "hcfd/core/field.hpp"

namespace hcfd::test {

using PrimitiveFn = std::function<PrimitiveState(double, double, double)>;

// Sets every allocated point, ghosts included, from a function of the cell center.
inline void fillAnalytic(BlockField& b, const GasModel& gas, const PrimitiveFn& fn) {
  const auto box = b.allocated();
  const auto& g = b.geometry();
  for (int k = box.lo[2]; k < box.hi[2]; ++k)
    for (int j = box.lo[1]; j < box.hi[1]; ++j)
      for (int i = box.lo[0]; i < box.hi[0]; ++i)
        b.set(i, j, k, conservedFromPrimitive(fn(g.center(0, i), g.center(1, j), g.center(2, k)), gas).asVec());
}

// Smooth periodic state on the unit cube with waves along all axes.
inline PrimitiveState smoothWave(double x, double y, double z) {
  constexpr double tau = 2.0 * std::numbers::pi;
  return {1.0 + 0.2 * std::sin(tau * (x + y + z)), 1.0 + 0.1 * std::cos(tau * y), 0.5 - 0.1 * std::sin(tau * z),
          0.25 + 0.1 * std::cos(tau * x), 1.0 + 0.1 * std::sin(tau * (x - z))};
}

inline BlockGeometry unitGeometry(const Index3& n, const Index3& origin = {0, 0, 0}, const Index3& zone = {0, 0, 0}) {
  BlockGeometry g;
  for (int a = 0; a < 3; ++a) {
    const int cells = zone[static_cast<std::size_t>(a)] > 0 ? zone[static_cast<std::size_t>(a)] : n[static_cast<std::size_t>(a)];
    g.spacing[static_cast<std::size_t>(a)] = 1.0 / cells;
  }
  g.origin = origin;
  return g;
}

// Multiplies the density of every allocated point by 1 + amplitude * U(-1, 1).
inline void perturbDensity(BlockField& b, double amplitude, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (double& v : b.component(0)) v *= 1.0 + amplitude * d(rng);
}

inline bool bitwiseEqual(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return false;
  for (std::size_t n = 0; n < a.size(); ++n)
    if (std::memcmp(&a[n], &b[n], sizeof(double)) != 0) return false;
  return true;
}

}  // namespace hcfd::test
