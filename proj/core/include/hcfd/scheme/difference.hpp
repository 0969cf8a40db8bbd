#pragma once

#include <span>

#include "hcfd/core/state.hpp"

namespace hcfd::scheme {

inline constexpr double kEdgeCoef1 = 75.0 / 64.0;
inline constexpr double kEdgeCoef3 = 25.0 / 384.0;
inline constexpr double kEdgeCoef5 = 3.0 / 640.0;

/// Sixth-order cell-centered derivative from edge values.
/// `edges` = F at i-5/2, i-3/2, i-1/2, i+1/2, i+3/2, i+5/2.
inline double edgeDifference(std::span<const double, 6> edges, double h) {
  return (kEdgeCoef1 * (edges[3] - edges[2]) - kEdgeCoef3 * (edges[4] - edges[1]) +
          kEdgeCoef5 * (edges[5] - edges[0])) /
         h;
}

/// Componentwise edgeDifference over five-component fluxes.
Vec5 edgeDifference(std::span<const Vec5, 6> edges, double h);

/// Fourth-order central first derivative; `nodes` = f_{i-2} .. f_{i+2}.
inline double central4Derivative(std::span<const double, 5> nodes, double h) {
  return (-nodes[4] + 8.0 * nodes[3] - 8.0 * nodes[1] + nodes[0]) / (12.0 * h);
}

/// Derivative at `center` of a line whose first entry is node `firstIndex`.
/// Throws InsufficientHaloError if fewer than two nodes exist on either side.
double central4Derivative(std::span<const double> line, int firstIndex, int center, double h);

}  // namespace hcfd::scheme
