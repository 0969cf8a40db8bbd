#pragma once

#include <optional>
#include <span>
#include <vector>

#include "hcfd/core/state.hpp"

namespace hcfd::scheme {

/// F+ = (F + lambda Q)/2 and F- = (F - lambda Q)/2 along a line of states.
struct SplitFluxLine {
  std::vector<FluxVector> plus;
  std::vector<FluxVector> minus;
  double lambda = 0.0;
};

/// Lax-Friedrichs splitting with one speed for the whole line. When `lambda`
/// is not given the line maximum of |u_axis| + a is used.
SplitFluxLine splitFlux(std::span<const ConservedState> line, const GasModel& gas, Axis axis,
                        std::optional<double> lambda = std::nullopt);

/// Splitting speed used by the block kernels for edge e+1/2: the largest
/// spectral radius over the nodes e-2..e+3 that the two biased stencils touch.
/// `radii[m]` belongs to node firstIndex + m. Depends only on stencil data, so
/// the edge flux does not change when a line is cut into blocks.
double edgeSplitSpeed(std::span<const double> radii, int firstIndex, int edge);

}  // namespace hcfd::scheme
