#include "hcfd/scheme/flux_split.hpp"

#include <algorithm>

#include "hcfd/scheme/wcns.hpp"

namespace hcfd::scheme {

SplitFluxLine splitFlux(std::span<const ConservedState> line, const GasModel& gas, Axis axis,
                        std::optional<double> lambda) {
  SplitFluxLine out;
  std::vector<FluxVector> flux(line.size());
  double lineMax = 0.0;
  for (std::size_t m = 0; m < line.size(); ++m) {
    StateLocation where;
    where.i = static_cast<int>(m);
    const PrimitiveState w = primitiveFromConserved(line[m], gas, where);
    lineMax = std::max(lineMax, soundSpeedAndSpectralRadius(w, gas, axis).spectralRadius);
    flux[m] = inviscidFlux(line[m], gas, axis, where);
  }
  out.lambda = lambda.value_or(lineMax);
  out.plus.resize(line.size());
  out.minus.resize(line.size());
  for (std::size_t m = 0; m < line.size(); ++m) {
    const Vec5 q = line[m].asVec();
    for (int c = 0; c < kNumVars; ++c) {
      out.plus[m][c] = 0.5 * (flux[m][c] + out.lambda * q[c]);
      out.minus[m][c] = 0.5 * (flux[m][c] - out.lambda * q[c]);
    }
  }
  return out;
}

double edgeSplitSpeed(std::span<const double> radii, int firstIndex, int edge) {
  const int first = edge - 2 - firstIndex;
  const int last = edge + 3 - firstIndex;
  if (first < 0 || last >= static_cast<int>(radii.size())) {
    throw InsufficientHaloError("split speed at edge " + std::to_string(edge) +
                                "+1/2 needs nodes outside the line");
  }
  return *std::max_element(radii.begin() + first, radii.begin() + last + 1);
}

}  // namespace hcfd::scheme
