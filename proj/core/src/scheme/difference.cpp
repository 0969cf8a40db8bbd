#include "hcfd/scheme/difference.hpp"

#include <string>

#include "hcfd/scheme/wcns.hpp"

namespace hcfd::scheme {

Vec5 edgeDifference(std::span<const Vec5, 6> edges, double h) {
  Vec5 d;
  for (int c = 0; c < kNumVars; ++c) {
    const std::array<double, 6> comp{edges[0][c], edges[1][c], edges[2][c],
                                     edges[3][c], edges[4][c], edges[5][c]};
    d[c] = edgeDifference(std::span<const double, 6>(comp), h);
  }
  return d;
}

double central4Derivative(std::span<const double> line, int firstIndex, int center, double h) {
  const int m = center - firstIndex;
  if (m < 2 || m + 2 >= static_cast<int>(line.size())) {
    throw InsufficientHaloError("central difference at node " + std::to_string(center) +
                                " needs two nodes on each side");
  }
  return central4Derivative(std::span<const double, 5>(line.data() + m - 2, 5), h);
}

}  // namespace hcfd::scheme
