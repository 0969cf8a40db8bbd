#include "hcfd/scheme/wcns.hpp"

#include <string>

namespace hcfd::scheme {

std::array<double, 3> smoothnessIndicators(std::span<const double, 5> f) {
  constexpr double c13 = 13.0 / 12.0;
  auto sq = [](double x) { return x * x; };
  return {
      c13 * sq(f[0] - 2.0 * f[1] + f[2]) + 0.25 * sq(f[0] - 4.0 * f[1] + 3.0 * f[2]),
      c13 * sq(f[1] - 2.0 * f[2] + f[3]) + 0.25 * sq(f[1] - f[3]),
      c13 * sq(f[2] - 2.0 * f[3] + f[4]) + 0.25 * sq(3.0 * f[2] - 4.0 * f[3] + f[4]),
  };
}

WcnsWeights nonlinearWeights(const std::array<double, 3>& betas, const std::array<double, 3>& ideal,
                             double epsilon) {
  WcnsWeights w;
  w.beta = betas;
  w.epsilon = epsilon;
  std::array<double, 3> alpha{};
  double sum = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double e = epsilon + betas[k];
    alpha[k] = ideal[k] / (e * e);
    sum += alpha[k];
  }
  for (int k = 0; k < 3; ++k) w.omega[k] = alpha[k] / sum;
  return w;
}

std::array<double, 3> candidateValues(std::span<const double, 5> f) {
  return {
      (3.0 * f[0] - 10.0 * f[1] + 15.0 * f[2]) * 0.125,
      (-f[1] + 6.0 * f[2] + 3.0 * f[3]) * 0.125,
      (3.0 * f[2] + 6.0 * f[3] - f[4]) * 0.125,
  };
}

namespace {

void requireNodes(const StencilLine& line, int first, int last, int edge) {
  if (first < line.firstIndex || last > line.lastIndex()) {
    throw InsufficientHaloError("interpolation at edge " + std::to_string(edge) +
                                "+1/2 needs nodes " + std::to_string(first) + ".." +
                                std::to_string(last) + " but the line covers " +
                                std::to_string(line.firstIndex) + ".." +
                                std::to_string(line.lastIndex()));
  }
}

}  // namespace

double interpolateEdge(const StencilLine& line, int edge, Side side, Weighting weighting) {
  const auto interp = weighting == Weighting::Nonlinear ? wcnsLeftBiased : linearLeftBiased;
  if (side == Side::Left) {
    requireNodes(line, edge - 2, edge + 2, edge);
    return interp(line.node(edge - 2), line.node(edge - 1), line.node(edge), line.node(edge + 1),
                  line.node(edge + 2));
  }
  requireNodes(line, edge - 1, edge + 3, edge);
  return interp(line.node(edge + 3), line.node(edge + 2), line.node(edge + 1), line.node(edge),
                line.node(edge - 1));
}

EdgeValues interpolateEdge(const StencilLine& line, int edge, Weighting weighting) {
  return {interpolateEdge(line, edge, Side::Left, weighting),
          interpolateEdge(line, edge, Side::Right, weighting)};
}

}  // namespace hcfd::scheme
