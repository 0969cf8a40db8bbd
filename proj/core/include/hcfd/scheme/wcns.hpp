#pragma once

#include <array>
#include <span>

#include "hcfd/core/state.hpp"

namespace hcfd::scheme {

/// Ghost layers required by the edge difference: edge i+5/2 interpolated from
/// the right reaches node i+5.
inline constexpr int kHaloWidth = 5;

/// Regularization added to the smoothness indicators.
inline constexpr double kWcnsEpsilon = 1.0e-6;

/// Linear weights of the three 3-point substencils for the left-biased value
/// at i+1/2 (substencils ending at i, centered at i, starting at i).
inline constexpr std::array<double, 3> kIdealWeights{1.0 / 16.0, 10.0 / 16.0, 5.0 / 16.0};

class InsufficientHaloError : public Error {
 public:
  using Error::Error;
};

/// Jiang-Shu indicators of the substencils {j-2..j}, {j-1..j+1}, {j..j+2}.
/// `window` holds f_{j-2} .. f_{j+2}.
std::array<double, 3> smoothnessIndicators(std::span<const double, 5> window);

struct WcnsWeights {
  std::array<double, 3> omega{};
  std::array<double, 3> beta{};
  double epsilon = kWcnsEpsilon;
};

/// alpha_k = d_k / (eps + beta_k)^2, omega_k = alpha_k / sum(alpha).
WcnsWeights nonlinearWeights(const std::array<double, 3>& betas,
                             const std::array<double, 3>& ideal = kIdealWeights,
                             double epsilon = kWcnsEpsilon);

/// Third-order candidate values at j+1/2 from each substencil.
std::array<double, 3> candidateValues(std::span<const double, 5> window);

/// Nonlinear fifth-order value at j+1/2 from f_{j-2..j+2} (left-biased).
inline double wcnsLeftBiased(double fm2, double fm1, double f0, double fp1, double fp2) {
  constexpr double c13 = 13.0 / 12.0;
  const double s0a = fm2 - 2.0 * fm1 + f0;
  const double s0b = fm2 - 4.0 * fm1 + 3.0 * f0;
  const double s1a = fm1 - 2.0 * f0 + fp1;
  const double s1b = fm1 - fp1;
  const double s2a = f0 - 2.0 * fp1 + fp2;
  const double s2b = 3.0 * f0 - 4.0 * fp1 + fp2;
  const double b0 = c13 * s0a * s0a + 0.25 * s0b * s0b;
  const double b1 = c13 * s1a * s1a + 0.25 * s1b * s1b;
  const double b2 = c13 * s2a * s2a + 0.25 * s2b * s2b;
  const double e0 = kWcnsEpsilon + b0;
  const double e1 = kWcnsEpsilon + b1;
  const double e2 = kWcnsEpsilon + b2;
  const double a0 = kIdealWeights[0] / (e0 * e0);
  const double a1 = kIdealWeights[1] / (e1 * e1);
  const double a2 = kIdealWeights[2] / (e2 * e2);
  const double q0 = (3.0 * fm2 - 10.0 * fm1 + 15.0 * f0) * 0.125;
  const double q1 = (-fm1 + 6.0 * f0 + 3.0 * fp1) * 0.125;
  const double q2 = (3.0 * f0 + 6.0 * fp1 - fp2) * 0.125;
  return (a0 * q0 + a1 * q1 + a2 * q2) / (a0 + a1 + a2);
}

/// Same stencil with the weights frozen at their ideal values.
inline double linearLeftBiased(double fm2, double fm1, double f0, double fp1, double fp2) {
  return (3.0 * fm2 - 20.0 * fm1 + 90.0 * f0 + 60.0 * fp1 - 5.0 * fp2) / 128.0;
}

enum class Side { Left, Right };
enum class Weighting { Nonlinear, Ideal };

/// A 1D window of node values along one axis. values[m] is node firstIndex + m.
struct StencilLine {
  std::span<const double> values;
  int firstIndex = 0;
  double h = 1.0;

  int lastIndex() const { return firstIndex + static_cast<int>(values.size()) - 1; }
  double node(int i) const { return values[static_cast<std::size_t>(i - firstIndex)]; }
};

struct EdgeValues {
  double left = 0.0;
  double right = 0.0;
};

/// Value at edge `edge`+1/2. Left uses nodes edge-2..edge+2, right mirrors the
/// stencil and uses edge-1..edge+3. Throws InsufficientHaloError when the line
/// does not cover the stencil.
double interpolateEdge(const StencilLine& line, int edge, Side side,
                       Weighting weighting = Weighting::Nonlinear);

EdgeValues interpolateEdge(const StencilLine& line, int edge,
                           Weighting weighting = Weighting::Nonlinear);

}  // namespace hcfd::scheme
