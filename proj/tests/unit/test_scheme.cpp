#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "hcfd/scheme/difference.hpp"
#include "hcfd/scheme/flux_split.hpp"
#include "hcfd/scheme/wcns.hpp"

using namespace hcfd;
using namespace hcfd::scheme;
using doctest::Approx;

TEST_CASE("smoothness indicators") {
  SUBCASE("constant") {
    const std::array<double, 5> w{3.0, 3.0, 3.0, 3.0, 3.0};
    const auto b = smoothnessIndicators(w);
    CHECK(b == std::array<double, 3>{0.0, 0.0, 0.0});
  }
  SUBCASE("linear") {
    const std::array<double, 5> w{0.0, 1.0, 2.0, 3.0, 4.0};
    const auto b = smoothnessIndicators(w);
    // 13/12 * 0 + 1/4 * 2^2 on every substencil
    CHECK(b[0] == 1.0);
    CHECK(b[1] == 1.0);
    CHECK(b[2] == 1.0);
  }
  SUBCASE("step") {
    const std::array<double, 5> w{0.0, 0.0, 0.0, 1.0, 1.0};
    const auto b = smoothnessIndicators(w);
    CHECK(b[0] == 0.0);
    CHECK(b[1] == Approx(13.0 / 12.0 + 0.25));
    CHECK(b[2] == Approx(13.0 / 12.0 + 2.25));
    CHECK(b[2] > b[1]);
    CHECK(b[1] > b[0]);
  }
}

TEST_CASE("nonlinear weights") {
  SUBCASE("equal indicators give the ideal weights") {
    for (double beta : {0.0, 1e-3, 1.0, 17.5}) {
      const auto w = nonlinearWeights({beta, beta, beta});
      for (int k = 0; k < 3; ++k) CHECK(w.omega[static_cast<std::size_t>(k)] == Approx(kIdealWeights[static_cast<std::size_t>(k)]).epsilon(1e-15));
    }
  }
  SUBCASE("a rough stencil is switched off") {
    const auto w = nonlinearWeights({0.0, 0.0, 1e3});
    CHECK(w.omega[2] < 1e-15);
    CHECK(w.omega[0] + w.omega[1] == Approx(1.0));
  }
  SUBCASE("weights sum to one") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> d(0.0, 10.0);
    for (int n = 0; n < 500; ++n) {
      const auto w = nonlinearWeights({d(rng), d(rng), d(rng)});
      CHECK(w.omega[0] + w.omega[1] + w.omega[2] == Approx(1.0).epsilon(1e-14));
      for (double o : w.omega) CHECK(o >= 0.0);
    }
  }
}

TEST_CASE("candidate values match the fused interpolation") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (int n = 0; n < 200; ++n) {
    const std::array<double, 5> f{d(rng), d(rng), d(rng), d(rng), d(rng)};
    const auto c = candidateValues(f);
    const auto w = nonlinearWeights(smoothnessIndicators(f));
    const double ref = w.omega[0] * c[0] + w.omega[1] * c[1] + w.omega[2] * c[2];
    CHECK(wcnsLeftBiased(f[0], f[1], f[2], f[3], f[4]) == Approx(ref).epsilon(1e-13));
  }
}

TEST_CASE("edge interpolation") {
  std::vector<double> nodes(12);
  SUBCASE("constant data is reproduced exactly") {
    for (auto& v : nodes) v = 0.3;
    const StencilLine line{nodes, -3, 0.1};
    for (int e = -1; e <= 5; ++e) {
      const auto ev = interpolateEdge(line, e);
      CHECK(ev.left == 0.3);
      CHECK(ev.right == 0.3);
    }
  }
  SUBCASE("quartics are reproduced with ideal weights") {
    auto poly = [](double x) { return 1.0 - 2.0 * x + 0.5 * x * x + 0.25 * x * x * x - 0.125 * x * x * x * x; };
    const int first = -3;
    for (std::size_t m = 0; m < nodes.size(); ++m) nodes[m] = poly(static_cast<double>(first + static_cast<int>(m)));
    const StencilLine line{nodes, first, 1.0};
    for (int e = -1; e <= 5; ++e) {
      const double exact = poly(e + 0.5);
      CHECK(interpolateEdge(line, e, Side::Left, Weighting::Ideal) == Approx(exact).epsilon(1e-13));
      CHECK(interpolateEdge(line, e, Side::Right, Weighting::Ideal) == Approx(exact).epsilon(1e-13));
    }
  }
  SUBCASE("the stencil must fit the line") {
    for (auto& v : nodes) v = 1.0;
    const StencilLine line{nodes, 0, 1.0};
    CHECK_THROWS_AS(interpolateEdge(line, 1, Side::Left), InsufficientHaloError);
    CHECK_NOTHROW(interpolateEdge(line, 2, Side::Left));
    CHECK_THROWS_AS(interpolateEdge(line, 9, Side::Right), InsufficientHaloError);
    CHECK_NOTHROW(interpolateEdge(line, 8, Side::Right));
  }
  SUBCASE("nonlinear interpolation does not overshoot a step") {
    for (std::size_t m = 0; m < nodes.size(); ++m) nodes[m] = m < 6 ? 0.0 : 1.0;
    const StencilLine line{nodes, 0, 1.0};
    for (int e = 2; e <= 8; ++e) {
      const double v = interpolateEdge(line, e, Side::Left);
      CHECK(v > -0.02);
      CHECK(v < 1.02);
    }
  }
}

TEST_CASE("flux splitting") {
  GasModel gas;
  const std::vector<ConservedState> rest(4, ConservedState{1.0, 0.0, 0.0, 0.0, 2.5});
  const auto s = splitFlux(rest, gas, Axis::X);
  CHECK(s.lambda == Approx(std::sqrt(1.4)));
  for (std::size_t m = 0; m < rest.size(); ++m) {
    const auto sum = s.plus[m] + s.minus[m];
    for (int c = 0; c < kNumVars; ++c) CHECK(sum[c] == Approx(c == 1 ? 1.0 : 0.0));
  }
  const auto fixed = splitFlux(rest, gas, Axis::Y, 5.0);
  CHECK(fixed.lambda == 5.0);
  CHECK(fixed.plus[0][0] == Approx(2.5));
  CHECK(fixed.minus[0][0] == Approx(-2.5));
}

TEST_CASE("edge split speed covers both biased stencils") {
  const std::vector<double> radii{1.0, 2.0, 9.0, 1.0, 1.0, 1.0, 3.0, 1.0, 1.0, 1.0};
  // edge e+1/2 touches nodes e-2..e+3
  CHECK(edgeSplitSpeed(radii, 0, 2) == 9.0);
  CHECK(edgeSplitSpeed(radii, 0, 3) == 9.0);
  CHECK(edgeSplitSpeed(radii, 0, 4) == 9.0);
  CHECK(edgeSplitSpeed(radii, 0, 5) == 3.0);
  CHECK(edgeSplitSpeed(radii, 10, 14) == 9.0);
}

TEST_CASE("edge difference") {
  SUBCASE("constant edges") {
    const std::array<double, 6> e{2.0, 2.0, 2.0, 2.0, 2.0, 2.0};
    CHECK(edgeDifference(e, 0.1) == 0.0);
  }
  SUBCASE("linear edges") {
    const std::array<double, 6> e{-2.5, -1.5, -0.5, 0.5, 1.5, 2.5};
    CHECK(kEdgeCoef1 - 3.0 * kEdgeCoef3 + 5.0 * kEdgeCoef5 == Approx(1.0).epsilon(1e-16));
    CHECK(edgeDifference(e, 1.0) == Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("sixth powers") {
    std::array<double, 6> e{};
    const double x[6] = {-2.5, -1.5, -0.5, 0.5, 1.5, 2.5};
    for (int m = 0; m < 6; ++m) e[static_cast<std::size_t>(m)] = std::pow(x[m], 6);
    CHECK(edgeDifference(e, 1.0) == 0.0);
    // off-center: f = (xi - c)^6 has f'(0) = -6 c^5
    for (double c : {0.3, -0.7, 1.9}) {
      for (int m = 0; m < 6; ++m) e[static_cast<std::size_t>(m)] = std::pow(x[m] - c, 6);
      CHECK(edgeDifference(e, 1.0) == Approx(-6.0 * std::pow(c, 5)).epsilon(1e-12));
    }
  }
  SUBCASE("vector form is componentwise") {
    std::array<Vec5, 6> e{};
    for (int m = 0; m < 6; ++m)
      for (int c = 0; c < kNumVars; ++c) e[static_cast<std::size_t>(m)][c] = (c + 1) * (m - 2.5);
    const auto d = edgeDifference(std::span<const Vec5, 6>(e), 0.5);
    for (int c = 0; c < kNumVars; ++c) CHECK(d[c] == Approx(2.0 * (c + 1)).epsilon(1e-14));
  }
}

TEST_CASE("fourth-order central derivative") {
  const std::array<double, 5> flat{1.0, 1.0, 1.0, 1.0, 1.0};
  CHECK(central4Derivative(flat, 0.3) == 0.0);
  const std::array<double, 5> line{-2.0, -1.0, 0.0, 1.0, 2.0};
  CHECK(central4Derivative(line, 1.0) == 1.0);
  const std::array<double, 5> cubic{-8.0, -1.0, 0.0, 1.0, 8.0};
  CHECK(central4Derivative(cubic, 1.0) == Approx(0.0).epsilon(1e-15));

  const std::vector<double> nodes{0.0, 1.0, 4.0, 9.0, 16.0, 25.0};
  CHECK(central4Derivative(nodes, 0, 2, 1.0) == Approx(4.0));
  CHECK(central4Derivative(nodes, 0, 3, 1.0) == Approx(6.0));
  CHECK_THROWS_AS(central4Derivative(nodes, 0, 1, 1.0), InsufficientHaloError);
  CHECK_THROWS_AS(central4Derivative(nodes, 0, 4, 1.0), InsufficientHaloError);
}
