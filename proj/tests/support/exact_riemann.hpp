#pragma once

// Exact solution of the 1D Riemann problem for an ideal gas (two-rarefaction
// / two-shock Newton iteration on the star pressure).

#include <algorithm>
#include <cmath>

namespace hcfd::testing {

struct RiemannSide {
  double rho, u, p;
};

struct RiemannSample {
  double rho, u, p;
};

class ExactRiemann {
 public:
  ExactRiemann(RiemannSide left, RiemannSide right, double gamma)
      : L_(left), R_(right), g_(gamma) {
    cL_ = std::sqrt(g_ * L_.p / L_.rho);
    cR_ = std::sqrt(g_ * R_.p / R_.rho);
    solveStar();
  }

  double pStar() const { return pStar_; }
  double uStar() const { return uStar_; }

  /// State at similarity coordinate s = (x - x0) / t.
  RiemannSample sample(double s) const {
    const double g = g_;
    if (s <= uStar_) {
      if (pStar_ > L_.p) {  // left shock
        const double sL = L_.u - cL_ * std::sqrt((g + 1) / (2 * g) * pStar_ / L_.p + (g - 1) / (2 * g));
        if (s <= sL) return {L_.rho, L_.u, L_.p};
        const double r = pStar_ / L_.p;
        const double k = (g - 1) / (g + 1);
        return {L_.rho * (r + k) / (k * r + 1), uStar_, pStar_};
      }
      const double head = L_.u - cL_;
      const double cStar = cL_ * std::pow(pStar_ / L_.p, (g - 1) / (2 * g));
      const double tail = uStar_ - cStar;
      if (s <= head) return {L_.rho, L_.u, L_.p};
      if (s >= tail) return {L_.rho * std::pow(pStar_ / L_.p, 1 / g), uStar_, pStar_};
      const double f = 2 / (g + 1) + (g - 1) / ((g + 1) * cL_) * (L_.u - s);
      return {L_.rho * std::pow(f, 2 / (g - 1)), 2 / (g + 1) * (cL_ + (g - 1) / 2 * L_.u + s),
              L_.p * std::pow(f, 2 * g / (g - 1))};
    }
    if (pStar_ > R_.p) {  // right shock
      const double sR = R_.u + cR_ * std::sqrt((g + 1) / (2 * g) * pStar_ / R_.p + (g - 1) / (2 * g));
      if (s >= sR) return {R_.rho, R_.u, R_.p};
      const double r = pStar_ / R_.p;
      const double k = (g - 1) / (g + 1);
      return {R_.rho * (r + k) / (k * r + 1), uStar_, pStar_};
    }
    const double head = R_.u + cR_;
    const double cStar = cR_ * std::pow(pStar_ / R_.p, (g - 1) / (2 * g));
    const double tail = uStar_ + cStar;
    if (s >= head) return {R_.rho, R_.u, R_.p};
    if (s <= tail) return {R_.rho * std::pow(pStar_ / R_.p, 1 / g), uStar_, pStar_};
    const double f = 2 / (g + 1) - (g - 1) / ((g + 1) * cR_) * (R_.u - s);
    return {R_.rho * std::pow(f, 2 / (g - 1)), 2 / (g + 1) * (-cR_ + (g - 1) / 2 * R_.u + s),
            R_.p * std::pow(f, 2 * g / (g - 1))};
  }

 private:
  // Pressure function of one side and its derivative.
  void side(double p, const RiemannSide& s, double c, double& f, double& df) const {
    const double g = g_;
    if (p > s.p) {
      const double A = 2 / ((g + 1) * s.rho);
      const double B = (g - 1) / (g + 1) * s.p;
      const double q = std::sqrt(A / (p + B));
      f = (p - s.p) * q;
      df = q * (1 - (p - s.p) / (2 * (B + p)));
    } else {
      const double r = p / s.p;
      f = 2 * c / (g - 1) * (std::pow(r, (g - 1) / (2 * g)) - 1);
      df = 1 / (s.rho * c) * std::pow(r, -(g + 1) / (2 * g));
    }
  }

  void solveStar() {
    double p = std::max(1e-8, 0.5 * (L_.p + R_.p));
    for (int it = 0; it < 100; ++it) {
      double fL, dL, fR, dR;
      side(p, L_, cL_, fL, dL);
      side(p, R_, cR_, fR, dR);
      const double next = std::max(1e-12, p - (fL + fR + R_.u - L_.u) / (dL + dR));
      const bool done = std::abs(next - p) < 1e-15 * (next + p);
      p = next;
      if (done) break;
    }
    double fL, dL, fR, dR;
    side(p, L_, cL_, fL, dL);
    side(p, R_, cR_, fR, dR);
    pStar_ = p;
    uStar_ = 0.5 * (L_.u + R_.u) + 0.5 * (fR - fL);
  }

  RiemannSide L_, R_;
  double g_;
  double cL_ = 0, cR_ = 0;
  double pStar_ = 0, uStar_ = 0;
};

}  // namespace hcfd::testing
