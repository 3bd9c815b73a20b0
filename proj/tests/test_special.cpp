#include "usfwi/quadrature.hpp"
#include "usfwi/special.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace usfwi;

namespace {

struct HankelCase {
  Complex z, h0, h1;
};

// 30-digit reference values of H0^(2) and H1^(2).
const HankelCase kHankelCases[] = {
    {{0.3, -0.01}, {0.95472701391032055, 0.80841515890697546}, {0.08003821368835147, 2.2859766900285834}},
    {{1.7, -0.2}, {0.34243780213427472, -0.34831223171086817}, {0.46215697683779255, 0.26958784210631215}},
    {{3.5, -0.05}, {-0.36013435606614164, -0.18224270817897598}, {0.13379489643352091, -0.38970888784160551}},
    {{9.0, -0.3}, {-0.063792260767250059, -0.18610696601207663}, {0.18320602794640492, -0.07428441076738955}},
    {{19.5, -0.4}, {0.11967998506213237, 0.018283923242290223}, {-0.015235664508212546, 0.12024999056499518}},
    {{25.0, -0.1}, {0.086873355417879133, 0.11531119073987443}, {-0.11360679883292248, 0.089202713350540058}},
    {{80.0, -2.0}, {-0.0095300376433323872, 0.007407419753200549}, {-0.007468234598974075, -0.0094854529131589479}},
};

}  // namespace

TEST(Bessel, RealArgumentsMatchStd) {
  for (double x = 0.01; x < 60.0; x *= 1.17) {
    const auto b = special::bessel01(Complex(x, 0.0));
    EXPECT_NEAR(b.j0.real(), std::cyl_bessel_j(0.0, x), 1e-12) << x;
    EXPECT_NEAR(b.j1.real(), std::cyl_bessel_j(1.0, x), 1e-12) << x;
    const double y0 = std::cyl_neumann(0.0, x), y1 = std::cyl_neumann(1.0, x);
    EXPECT_NEAR(b.y0.real(), y0, 1e-12 * std::max(1.0, std::abs(y0))) << x;
    EXPECT_NEAR(b.y1.real(), y1, 1e-12 * std::max(1.0, std::abs(y1))) << x;
  }
}

TEST(Hankel, ComplexArgumentsMatchReference) {
  for (const auto& c : kHankelCases) {
    EXPECT_LE(std::abs(special::hankel2_0(c.z) - c.h0), 1e-11 * std::abs(c.h0)) << c.z;
    EXPECT_LE(std::abs(special::hankel2_1(c.z) - c.h1), 1e-11 * std::abs(c.h1)) << c.z;
  }
}

TEST(Hankel, WronskianHoldsOffAxis) {
  // J1 Y0 − J0 Y1 = 2/(πz)
  for (double r : {0.5, 1.5, 3.0, 7.0, 15.0}) {
    for (double im : {-0.01, -0.3, -1.0}) {
      const Complex z(r, im);
      const auto b = special::bessel01(z);
      const Complex w = b.j1 * b.y0 - b.j0 * b.y1;
      EXPECT_LE(std::abs(w - 2.0 / (kPi * z)), 1e-11 * std::abs(2.0 / (kPi * z))) << z;
    }
  }
}

TEST(Hankel, BranchesAreContinuous) {
  for (double edge : {2.0, 20.0}) {
    const Complex a(edge - 1e-9, -0.2), b(edge + 1e-9, -0.2);
    EXPECT_LE(std::abs(special::hankel2_0(a) - special::hankel2_0(b)), 1e-9);
    EXPECT_LE(std::abs(special::hankel2_1(a) - special::hankel2_1(b)), 1e-9);
  }
}

TEST(Hankel, ScaledMinusLimitHasNoCancellation) {
  // z H1^(2)(z) − 2j/π ~ (z²/2)(1 − (2j/π)(ln(z/2) + γ − 1/2)) as z → 0
  const Complex z(1e-6, -1e-8);
  const Complex expect =
      0.5 * z * z * (1.0 - 2.0 * kJ / kPi * (std::log(0.5 * z) + 0.5772156649015329 - 0.5));
  EXPECT_LE(std::abs(special::hankel2_1_scaled_minus_limit(z) - expect), 1e-6 * std::abs(expect));
  const Complex w(1.9, -0.1);
  EXPECT_LE(std::abs(special::hankel2_1_scaled_minus_limit(w) - (w * special::hankel2_1(w) - 2.0 * kJ / kPi)),
            1e-13);
}

TEST(Gauss, IntegratesPolynomialsExactly) {
  for (int n = 1; n <= 20; ++n) {
    const auto& rule = gauss_rule(n);
    for (int p = 0; p < 2 * n; ++p) {
      double s = 0.0;
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) s += rule.weights[i] * std::pow(rule.nodes[i], p);
      const double exact = (p % 2) ? 0.0 : 2.0 / (p + 1);
      EXPECT_NEAR(s, exact, 1e-13) << n << " " << p;
    }
  }
}
