#pragma once

/// \file usfwi/special.hpp
/// \brief Bessel and Hankel functions of orders 0 and 1 for complex arguments
///        in the right half plane (Re z > 0), as needed by the 2D Green's
///        function of a lossy background.
///
/// |z| < 2: power series. 2 <= |z| < 20: Miller backward recurrence with the
/// normalization J0 + 2ΣJ_{2k} = 1 and Neumann series for Y0, Y1.
/// |z| >= 20: Hankel asymptotic expansion.

#include "usfwi/core.hpp"

#include <cmath>
#include <vector>

namespace usfwi::special {

struct BesselPair {
  Complex j0, j1, y0, y1;
};

namespace detail {

inline constexpr double kEulerGamma = 0.57721566490153286061;

struct SeriesResult {
  BesselPair values;
  Complex y1_regular;  // Y1 + 2/(πz)
};

inline SeriesResult series_full(Complex z) {
  const Complex q = -0.25 * z * z;
  const Complex lg = std::log(0.5 * z) + kEulerGamma;
  // J0 = Σ q^k/(k!)^2, J1 = (z/2) Σ q^k/(k!(k+1)!)
  // Y0 = (2/π)[lg J0 − Σ_{k≥1} H_k q^k/(k!)^2]
  // Y1 = −2/(πz) + (2/π)(lg − γ) J1 − (z/(2π)) Σ (ψ(k+1)+ψ(k+2)) q^k/(k!(k+1)!)
  Complex t0 = 1.0, t1 = 1.0;
  Complex s_j0 = 1.0, s_j1 = 1.0, s_y0 = 0.0;
  double harmonic = 0.0;
  // ψ(1) + ψ(2) = −2γ + 1
  Complex s_y1 = -2.0 * kEulerGamma + 1.0;
  for (int k = 1; k < 60; ++k) {
    t0 *= q / (static_cast<double>(k) * k);
    t1 *= q / (static_cast<double>(k) * (k + 1));
    harmonic += 1.0 / k;
    const double psi_sum = -2.0 * kEulerGamma + 2.0 * harmonic + 1.0 / (k + 1);
    s_j0 += t0;
    s_j1 += t1;
    s_y0 += harmonic * t0;
    s_y1 += psi_sum * t1;
    if (std::abs(t0) < 1e-18 && std::abs(t1) < 1e-18) break;
  }
  SeriesResult r;
  r.values.j0 = s_j0;
  r.values.j1 = 0.5 * z * s_j1;
  r.values.y0 = (2.0 / kPi) * (lg * r.values.j0 - s_y0);
  r.y1_regular = (2.0 / kPi) * (lg - kEulerGamma) * r.values.j1 - z / (2.0 * kPi) * s_y1;
  r.values.y1 = -2.0 / (kPi * z) + r.y1_regular;
  return r;
}

inline BesselPair series(Complex z) { return series_full(z).values; }

inline BesselPair miller(Complex z) {
  const int top = 2 * (static_cast<int>(std::abs(z) + 30.0) / 2 + 1);
  std::vector<Complex> jn(top + 2, Complex(0.0));
  jn[top + 1] = 0.0;
  jn[top] = 1e-30;
  for (int n = top; n >= 1; --n) jn[n - 1] = (2.0 * n / z) * jn[n] - jn[n + 1];
  Complex norm = jn[0];
  for (int k = 2; k <= top; k += 2) norm += 2.0 * jn[k];
  for (auto& v : jn) v /= norm;
  const Complex lg = std::log(0.5 * z) + kEulerGamma;
  // (π/2) Y0 = lg J0 − 2 Σ (−1)^k J_{2k}/k
  Complex s0 = 0.0;
  for (int k = 1; 2 * k <= top; ++k) s0 += (k % 2 ? -1.0 : 1.0) * jn[2 * k] / static_cast<double>(k);
  // (π/2) Y1 = −J0/z + lg J1 + Σ (−1)^k (J_{2k−1} − J_{2k+1})/k
  Complex s1 = 0.0;
  for (int k = 1; 2 * k + 1 <= top + 1; ++k)
    s1 += (k % 2 ? -1.0 : 1.0) * (jn[2 * k - 1] - jn[2 * k + 1]) / static_cast<double>(k);
  BesselPair r;
  r.j0 = jn[0];
  r.j1 = jn[1];
  r.y0 = (2.0 / kPi) * (lg * jn[0] - 2.0 * s0);
  r.y1 = (2.0 / kPi) * (-jn[0] / z + lg * jn[1] + s1);
  return r;
}

// H^(2)_ν(z) ~ sqrt(2/(πz)) e^{−j(z − νπ/2 − π/4)} Σ_k (−j)^k a_k(ν)/z^k
inline Complex hankel2_asymptotic(int nu, Complex z) {
  const double mu = 4.0 * nu * nu;
  Complex term = 1.0, sum = 1.0;
  const Complex inv = 1.0 / z;
  double last = 1.0;
  for (int k = 1; k < 60; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= -kJ * (mu - odd * odd) / (8.0 * k) * inv;
    const double mag = std::abs(term);
    if (mag > last) break;
    sum += term;
    last = mag;
    if (mag < 1e-17) break;
  }
  const Complex phase = z - 0.5 * nu * kPi - 0.25 * kPi;
  return std::sqrt(2.0 / (kPi * z)) * std::exp(-kJ * phase) * sum;
}

}  // namespace detail

/// J0, J1, Y0, Y1 at complex z with Re z > 0.
inline BesselPair bessel01(Complex z) {
  if (std::abs(z) < 2.0) return detail::series(z);
  return detail::miller(z);
}

/// H0^(2)(z) = J0(z) − jY0(z).
inline Complex hankel2_0(Complex z) {
  if (std::abs(z) >= 20.0) return detail::hankel2_asymptotic(0, z);
  const auto b = bessel01(z);
  return b.j0 - kJ * b.y0;
}

/// H1^(2)(z) = J1(z) − jY1(z).
inline Complex hankel2_1(Complex z) {
  if (std::abs(z) >= 20.0) return detail::hankel2_asymptotic(1, z);
  const auto b = bessel01(z);
  return b.j1 - kJ * b.y1;
}

/// J1(z), any z with Re z > 0.
inline Complex bessel_j1(Complex z) {
  if (std::abs(z) >= 20.0) {
    // J1 = (H1^(1) + H1^(2))/2 with H^(1)(z) = conj(H^(2)(conj z)).
    return 0.5 * (std::conj(detail::hankel2_asymptotic(1, std::conj(z))) + detail::hankel2_asymptotic(1, z));
  }
  return bessel01(z).j1;
}

/// z·H1^(2)(z) − 2j/π, evaluated without cancellation for small |z|.
/// This is k²∫_0^R r H0^(2)(kr) dr with z = kR.
inline Complex hankel2_1_scaled_minus_limit(Complex z) {
  if (std::abs(z) >= 2.0) return z * hankel2_1(z) - 2.0 * kJ / kPi;
  const auto s = detail::series_full(z);
  return z * s.values.j1 - kJ * (z * s.y1_regular);
}

}  // namespace usfwi::special
