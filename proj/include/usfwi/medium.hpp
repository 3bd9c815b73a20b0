#pragma once

/// \file usfwi/medium.hpp
/// \brief Acoustic media, complex compressibility and the contrast mapping.
///
/// Time convention e^{+jωt}: the compressibility is κ = κ' − jκ'', so a lossy
/// medium has Im κ ≤ 0 and contrasts of lossy inclusions have Im m ≤ 0.

#include "usfwi/grid.hpp"

#include <cmath>
#include <sstream>
#include <vector>

namespace usfwi {

enum class AttenuationDirection { DbCmMhzToNpMHz, NpMHzToDbCmMhz };

namespace detail {
// 1 dB/cm/MHz expressed in Np/m/Hz.
inline const double kDbCmMhzInNpMHz = 100.0 * std::log(10.0) / 20.0 / 1e6;
}  // namespace detail

/// Converts attenuation slopes between dB/cm/MHz and Np/m/Hz.
inline double atten_convert(double value, AttenuationDirection direction) {
  if (!(value >= 0.0)) throw Error("attenuation must be non-negative");
  return direction == AttenuationDirection::DbCmMhzToNpMHz ? value * detail::kDbCmMhzInNpMHz
                                                           : value / detail::kDbCmMhzInNpMHz;
}

inline double db_to_np(double db_cm_mhz) {
  return atten_convert(db_cm_mhz, AttenuationDirection::DbCmMhzToNpMHz);
}
inline double np_to_db(double np_m_hz) {
  return atten_convert(np_m_hz, AttenuationDirection::NpMHzToDbCmMhz);
}

/// κ = 1/(c²ρ0) − j α/(π c ρ0), using the low-loss form of the real part.
inline Complex compressibility(double c, double alpha, double rho0) {
  if (!(c > 0.0)) throw Error("sound speed must be positive");
  if (!(rho0 > 0.0)) throw Error("density must be positive");
  if (!(alpha >= 0.0)) throw Error("attenuation must be non-negative");
  return {1.0 / (c * c * rho0), -alpha / (kPi * c * rho0)};
}

/// Homogeneous background: c0 (m/s), α0 (Np/m/Hz), ρ0 (kg/m³).
struct Background {
  double c0 = 1540.0;
  double alpha0 = 0.0;
  double rho0 = 1000.0;

  Complex kappa0() const { return compressibility(c0, alpha0, rho0); }
};

template <int Dim>
struct AcousticMedium {
  Grid<Dim> grid;
  RVector sos;    ///< c(x), m/s
  RVector atten;  ///< α(x), Np/m/Hz
  Background background;

  void validate() const {
    if (sos.size() != grid.size() || atten.size() != grid.size())
      throw Error("medium maps do not match the grid");
    if (!(sos.array() > 0.0).all()) throw Error("sound speed must be positive everywhere");
    if (!(atten.array() >= 0.0).all()) throw Error("attenuation must be non-negative everywhere");
    if (!(background.rho0 > 0.0)) throw Error("density must be positive");
  }

  static AcousticMedium homogeneous(const Grid<Dim>& g, const Background& bg) {
    return {g, RVector::Constant(g.size(), bg.c0), RVector::Constant(g.size(), bg.alpha0), bg};
  }
};

/// Complex contrast m = κ/κ0 − 1 on an inversion grid.
template <int Dim>
struct ContrastMap {
  Grid<Dim> grid;
  CVector values;

  static ContrastMap zeros(const Grid<Dim>& g) { return {g, CVector::Zero(g.size())}; }
};

/// Raised by medium_from_contrast when some cells have Re κ ≤ 0.
class NonPhysicalContrast : public Error {
 public:
  NonPhysicalContrast(const std::string& what, std::vector<std::ptrdiff_t> cells)
      : Error(what), cells_(std::move(cells)) {}
  const std::vector<std::ptrdiff_t>& cells() const { return cells_; }

 private:
  std::vector<std::ptrdiff_t> cells_;
};

/// Per-cell contrast of `med` relative to its background, restricted onto
/// `inv_grid` by cell averaging. `inv_grid` must equal med.grid or be coarsened
/// from it by an integer factor.
template <int Dim>
ContrastMap<Dim> contrast_from_medium(const AcousticMedium<Dim>& med, const Grid<Dim>& inv_grid) {
  med.validate();
  const Complex kappa0 = med.background.kappa0();
  CVector fine(med.grid.size());
  for (std::ptrdiff_t n = 0; n < med.grid.size(); ++n)
    fine[n] = compressibility(med.sos[n], med.atten[n], med.background.rho0) / kappa0 - 1.0;
  if (!inv_grid.same_box(med.grid))
    throw Error("contrast_from_medium: grids cover different physical extents");
  return {inv_grid, restrict_average(inv_grid, med.grid, fine)};
}

/// Inverse mapping c = 1/sqrt(κ'ρ0), α = π c ρ0 κ'' with κ = κ0(1 + m).
template <int Dim>
AcousticMedium<Dim> medium_from_contrast(const ContrastMap<Dim>& m, const Background& bg) {
  const Complex kappa0 = bg.kappa0();
  AcousticMedium<Dim> out{m.grid, RVector(m.grid.size()), RVector(m.grid.size()), bg};
  std::vector<std::ptrdiff_t> bad;
  for (std::ptrdiff_t n = 0; n < m.grid.size(); ++n) {
    const Complex kappa = kappa0 * (1.0 + m.values[n]);
    if (!(kappa.real() > 0.0) || !std::isfinite(kappa.imag())) {
      bad.push_back(n);
      continue;
    }
    const double c = 1.0 / std::sqrt(kappa.real() * bg.rho0);
    out.sos[n] = c;
    out.atten[n] = kPi * c * bg.rho0 * (-kappa.imag());
  }
  if (!bad.empty()) {
    std::ostringstream os;
    os << bad.size() << " non-physical contrast cell(s) (Re kappa <= 0), first index " << bad.front();
    throw NonPhysicalContrast(os.str(), std::move(bad));
  }
  return out;
}

/// Sound speed implied by a contrast map (ignores the imaginary part).
template <int Dim>
RVector sos_from_contrast(const ContrastMap<Dim>& m, const Background& bg) {
  return medium_from_contrast(m, bg).sos;
}

}  // namespace usfwi
