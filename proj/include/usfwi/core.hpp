#pragma once

/// \file usfwi/core.hpp
/// \brief Scalar aliases, error types and small helpers shared by every module.

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace usfwi {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;

/// Imaginary unit. Fields follow the e^{+jωt} time convention throughout.
inline constexpr Complex kJ{0.0, 1.0};
inline constexpr double kPi = 3.14159265358979323846;

template <int Dim>
using Point = std::array<double, Dim>;

template <int Dim>
using Index = std::array<std::ptrdiff_t, Dim>;

/// Base class of all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a Krylov solve does not reach its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

template <int Dim>
double distance(const Point<Dim>& a, const Point<Dim>& b) {
  double s = 0.0;
  for (int q = 0; q < Dim; ++q) s += (a[q] - b[q]) * (a[q] - b[q]);
  return std::sqrt(s);
}

inline bool all_finite(const CVector& v) { return v.allFinite(); }

}  // namespace usfwi
