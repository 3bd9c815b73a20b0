#pragma once

/// \file usfwi/tv.hpp
/// \brief Discrete gradient, its adjoint and row-wise isotropic shrinkage.
///
/// Gradients are N × Dim complex matrices, one row per cell. Differences are
/// in grid units; the last slice along each axis is zero.

#include "usfwi/grid.hpp"

namespace usfwi {

namespace detail {
template <int Dim>
std::ptrdiff_t axis_stride(const Grid<Dim>& g, int q) {
  std::ptrdiff_t s = 1;
  for (int r = Dim - 1; r > q; --r) s *= g.extent(r);
  return s;
}
}  // namespace detail

template <int Dim>
CMatrix grad(const Grid<Dim>& g, const CVector& m) {
  if (m.size() != g.size()) throw Error("grad: vector does not match the grid");
  CMatrix out = CMatrix::Zero(g.size(), Dim);
  for (std::ptrdiff_t n = 0; n < g.size(); ++n) {
    const auto idx = g.unravel(n);
    for (int q = 0; q < Dim; ++q)
      if (idx[q] + 1 < g.extent(q)) out(n, q) = m[n + detail::axis_stride(g, q)] - m[n];
  }
  return out;
}

/// Exact adjoint of grad: ⟨grad m, a⟩ = ⟨m, div a⟩. Note the sign: this is
/// ∇ᵀ, i.e. minus the usual divergence.
template <int Dim>
CVector div(const Grid<Dim>& g, const CMatrix& a) {
  if (a.rows() != g.size() || a.cols() != Dim) throw Error("div: field does not match the grid");
  CVector out = CVector::Zero(g.size());
  for (std::ptrdiff_t n = 0; n < g.size(); ++n) {
    const auto idx = g.unravel(n);
    for (int q = 0; q < Dim; ++q) {
      if (idx[q] + 1 < g.extent(q)) {
        const std::ptrdiff_t s = detail::axis_stride(g, q);
        out[n] -= a(n, q);
        out[n + s] += a(n, q);
      }
    }
  }
  return out;
}

/// max(1 − τ/‖a_n‖, 0)·a_n per row.
inline CMatrix shrink(const CMatrix& a, double tau) {
  if (!(tau >= 0.0)) throw Error("shrink threshold must be >= 0");
  CMatrix out = CMatrix::Zero(a.rows(), a.cols());
  for (Eigen::Index n = 0; n < a.rows(); ++n) {
    const double r = a.row(n).norm();
    if (r > tau) out.row(n) = (1.0 - tau / r) * a.row(n);
  }
  return out;
}

/// Σ_n ‖a_n‖₂.
inline double tv_norm(const CMatrix& a) { return a.rowwise().norm().sum(); }

}  // namespace usfwi
