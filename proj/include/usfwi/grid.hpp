#pragma once

/// \file usfwi/grid.hpp
/// \brief Uniform Cartesian cell grids and the transfer pair between an
///        inversion grid and its integer refinement.
///
/// Axis convention: axis 0 is lateral (x), the last axis is depth (z); in 3D
/// the middle axis is elevation (y). Cells are flattened in row-major order,
/// last axis fastest.

#include "usfwi/core.hpp"

#include <cmath>
#include <numeric>

namespace usfwi {

template <int Dim>
class Grid {
  static_assert(Dim == 2 || Dim == 3, "grids are 2D or 3D");

 public:
  static constexpr int dims = Dim;

  Grid() = default;

  /// \param extent cell counts per axis
  /// \param spacing cell edge length h (m)
  /// \param origin physical center of cell (0,...,0) (m)
  Grid(const Index<Dim>& extent, double spacing, const Point<Dim>& origin)
      : extent_(extent), spacing_(spacing), origin_(origin) {
    if (!(spacing > 0.0) || !std::isfinite(spacing))
      throw Error("grid spacing must be positive");
    for (int q = 0; q < Dim; ++q)
      if (extent[q] < 1) throw Error("grid cell counts must be >= 1");
  }

  const Index<Dim>& extent() const { return extent_; }
  std::ptrdiff_t extent(int axis) const { return extent_[axis]; }
  double spacing() const { return spacing_; }
  const Point<Dim>& origin() const { return origin_; }

  std::ptrdiff_t size() const {
    std::ptrdiff_t n = 1;
    for (auto e : extent_) n *= e;
    return n;
  }

  double cell_measure() const { return std::pow(spacing_, Dim); }

  std::ptrdiff_t linear(const Index<Dim>& idx) const {
    std::ptrdiff_t n = 0;
    for (int q = 0; q < Dim; ++q) n = n * extent_[q] + idx[q];
    return n;
  }

  Index<Dim> unravel(std::ptrdiff_t n) const {
    Index<Dim> idx{};
    for (int q = Dim - 1; q >= 0; --q) {
      idx[q] = n % extent_[q];
      n /= extent_[q];
    }
    return idx;
  }

  Point<Dim> center(const Index<Dim>& idx) const {
    Point<Dim> p{};
    for (int q = 0; q < Dim; ++q) p[q] = origin_[q] + spacing_ * static_cast<double>(idx[q]);
    return p;
  }
  Point<Dim> center(std::ptrdiff_t n) const { return center(unravel(n)); }

  /// Lower corner of the covered box.
  Point<Dim> lower() const {
    Point<Dim> p{};
    for (int q = 0; q < Dim; ++q) p[q] = origin_[q] - 0.5 * spacing_;
    return p;
  }
  Point<Dim> upper() const {
    Point<Dim> p{};
    for (int q = 0; q < Dim; ++q)
      p[q] = origin_[q] + spacing_ * (static_cast<double>(extent_[q]) - 0.5);
    return p;
  }

  bool contains(const Index<Dim>& idx) const {
    for (int q = 0; q < Dim; ++q)
      if (idx[q] < 0 || idx[q] >= extent_[q]) return false;
    return true;
  }

  /// Same physical box (within a relative tolerance on the spacing).
  bool same_box(const Grid& other, double rtol = 1e-9) const {
    const double tol = rtol * std::min(spacing_, other.spacing_);
    const auto a0 = lower(), a1 = upper(), b0 = other.lower(), b1 = other.upper();
    for (int q = 0; q < Dim; ++q)
      if (std::abs(a0[q] - b0[q]) > tol || std::abs(a1[q] - b1[q]) > tol) return false;
    return true;
  }

  /// Grid covering the same box with every cell split `factor` times per axis.
  Grid refined(int factor) const {
    if (factor < 1) throw Error("refinement factor must be >= 1");
    Index<Dim> ext{};
    Point<Dim> org{};
    const double hf = spacing_ / factor;
    for (int q = 0; q < Dim; ++q) {
      ext[q] = extent_[q] * factor;
      org[q] = origin_[q] - 0.5 * spacing_ + 0.5 * hf;
    }
    return Grid(ext, hf, org);
  }

  bool operator==(const Grid& o) const {
    return extent_ == o.extent_ && spacing_ == o.spacing_ && origin_ == o.origin_;
  }

 private:
  Index<Dim> extent_{};
  double spacing_ = 1.0;
  Point<Dim> origin_{};
};

/// Integer refinement factor of `fine` over `coarse`; throws when the two
/// grids do not cover the same box or the ratio is not an integer.
template <int Dim>
int refinement_factor(const Grid<Dim>& coarse, const Grid<Dim>& fine) {
  if (!coarse.same_box(fine)) throw Error("grids do not cover the same physical extent");
  const double ratio = coarse.spacing() / fine.spacing();
  const int r = static_cast<int>(std::lround(ratio));
  if (r < 1 || std::abs(ratio - r) > 1e-9 * ratio)
    throw Error("fine grid is not an integer refinement of the coarse grid");
  for (int q = 0; q < Dim; ++q)
    if (fine.extent(q) != coarse.extent(q) * r)
      throw Error("fine grid is not an integer refinement of the coarse grid");
  return r;
}

/// Piecewise-constant injection from `coarse` onto its refinement `fine`.
template <int Dim, class Vec>
Vec prolong(const Grid<Dim>& coarse, const Grid<Dim>& fine, const Vec& v) {
  const int r = refinement_factor(coarse, fine);
  if (v.size() != coarse.size()) throw Error("prolong: vector does not match the coarse grid");
  if (r == 1) return v;
  Vec out(fine.size());
  for (std::ptrdiff_t n = 0; n < fine.size(); ++n) {
    auto idx = fine.unravel(n);
    for (auto& i : idx) i /= r;
    out[n] = v[coarse.linear(idx)];
  }
  return out;
}

/// Sum of fine-cell values inside each coarse cell.
template <int Dim, class Vec>
Vec restrict_sum(const Grid<Dim>& coarse, const Grid<Dim>& fine, const Vec& v) {
  const int r = refinement_factor(coarse, fine);
  if (v.size() != fine.size()) throw Error("restrict: vector does not match the fine grid");
  if (r == 1) return v;
  Vec out = Vec::Zero(coarse.size());
  for (std::ptrdiff_t n = 0; n < fine.size(); ++n) {
    auto idx = fine.unravel(n);
    for (auto& i : idx) i /= r;
    out[coarse.linear(idx)] += v[n];
  }
  return out;
}

/// Cell-averaged restriction from `fine` onto `coarse`. Adjoint of `prolong`
/// under the measure-weighted inner products of the two grids.
template <int Dim, class Vec>
Vec restrict_average(const Grid<Dim>& coarse, const Grid<Dim>& fine, const Vec& v) {
  const int r = refinement_factor(coarse, fine);
  Vec out = restrict_sum(coarse, fine, v);
  if (r > 1) out /= std::pow(static_cast<double>(r), Dim);
  return out;
}

}  // namespace usfwi
