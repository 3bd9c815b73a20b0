#pragma once

/// \file usfwi/greens.hpp
/// \brief Background Green's functions, their integrals over grid cells, and
///        the FFT convolution that applies the discrete volume integral.
///
/// Under e^{+jωt} the outgoing free-space Green's functions are
///   2D: G(r) = (−j/4) H0^(2)(k0 r)
///   3D: G(r) = e^{−j k0 r} / (4π r)
/// A lossy background is carried by a complex k0 with Im k0 < 0.

#include "usfwi/grid.hpp"
#include "usfwi/medium.hpp"
#include "usfwi/quadrature.hpp"
#include "usfwi/special.hpp"

#include <fftw3.h>

#include <algorithm>
#include <memory>
#include <mutex>
#include <type_traits>
#include <vector>

namespace usfwi {

struct Wavenumber {
  double omega = 0.0;  ///< rad/s
  Complex k0;          ///< Re k0 > 0, Im k0 <= 0

  static Wavenumber from(double omega, const Background& bg) {
    if (!(omega > 0.0)) throw Error("angular frequency must be positive");
    // Principal root of ω²κ0ρ0 lies in the fourth quadrant for Im κ0 <= 0.
    return {omega, omega * std::sqrt(bg.kappa0() * bg.rho0)};
  }
  Complex k0_squared() const { return k0 * k0; }
};

template <int Dim>
Complex green(Complex k, double r) {
  if constexpr (Dim == 2) {
    return -0.25 * kJ * special::hankel2_0(k * r);
  } else {
    return std::exp(-kJ * k * r) / (4.0 * kPi * r);
  }
}

/// How a kernel entry integrates G over a source cell.
enum class CellRule {
  Exact,          ///< quadrature of G over the square/cube cell
  EqualMeasure,   ///< equal-area disk / equal-volume ball for |r| <= 2h, midpoint beyond
};

namespace detail {

// ∫_0^R G(r) r^{d−1} dr
template <int Dim>
Complex radial_antiderivative(Complex k, double radius) {
  const Complex x = k * radius;
  if constexpr (Dim == 2) {
    return -0.25 * kJ * special::hankel2_1_scaled_minus_limit(x) / (k * k);
  } else {
    // e^{−jx}(1 + jx) − 1 = Σ_{n≥2} (1 − n)(−jx)^n / n!
    Complex e;
    if (std::abs(x) < 0.5) {
      e = 0.0;
      Complex pw = -kJ * x;  // (−jx)^1
      double fact = 1.0;
      for (int n = 2; n < 30; ++n) {
        pw *= -kJ * x;
        fact *= n;
        const Complex term = (1.0 - n) * pw / fact;
        e += term;
        if (std::abs(term) < 1e-18 * std::abs(e)) break;
      }
    } else {
      e = std::exp(-kJ * x) * (1.0 + kJ * x) - 1.0;
    }
    return e / (4.0 * kPi * k * k);
  }
}

inline double cross2(double ax, double ay, double bx, double by) { return ax * by - ay * bx; }

// ∫ over segment AB's signed triangle with apex p, in polar form.
inline Complex polar_edge_2d(Complex k, const Point<2>& p, const Point<2>& a, const Point<2>& b,
                             int order) {
  const double tx = b[0] - a[0], ty = b[1] - a[1];
  const double len = std::hypot(tx, ty);
  // outward normal of a counter-clockwise polygon
  const double nx = ty / len, ny = -tx / len;
  const double ax = a[0] - p[0], ay = a[1] - p[1];
  const double bx = b[0] - p[0], by = b[1] - p[1];
  const double d = ax * nx + ay * ny;
  if (std::abs(d) <= 1e-14 * len) return 0.0;
  const double wx = d * nx / std::abs(d), wy = d * ny / std::abs(d);
  const double phi_a = std::atan2(cross2(wx, wy, ax, ay), wx * ax + wy * ay);
  const double phi_b = std::atan2(cross2(wx, wy, bx, by), wx * bx + wy * by);
  const double dist = std::abs(d);
  const auto& rule = gauss_rule(order);
  auto piece = [&](double lo, double hi) {
    Complex s = 0.0;
    const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const double phi = mid + half * rule.nodes[i];
      s += rule.weights[i] * radial_antiderivative<2>(k, dist / std::cos(phi));
    }
    return s * half;
  };
  if ((phi_a < 0.0 && phi_b > 0.0) || (phi_a > 0.0 && phi_b < 0.0))
    return piece(phi_a, 0.0) + piece(0.0, phi_b);
  return piece(phi_a, phi_b);
}

inline Complex polar_cell_2d(Complex k, const Point<2>& p, const Point<2>& c, double h) {
  const double e = 0.5 * h;
  const Point<2> v[4] = {{c[0] - e, c[1] - e}, {c[0] + e, c[1] - e}, {c[0] + e, c[1] + e},
                         {c[0] - e, c[1] + e}};
  Complex s = 0.0;
  for (int i = 0; i < 4; ++i) s += polar_edge_2d(k, p, v[i], v[(i + 1) % 4], 20);
  return s;
}

// Face of the cube: fixed axis `axis` at coordinate `plane`, outward sign `out`.
inline Complex polar_face_3d(Complex k, const Point<3>& p, const Point<3>& c, double h, int axis,
                             double out, int order) {
  const double e = 0.5 * h;
  const double plane = c[axis] + out * e;
  const double d = (plane - p[axis]) * out;
  if (std::abs(d) <= 1e-14 * h) return 0.0;
  const int u = (axis + 1) % 3, w = (axis + 2) % 3;
  // split the face at the foot of the perpendicular from p
  std::vector<double> cu = {c[u] - e, c[u] + e}, cw = {c[w] - e, c[w] + e};
  if (p[u] > cu[0] && p[u] < cu[1]) cu.insert(cu.begin() + 1, p[u]);
  if (p[w] > cw[0] && p[w] < cw[1]) cw.insert(cw.begin() + 1, p[w]);
  const auto& rule = gauss_rule(order);
  const double dz = plane - p[axis];
  Complex total = 0.0;
  for (std::size_t iu = 0; iu + 1 < cu.size(); ++iu) {
    for (std::size_t iw = 0; iw + 1 < cw.size(); ++iw) {
      const double mu = 0.5 * (cu[iu] + cu[iu + 1]), hu = 0.5 * (cu[iu + 1] - cu[iu]);
      const double mw = 0.5 * (cw[iw] + cw[iw + 1]), hw = 0.5 * (cw[iw + 1] - cw[iw]);
      Complex s = 0.0;
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double du = mu + hu * rule.nodes[i] - p[u];
        for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
          const double dw = mw + hw * rule.nodes[j] - p[w];
          const double r = std::sqrt(du * du + dw * dw + dz * dz);
          s += rule.weights[i] * rule.weights[j] * radial_antiderivative<3>(k, r) / (r * r * r);
        }
      }
      total += s * hu * hw;
    }
  }
  return d * total;
}

inline Complex polar_cell_3d(Complex k, const Point<3>& p, const Point<3>& c, double h) {
  Complex s = 0.0;
  for (int axis = 0; axis < 3; ++axis)
    for (double out : {-1.0, 1.0}) s += polar_face_3d(k, p, c, h, axis, out, 14);
  return s;
}

template <int Dim>
Complex tensor_cell(Complex k, const Point<Dim>& p, const Point<Dim>& c, double h, int order) {
  const auto& rule = gauss_rule(order);
  const std::size_t n = rule.nodes.size();
  const double e = 0.5 * h;
  Complex s = 0.0;
  if constexpr (Dim == 2) {
    for (std::size_t i = 0; i < n; ++i) {
      const double dx = c[0] + e * rule.nodes[i] - p[0];
      for (std::size_t j = 0; j < n; ++j) {
        const double dy = c[1] + e * rule.nodes[j] - p[1];
        s += rule.weights[i] * rule.weights[j] * green<2>(k, std::sqrt(dx * dx + dy * dy));
      }
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const double dx = c[0] + e * rule.nodes[i] - p[0];
      for (std::size_t j = 0; j < n; ++j) {
        const double dy = c[1] + e * rule.nodes[j] - p[1];
        const double wij = rule.weights[i] * rule.weights[j];
        for (std::size_t l = 0; l < n; ++l) {
          const double dz = c[2] + e * rule.nodes[l] - p[2];
          s += wij * rule.weights[l] * green<3>(k, std::sqrt(dx * dx + dy * dy + dz * dz));
        }
      }
    }
  }
  return s * std::pow(e, Dim);
}

// Gauss order reaching ~1e-14 relative: the nearest complex singularity of the
// integrand lies at imaginary distance b half-widths from the minor-axis interval.
inline int tensor_order_for(double s) {
  const double b = 2.0 * s - 1.0;
  const double rho = b + std::sqrt(b * b + 1.0);
  const int n = static_cast<int>(std::ceil(14.0 / (2.0 * std::log10(rho))));
  return std::clamp(n, 2, 24);
}

}  // namespace detail

/// ∫_{cell} G(p − x') dx' over the axis-aligned cell of side h centred at c.
/// Exact to ~1e-10 relative for any p, including p inside the cell.
template <int Dim>
Complex cell_integral(Complex k, const Point<Dim>& p, const Point<Dim>& c, double h) {
  double s = 0.0;
  for (int q = 0; q < Dim; ++q) s = std::max(s, std::abs(p[q] - c[q]));
  s /= h;
  if (s < 1.0) {
    if constexpr (Dim == 2)
      return detail::polar_cell_2d(k, p, c, h);
    else
      return detail::polar_cell_3d(k, p, c, h);
  }
  return detail::tensor_cell<Dim>(k, p, c, h, detail::tensor_order_for(s));
}

/// Equal-measure approximation of cell_integral: disk (2D) or ball (3D) of the
/// cell's measure for offsets up to 2h, midpoint rule beyond.
template <int Dim>
Complex cell_integral_equal_measure(Complex k, const Point<Dim>& p, const Point<Dim>& c, double h) {
  const double r = distance<Dim>(p, c);
  const double measure = std::pow(h, Dim);
  if (r > 2.0 * h + 1e-12 * h) return measure * green<Dim>(k, r);
  if constexpr (Dim == 2) {
    const double a = h / std::sqrt(kPi);
    const Complex ka = k * a;
    if (r < 1e-12 * h) return (-0.5 * kJ * kPi * ka * special::hankel2_1(ka) - 1.0) / (k * k);
    return 2.0 * kPi * a / k * special::bessel_j1(ka) * green<2>(k, r);
  } else {
    const double a = h * std::cbrt(3.0 / (4.0 * kPi));
    const Complex ka = k * a;
    if (r < 1e-12 * h) return (std::exp(-kJ * ka) * (1.0 + kJ * ka) - 1.0) / (k * k);
    return 4.0 * kPi / (k * k * k) * (std::sin(ka) - ka * std::cos(ka)) * green<3>(k, r);
  }
}

namespace detail {

inline std::ptrdiff_t fft_size(std::ptrdiff_t n) {
  for (std::ptrdiff_t m = std::max<std::ptrdiff_t>(n, 1);; ++m) {
    std::ptrdiff_t r = m;
    for (int f : {2, 3, 5, 7})
      while (r % f == 0) r /= f;
    if (r == 1) return m;
  }
}

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(Complex* p) const { fftw_free(p); }
};

}  // namespace detail

/// Aligned scratch buffer for FFT lattices.
class FftBuffer {
 public:
  FftBuffer() = default;
  explicit FftBuffer(std::size_t n)
      : data_(static_cast<Complex*>(fftw_malloc(sizeof(Complex) * n))), size_(n) {
    if (!data_) throw Error("fftw_malloc failed");
  }
  Complex* data() const { return data_.get(); }
  std::size_t size() const { return size_; }
  fftw_complex* raw() const { return reinterpret_cast<fftw_complex*>(data_.get()); }

 private:
  std::unique_ptr<Complex, detail::FftwFree> data_;
  std::size_t size_ = 0;
};

/// Cell-integrated Green's kernel of one grid at one wavenumber, applied as a
/// zero-padded FFT convolution. Immutable after construction; `apply` may be
/// called concurrently with distinct workspaces.
template <int Dim>
class ConvolutionKernel {
 public:
  /// \param min_lattice optional lower bound on the FFT lattice per axis; the
  ///        lattice is always at least 2N−1 per axis.
  ConvolutionKernel(const Grid<Dim>& grid, const Wavenumber& wn, CellRule rule = CellRule::Exact,
                    const Index<Dim>& min_lattice = {})
      : grid_(grid), wn_(wn), rule_(rule) {
    lattice_total_ = 1;
    for (int q = 0; q < Dim; ++q) {
      lattice_[q] = detail::fft_size(std::max(2 * grid.extent(q) - 1, min_lattice[q]));
      lattice_total_ *= lattice_[q];
    }
    fill_table();
    make_plans();
    build_spectrum();
  }

  ConvolutionKernel(const ConvolutionKernel&) = delete;
  ConvolutionKernel& operator=(const ConvolutionKernel&) = delete;

  ~ConvolutionKernel() {
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    if (forward_) fftw_destroy_plan(forward_);
    if (backward_) fftw_destroy_plan(backward_);
  }

  const Grid<Dim>& grid() const { return grid_; }
  const Wavenumber& wavenumber() const { return wn_; }
  const Index<Dim>& lattice() const { return lattice_; }
  std::ptrdiff_t lattice_size() const { return lattice_total_; }
  CellRule rule() const { return rule_; }

  /// ∫ over the cell at offset `offset` (in cells) of G(0 − x').
  Complex entry(const Index<Dim>& offset) const {
    Index<Dim> a{};
    for (int q = 0; q < Dim; ++q) {
      a[q] = std::abs(offset[q]);
      if (a[q] >= grid_.extent(q)) throw Error("kernel offset outside the grid range");
    }
    std::sort(a.begin(), a.end(), std::greater<>());
    return table_[table_index(a)];
  }

  FftBuffer make_workspace() const { return FftBuffer(static_cast<std::size_t>(lattice_total_)); }

  /// out = k0² (G ∗ field) on the grid.
  void apply(const CVector& field, CVector& out, const FftBuffer& ws) const {
    if (field.size() != grid_.size()) throw Error("kernel apply: field does not match the grid");
    if (ws.size() != static_cast<std::size_t>(lattice_total_)) throw Error("kernel apply: bad workspace");
    out.resize(grid_.size());
    Complex* buf = ws.data();
    std::fill(buf, buf + lattice_total_, Complex(0.0));
    scatter(field.data(), buf);
    fftw_execute_dft(forward_, ws.raw(), ws.raw());
    for (std::ptrdiff_t i = 0; i < lattice_total_; ++i) buf[i] *= spectrum_[i];
    fftw_execute_dft(backward_, ws.raw(), ws.raw());
    gather(buf, out.data());
  }

  CVector apply(const CVector& field) const {
    auto ws = make_workspace();
    CVector out;
    apply(field, out, ws);
    return out;
  }

 private:
  std::ptrdiff_t table_index(const Index<Dim>& sorted) const {
    std::ptrdiff_t n = 0;
    for (int q = 0; q < Dim; ++q) n = n * table_side_ + sorted[q];
    return n;
  }

  void fill_table() {
    table_side_ = 0;
    for (int q = 0; q < Dim; ++q) table_side_ = std::max(table_side_, grid_.extent(q));
    std::ptrdiff_t total = 1;
    for (int q = 0; q < Dim; ++q) total *= table_side_;
    table_.assign(static_cast<std::size_t>(total), Complex(0.0));
    const double h = grid_.spacing();
    const Point<Dim> zero{};
    // only descending-sorted offsets that fit the grid are needed
    Index<Dim> sorted_ext = grid_.extent();
    std::sort(sorted_ext.begin(), sorted_ext.end(), std::greater<>());
    for (std::ptrdiff_t n = 0; n < total; ++n) {
      Index<Dim> a{};
      std::ptrdiff_t r = n;
      for (int q = Dim - 1; q >= 0; --q) {
        a[q] = r % table_side_;
        r /= table_side_;
      }
      bool needed = true;
      for (int q = 0; q + 1 < Dim; ++q) needed = needed && a[q] >= a[q + 1];
      for (int q = 0; q < Dim; ++q) needed = needed && a[q] < sorted_ext[q];
      if (!needed) continue;
      Point<Dim> c{};
      for (int q = 0; q < Dim; ++q) c[q] = h * static_cast<double>(a[q]);
      table_[n] = rule_ == CellRule::Exact ? cell_integral<Dim>(wn_.k0, zero, c, h)
                                           : cell_integral_equal_measure<Dim>(wn_.k0, zero, c, h);
    }
  }

  void make_plans() {
    FftBuffer tmp(static_cast<std::size_t>(lattice_total_));
    int dims[Dim];
    for (int q = 0; q < Dim; ++q) dims[q] = static_cast<int>(lattice_[q]);
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    forward_ = fftw_plan_dft(Dim, dims, tmp.raw(), tmp.raw(), FFTW_FORWARD, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft(Dim, dims, tmp.raw(), tmp.raw(), FFTW_BACKWARD, FFTW_ESTIMATE);
    if (!forward_ || !backward_) throw Error("FFTW planning failed");
  }

  void build_spectrum() {
    FftBuffer buf(static_cast<std::size_t>(lattice_total_));
    Complex* b = buf.data();
    std::fill(b, b + lattice_total_, Complex(0.0));
    // offsets −(N−1)..(N−1) stored circularly
    Index<Dim> span{};
    std::ptrdiff_t count = 1;
    for (int q = 0; q < Dim; ++q) {
      span[q] = 2 * grid_.extent(q) - 1;
      count *= span[q];
    }
    for (std::ptrdiff_t n = 0; n < count; ++n) {
      Index<Dim> off{};
      std::ptrdiff_t r = n;
      for (int q = Dim - 1; q >= 0; --q) {
        off[q] = r % span[q] - (grid_.extent(q) - 1);
        r /= span[q];
      }
      std::ptrdiff_t pos = 0;
      for (int q = 0; q < Dim; ++q) pos = pos * lattice_[q] + ((off[q] + lattice_[q]) % lattice_[q]);
      b[pos] = entry(off);
    }
    fftw_execute_dft(forward_, buf.raw(), buf.raw());
    const Complex scale = wn_.k0_squared() / static_cast<double>(lattice_total_);
    spectrum_.resize(static_cast<std::size_t>(lattice_total_));
    for (std::ptrdiff_t i = 0; i < lattice_total_; ++i) spectrum_[i] = b[i] * scale;
  }

  // Copy contiguous last-axis rows between the grid and the lattice.
  template <class F>
  void for_each_row(F&& f) const {
    const std::ptrdiff_t row = grid_.extent(Dim - 1);
    const std::ptrdiff_t rows = grid_.size() / row;
    for (std::ptrdiff_t r = 0; r < rows; ++r) {
      std::ptrdiff_t rem = r, lat = 0, stride = lattice_[Dim - 1];
      Index<Dim> idx{};
      for (int q = Dim - 2; q >= 0; --q) {
        idx[q] = rem % grid_.extent(q);
        rem /= grid_.extent(q);
      }
      for (int q = 0; q < Dim - 1; ++q) lat = lat * lattice_[q] + idx[q];
      f(r * row, lat * stride, row);
    }
  }

  void scatter(const Complex* src, Complex* lattice) const {
    for_each_row([&](std::ptrdiff_t g, std::ptrdiff_t l, std::ptrdiff_t len) {
      std::copy(src + g, src + g + len, lattice + l);
    });
  }
  void gather(const Complex* lattice, Complex* dst) const {
    for_each_row([&](std::ptrdiff_t g, std::ptrdiff_t l, std::ptrdiff_t len) {
      std::copy(lattice + l, lattice + l + len, dst + g);
    });
  }

  Grid<Dim> grid_;
  Wavenumber wn_;
  CellRule rule_;
  Index<Dim> lattice_{};
  std::ptrdiff_t lattice_total_ = 0;
  std::ptrdiff_t table_side_ = 0;
  std::vector<Complex> table_;
  std::vector<Complex> spectrum_;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

/// k0² Σ_n ∫_{τ_n} G(point − x') dx' · field[n] for each point.
template <int Dim>
CVector radiate(const Grid<Dim>& grid, const Wavenumber& wn, const CVector& field,
                const std::type_identity_t<std::vector<Point<Dim>>>& points) {
  if (field.size() != grid.size()) throw Error("radiate: field does not match the grid");
  CVector out = CVector::Zero(static_cast<Eigen::Index>(points.size()));
  const double h = grid.spacing();
  for (std::size_t p = 0; p < points.size(); ++p) {
    Complex s = 0.0;
    for (std::ptrdiff_t n = 0; n < grid.size(); ++n) {
      if (field[n] == Complex(0.0)) continue;
      s += cell_integral<Dim>(wn.k0, points[p], grid.center(n), h) * field[n];
    }
    out[static_cast<Eigen::Index>(p)] = wn.k0_squared() * s;
  }
  return out;
}

}  // namespace usfwi
