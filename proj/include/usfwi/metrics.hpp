#pragma once

/// \file usfwi/metrics.hpp
/// \brief RMSE, SSIM and region means on SoS maps.

#include "usfwi/grid.hpp"

#include <optional>
#include <vector>

namespace usfwi {

struct SsimParams {
  int window = 7;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
};

/// Root-mean-square difference (m/s), optionally restricted to a mask.
inline double rmse(const RVector& recon, const RVector& truth, const std::vector<char>* mask = nullptr) {
  if (recon.size() != truth.size()) throw Error("rmse: maps have different sizes");
  if (mask && mask->size() != static_cast<std::size_t>(truth.size())) throw Error("rmse: mask size mismatch");
  double s = 0.0;
  std::ptrdiff_t n = 0;
  for (Eigen::Index i = 0; i < truth.size(); ++i) {
    if (mask && !(*mask)[static_cast<std::size_t>(i)]) continue;
    s += (recon[i] - truth[i]) * (recon[i] - truth[i]);
    ++n;
  }
  if (n == 0) throw Error("rmse: empty mask");
  return std::sqrt(s / static_cast<double>(n));
}

inline double region_mean(const RVector& v, const std::vector<char>& mask) {
  if (mask.size() != static_cast<std::size_t>(v.size())) throw Error("region_mean: mask size mismatch");
  double s = 0.0;
  std::ptrdiff_t n = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (mask[static_cast<std::size_t>(i)]) s += v[i], ++n;
  if (n == 0) throw Error("region_mean: empty mask");
  return s / static_cast<double>(n);
}

/// Dynamic range for SSIM: truth max − min, or 1 for a constant truth.
inline double ssim_range(const RVector& truth) {
  const double r = truth.maxCoeff() - truth.minCoeff();
  return r > 0.0 ? r : 1.0;
}

namespace detail {

// Gaussian-weighted local mean over valid window positions, applied
// separably. Output grid has extent − window + 1 per axis.
template <int Dim>
std::vector<double> local_mean(const Grid<Dim>& g, const std::vector<double>& v, const std::vector<double>& w,
                               Index<Dim>& out_extent) {
  const int win = static_cast<int>(w.size());
  Index<Dim> ext = g.extent();
  std::vector<double> cur = v;
  for (int q = 0; q < Dim; ++q) {
    Index<Dim> next_ext = ext;
    next_ext[q] = ext[q] - win + 1;
    std::ptrdiff_t total = 1;
    for (auto e : next_ext) total *= e;
    std::vector<double> next(static_cast<std::size_t>(total));
    std::ptrdiff_t stride_in = 1;
    for (int r = Dim - 1; r > q; --r) stride_in *= ext[r];
    for (std::ptrdiff_t n = 0; n < total; ++n) {
      // Unravel against next_ext, ravel against ext.
      Index<Dim> idx{};
      std::ptrdiff_t rem = n;
      for (int r = Dim - 1; r >= 0; --r) idx[r] = rem % next_ext[r], rem /= next_ext[r];
      std::ptrdiff_t base = 0;
      for (int r = 0; r < Dim; ++r) base = base * ext[r] + idx[r];
      double acc = 0.0;
      for (int t = 0; t < win; ++t) acc += w[static_cast<std::size_t>(t)] * cur[static_cast<std::size_t>(base + t * stride_in)];
      next[static_cast<std::size_t>(n)] = acc;
    }
    cur.swap(next);
    ext = next_ext;
  }
  out_extent = ext;
  return cur;
}

}  // namespace detail

/// Mean SSIM over all full windows (Gaussian weights, no padding).
template <int Dim>
double ssim(const Grid<Dim>& g, const RVector& x, const RVector& y, double range, const SsimParams& p = {}) {
  if (x.size() != g.size() || y.size() != g.size()) throw Error("ssim: maps do not match the grid");
  for (int q = 0; q < Dim; ++q)
    if (g.extent(q) < p.window) throw Error("ssim: map smaller than the window");
  if (!(range > 0.0)) throw Error("ssim: dynamic range must be positive");
  std::vector<double> w(static_cast<std::size_t>(p.window));
  const double c = 0.5 * (p.window - 1);
  double sum = 0.0;
  for (int i = 0; i < p.window; ++i) sum += w[static_cast<std::size_t>(i)] = std::exp(-0.5 * (i - c) * (i - c) / (p.sigma * p.sigma));
  for (auto& v : w) v /= sum;
  const auto n = static_cast<std::size_t>(g.size());
  std::vector<double> a(n), b(n), aa(n), bb(n), ab(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = x[static_cast<Eigen::Index>(i)];
    b[i] = y[static_cast<Eigen::Index>(i)];
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  Index<Dim> e;
  const auto ma = detail::local_mean<Dim>(g, a, w, e), mb = detail::local_mean<Dim>(g, b, w, e);
  const auto maa = detail::local_mean<Dim>(g, aa, w, e), mbb = detail::local_mean<Dim>(g, bb, w, e);
  const auto mab = detail::local_mean<Dim>(g, ab, w, e);
  const double c1 = (p.k1 * range) * (p.k1 * range), c2 = (p.k2 * range) * (p.k2 * range);
  double acc = 0.0;
  for (std::size_t i = 0; i < ma.size(); ++i) {
    const double va = maa[i] - ma[i] * ma[i], vb = mbb[i] - mb[i] * mb[i], cov = mab[i] - ma[i] * mb[i];
    acc += ((2 * ma[i] * mb[i] + c1) * (2 * cov + c2)) / ((ma[i] * ma[i] + mb[i] * mb[i] + c1) * (va + vb + c2));
  }
  return acc / static_cast<double>(ma.size());
}

}  // namespace usfwi
