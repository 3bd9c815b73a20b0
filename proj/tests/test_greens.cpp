#include "usfwi/greens.hpp"

#include <gtest/gtest.h>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <chrono>
#include <map>
#include <random>

using namespace usfwi;

namespace {

// Nested tanh-sinh integration of a real function over a rectangle, with the
// rectangle split so that `p` (if inside) sits on sub-rectangle corners.
template <class F>
double oracle_rect_2d(F f, double x0, double x1, double y0, double y1, double px, double py) {
  boost::math::quadrature::tanh_sinh<double> ts;
  std::vector<double> xs{x0}, ys{y0};
  if (px > x0 && px < x1) xs.push_back(px);
  if (py > y0 && py < y1) ys.push_back(py);
  xs.push_back(x1);
  ys.push_back(y1);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i)
    for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
      auto inner = [&](double x) {
        return ts.integrate([&](double y) { return f(x, y); }, ys[j], ys[j + 1], 1e-13);
      };
      total += ts.integrate(inner, xs[i], xs[i + 1], 1e-13);
    }
  return total;
}

// ∫_cell (−j/4) H0^(2)(k r) for real k, built from the standard-library Bessel
// functions: Re = −Y0/4, Im = −J0/4.
Complex oracle_cell_2d(double k, double px, double py, double cx, double cy, double h) {
  auto r = [&](double x, double y) { return k * std::hypot(x - px, y - py); };
  auto re = [&](double x, double y) {
    const double a = r(x, y);
    return a == 0.0 ? 0.0 : -0.25 * std::cyl_neumann(0.0, a);
  };
  auto im = [&](double x, double y) { return -0.25 * std::cyl_bessel_j(0.0, r(x, y)); };
  const double e = 0.5 * h;
  return {oracle_rect_2d(re, cx - e, cx + e, cy - e, cy + e, px, py),
          oracle_rect_2d(im, cx - e, cx + e, cy - e, cy + e, px, py)};
}

// Triple tanh-sinh for e^{−jkr}/(4πr), octant-split around p.
Complex oracle_cell_3d(double k, const Point<3>& p, const Point<3>& c, double h) {
  boost::math::quadrature::tanh_sinh<double> ts;
  std::array<std::vector<double>, 3> br;
  for (int q = 0; q < 3; ++q) {
    br[q] = {c[q] - 0.5 * h};
    if (p[q] > c[q] - 0.5 * h && p[q] < c[q] + 0.5 * h) br[q].push_back(p[q]);
    br[q].push_back(c[q] + 0.5 * h);
  }
  Complex total = 0.0;
  for (int part = 0; part < 2; ++part) {
    auto f = [&](double x, double y, double z) {
      const double r = std::sqrt((x - p[0]) * (x - p[0]) + (y - p[1]) * (y - p[1]) + (z - p[2]) * (z - p[2]));
      if (r == 0.0) return 0.0;
      return (part == 0 ? std::cos(k * r) : -std::sin(k * r)) / (4.0 * kPi * r);
    };
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < br[0].size(); ++i)
      for (std::size_t j = 0; j + 1 < br[1].size(); ++j)
        for (std::size_t l = 0; l + 1 < br[2].size(); ++l) {
          s += ts.integrate(
              [&](double x) {
                return ts.integrate(
                    [&](double y) {
                      return ts.integrate([&](double z) { return f(x, y, z); }, br[2][l], br[2][l + 1], 1e-10);
                    },
                    br[1][j], br[1][j + 1], 1e-10);
              },
              br[0][i], br[0][i + 1], 1e-10);
        }
    (part == 0 ? total.real(s) : total.imag(s));
  }
  return total;
}

CVector random_field(std::ptrdiff_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  CVector v(n);
  for (auto& x : v) x = {nd(rng), nd(rng)};
  return v;
}

double rel(const CVector& a, const CVector& b) { return (a - b).norm() / b.norm(); }

// Dense k0² G·f, with every matrix entry integrated directly per distinct offset.
CVector dense_apply(const Grid<2>& g, Complex k, const CVector& f) {
  std::map<std::pair<std::ptrdiff_t, std::ptrdiff_t>, Complex> cache;
  const double h = g.spacing();
  CVector out = CVector::Zero(g.size());
  for (std::ptrdiff_t n = 0; n < g.size(); ++n) {
    const auto a = g.unravel(n);
    for (std::ptrdiff_t m = 0; m < g.size(); ++m) {
      const auto b = g.unravel(m);
      const auto key = std::make_pair(a[0] - b[0], a[1] - b[1]);
      auto it = cache.find(key);
      if (it == cache.end())
        it = cache.emplace(key, cell_integral<2>(k, g.center(n), g.center(m), h)).first;
      out[n] += it->second * f[m];
    }
  }
  return out * (k * k);
}

}  // namespace

TEST(Wavenumber, PrincipalRoot) {
  Background bg{1540.0, db_to_np(0.5), 1000.0};
  const auto wn = Wavenumber::from(2.0 * kPi * 1e6, bg);
  EXPECT_GT(wn.k0.real(), 0.0);
  EXPECT_LT(wn.k0.imag(), 0.0);
  EXPECT_NEAR(wn.k0.real(), 2.0 * kPi * 1e6 / 1540.0, 1e-5 * wn.k0.real());
  EXPECT_THROW(Wavenumber::from(0.0, bg), Error);
}

TEST(CellIntegral, KernelMatchesQuadratureOracle2D) {
  // 16² grid with k0 h = 0.5; every distinct kernel entry against the oracle.
  const double h = 1e-4, k = 0.5 / h;
  const Grid<2> g({16, 16}, h, {0.0, 0.0});
  ConvolutionKernel<2> kernel(g, Wavenumber{k * 1540.0, Complex(k, 0.0)});
  double worst = 0.0;
  for (std::ptrdiff_t a = 0; a < 16; ++a)
    for (std::ptrdiff_t b = 0; b <= a; ++b) {
      const Complex ref = oracle_cell_2d(k, 0.0, 0.0, a * h, b * h, h);
      const Complex got = kernel.entry({a, b});
      worst = std::max(worst, std::abs(got - ref) / std::abs(ref));
    }
  EXPECT_LE(worst, 1e-6);
}

TEST(CellIntegral, OffCentrePointsMatchOracle2D) {
  const double h = 2e-4, k = 0.5 / h;
  const Point<2> c{0.0, 0.0};
  for (Point<2> p : {Point<2>{0.3 * h, -0.1 * h}, Point<2>{0.5 * h, 0.2 * h}, Point<2>{0.8 * h, 0.7 * h},
                     Point<2>{1.2 * h, 0.0}, Point<2>{3.0 * h, -1.7 * h}}) {
    const Complex ref = oracle_cell_2d(k, p[0], p[1], c[0], c[1], h);
    const Complex got = cell_integral<2>(Complex(k, 0.0), p, c, h);
    EXPECT_LE(std::abs(got - ref), 1e-8 * std::abs(ref)) << p[0] / h << "," << p[1] / h;
  }
}

TEST(CellIntegral, KernelMatchesQuadratureOracle3D) {
  const double h = 1e-4, k = 0.5 / h;
  const Point<3> zero{};
  for (Index<3> off : {Index<3>{0, 0, 0}, Index<3>{1, 0, 0}, Index<3>{1, 1, 1}, Index<3>{2, 1, 0},
                       Index<3>{5, 3, 2}, Index<3>{15, 0, 0}}) {
    const Point<3> c{off[0] * h, off[1] * h, off[2] * h};
    const Complex ref = oracle_cell_3d(k, zero, c, h);
    const Complex got = cell_integral<3>(Complex(k, 0.0), zero, c, h);
    EXPECT_LE(std::abs(got - ref), 1e-6 * std::abs(ref)) << off[0] << off[1] << off[2];
  }
}

TEST(CellIntegral, LossyBackgroundMatchesComplexQuadrature) {
  // Reference: nested tanh-sinh of the complex-argument Hankel function, which
  // is itself checked against high-precision values in test_special.
  const double h = 1e-4;
  const Complex k(0.6 / h, -0.05 / h);
  const Point<2> p{0.1 * h, -0.2 * h}, c{0.0, 0.0};
  auto part = [&](bool imag) {
    return oracle_rect_2d(
        [&](double x, double y) {
          const double r = std::hypot(x - p[0], y - p[1]);
          if (r == 0.0) return 0.0;
          const Complex g = green<2>(k, r);
          return imag ? g.imag() : g.real();
        },
        -0.5 * h, 0.5 * h, -0.5 * h, 0.5 * h, p[0], p[1]);
  };
  const Complex ref(part(false), part(true));
  EXPECT_LE(std::abs(cell_integral<2>(k, p, c, h) - ref), 1e-9 * std::abs(ref));
}

TEST(Kernel, EvenInOffset) {
  const Grid<2> g({12, 9}, 1e-4, {0.0, 0.0});
  ConvolutionKernel<2> kernel(g, Wavenumber{1.0, Complex(3000.0, -20.0)});
  for (std::ptrdiff_t a = -11; a <= 11; ++a)
    for (std::ptrdiff_t b = -8; b <= 8; ++b) EXPECT_EQ(kernel.entry({a, b}), kernel.entry({-a, -b}));
}

TEST(Kernel, LossyEntriesDecayBeyondThreeCells) {
  const double h = 1e-4;
  const Grid<2> g({64, 4}, h, {0.0, 0.0});
  ConvolutionKernel<2> kernel(g, Wavenumber{1.0, Complex(0.5 / h, -0.05 / h)});
  for (std::ptrdiff_t a = 3; a < 63; ++a)
    EXPECT_LT(std::abs(kernel.entry({a + 1, 0})), std::abs(kernel.entry({a, 0}))) << a;
}

TEST(Kernel, LatticeIsAtLeastTwiceMinusOne) {
  const Grid<3> g({5, 7, 4}, 1e-4, {0.0, 0.0, 0.0});
  ConvolutionKernel<3> kernel(g, Wavenumber{1.0, Complex(4000.0, 0.0)});
  for (int q = 0; q < 3; ++q) EXPECT_GE(kernel.lattice()[q], 2 * g.extent(q) - 1);
}

TEST(Apply, ZeroFieldGivesZero) {
  const Grid<2> g({8, 8}, 1e-4, {0.0, 0.0});
  ConvolutionKernel<2> kernel(g, Wavenumber{1.0, Complex(4000.0, -10.0)});
  const CVector out = kernel.apply(CVector::Zero(g.size()));
  EXPECT_EQ(out.norm(), 0.0);
}

TEST(Apply, MatchesDenseAssembly24) {
  const auto t0 = std::chrono::steady_clock::now();
  const double h = 1e-4;
  const Grid<2> g({24, 24}, h, {-1e-3, 2e-3});
  const Complex k(0.5 / h, -0.01 / h);
  ConvolutionKernel<2> kernel(g, Wavenumber{1.0, k});
  const CVector f = random_field(g.size(), 3);
  EXPECT_LE(rel(kernel.apply(f), dense_apply(g, k, f)), 1e-12);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_LT(secs, 5.0);
}

TEST(Apply, MatchesDenseAssembly3D) {
  const double h = 1e-4;
  const Grid<3> g({5, 4, 6}, h, {0.0, 0.0, 0.0});
  const Complex k(0.7 / h, 0.0);
  ConvolutionKernel<3> kernel(g, Wavenumber{1.0, k});
  const CVector f = random_field(g.size(), 4);
  CVector dense = CVector::Zero(g.size());
  for (std::ptrdiff_t n = 0; n < g.size(); ++n)
    for (std::ptrdiff_t m = 0; m < g.size(); ++m)
      dense[n] += cell_integral<3>(k, g.center(n), g.center(m), h) * f[m];
  dense *= k * k;
  EXPECT_LE(rel(kernel.apply(f), dense), 1e-12);
}

TEST(Apply, Linear) {
  const Grid<2> g({20, 13}, 1e-4, {0.0, 0.0});
  ConvolutionKernel<2> kernel(g, Wavenumber{1.0, Complex(5000.0, -30.0)});
  const CVector f = random_field(g.size(), 5), q = random_field(g.size(), 6);
  const Complex a(0.3, -1.2), b(-2.0, 0.4);
  const CVector lhs = kernel.apply(a * f + b * q);
  const CVector rhs = a * kernel.apply(f) + b * kernel.apply(q);
  EXPECT_LE(rel(lhs, rhs), 1e-12);
}

TEST(Apply, ExtraPaddingChangesNothing) {
  const Grid<2> g({18, 11}, 1e-4, {0.0, 0.0});
  const Wavenumber wn{1.0, Complex(6000.0, -40.0)};
  ConvolutionKernel<2> tight(g, wn);
  ConvolutionKernel<2> loose(g, wn, CellRule::Exact, {2 * tight.lattice()[0], 2 * tight.lattice()[1]});
  const CVector f = random_field(g.size(), 7);
  EXPECT_LE(rel(loose.apply(f), tight.apply(f)), 1e-14);
}

TEST(Apply, TranslationEquivariant) {
  const Grid<2> g({16, 16}, 1e-4, {0.0, 0.0});
  ConvolutionKernel<2> kernel(g, Wavenumber{1.0, Complex(5000.0, 0.0)});
  CVector f = CVector::Zero(g.size()), shifted = CVector::Zero(g.size());
  f[g.linear({6, 7})] = 1.0;
  f[g.linear({8, 5})] = Complex(0.0, 2.0);
  shifted[g.linear({7, 7})] = 1.0;
  shifted[g.linear({9, 5})] = Complex(0.0, 2.0);
  const CVector a = kernel.apply(f), b = kernel.apply(shifted);
  for (std::ptrdiff_t x = 0; x + 1 < 16; ++x)
    for (std::ptrdiff_t z = 0; z < 16; ++z)
      EXPECT_LE(std::abs(b[g.linear({x + 1, z})] - a[g.linear({x, z})]), 1e-12 * a.norm());
}

TEST(Apply, ShapeMismatchRejected) {
  const Grid<2> g({4, 4}, 1e-4, {0.0, 0.0});
  ConvolutionKernel<2> kernel(g, Wavenumber{1.0, Complex(5000.0, 0.0)});
  EXPECT_THROW(kernel.apply(CVector::Zero(5)), Error);
}

TEST(Radiate, ZeroFieldGivesZero) {
  const Grid<2> g({6, 6}, 1e-4, {0.0, 0.0});
  const auto out = radiate(g, Wavenumber{1.0, Complex(5000.0, 0.0)}, CVector::Zero(g.size()),
                           {Point<2>{0.0, -1e-3}, Point<2>{1e-3, -1e-3}});
  EXPECT_EQ(out.norm(), 0.0);
}

TEST(Radiate, FarFieldOfSingleCell) {
  const double h = 1e-4;
  const Grid<2> g({1, 1}, h, {0.0, 0.0});
  // the cell average differs from the midpoint value by ~(k h)²/24
  const Complex k(0.1 / h, -0.002 / h);
  for (double d : {20.0, 35.0, 80.0}) {
    const Point<2> p{0.6 * d * h, -0.8 * d * h};
    const auto out = radiate(g, Wavenumber{1.0, k}, CVector::Ones(1), {p});
    const Complex point = h * h * k * k * green<2>(k, d * h);
    EXPECT_LE(std::abs(out[0] - point), 1e-3 * std::abs(point)) << d;
  }
}

TEST(Radiate, MatchesDenseAssembly16) {
  const double h = 1e-4;
  const Grid<2> g({16, 16}, h, {0.0, 1e-3});
  const Complex k(0.5 / h, -0.02 / h);
  const Wavenumber wn{1.0, k};
  const CVector f = random_field(g.size(), 8);
  std::vector<Point<2>> pts;
  for (int e = 0; e < 8; ++e) pts.push_back({(e - 3.5) * 3e-4, 0.0});
  const CVector got = radiate(g, wn, f, pts);
  // Dense evaluation with oracle-grade entries for a subset of points.
  CVector dense(8);
  for (int e = 0; e < 8; ++e) {
    Complex s = 0.0;
    for (std::ptrdiff_t n = 0; n < g.size(); ++n) s += cell_integral<2>(k, pts[e], g.center(n), h) * f[n];
    dense[e] = k * k * s;
  }
  EXPECT_LE(rel(got, dense), 1e-12);
  // Entries of one row against the quadrature oracle (lossless k).
  const Complex kr(0.5 / h, 0.0);
  for (std::ptrdiff_t n = 0; n < g.size(); n += 37) {
    const auto c = g.center(n);
    const Complex a = oracle_cell_2d(kr.real(), pts[2][0], pts[2][1], c[0], c[1], h);
    EXPECT_LE(std::abs(cell_integral<2>(kr, pts[2], c, h) - a), 1e-8 * std::abs(a));
  }
}

TEST(EqualMeasure, DeviationFromExactCellIntegral) {
  // Quantifies the equal-area-disk rule against the exact cell integral.
  const double h = 1e-4, k = 0.5 / h;
  const Point<2> zero{};
  const Complex kk(k, 0.0);
  const Complex self_exact = cell_integral<2>(kk, zero, zero, h);
  const Complex self_disk = cell_integral_equal_measure<2>(kk, zero, zero, h);
  const double self_dev = std::abs(self_disk - self_exact) / std::abs(self_exact);
  const Point<2> near{h, 0.0}, far{3 * h, 0.0};
  const double near_dev = std::abs(cell_integral_equal_measure<2>(kk, zero, near, h) - cell_integral<2>(kk, zero, near, h)) /
                          std::abs(cell_integral<2>(kk, zero, near, h));
  const double far_dev = std::abs(cell_integral_equal_measure<2>(kk, zero, far, h) - cell_integral<2>(kk, zero, far, h)) /
                         std::abs(cell_integral<2>(kk, zero, far, h));
  RecordProperty("self_deviation", std::to_string(self_dev));
  RecordProperty("near_deviation", std::to_string(near_dev));
  RecordProperty("far_deviation", std::to_string(far_dev));
  std::printf("equal-measure deviation: self %.3e, offset 1 %.3e, offset 3 %.3e\n", self_dev, near_dev, far_dev);
  EXPECT_LT(self_dev, 5e-2);
  EXPECT_LT(near_dev, 5e-2);
  EXPECT_LT(far_dev, 5e-2);
  EXPECT_GT(self_dev, 1e-6);  // the two rules really differ
}
