#include "usfwi/medium.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace usfwi;

namespace {

// Independent oracle values (long-double evaluation of the closed forms).
constexpr double kHalfDbInNp = 5.756462732485114e-06;
constexpr double kKappaWater = 4.2165626581211e-10;
constexpr double kKappaImagHalfDb = 1.1898305176614086e-12;
constexpr double kContrast1620 = -0.09632677945435142;

Grid<2> small_grid(std::ptrdiff_t nx, std::ptrdiff_t nz, double h) { return Grid<2>({nx, nz}, h, {0.0, 0.0}); }

}  // namespace

TEST(Attenuation, ZeroMapsToZero) { EXPECT_EQ(db_to_np(0.0), 0.0); }

TEST(Attenuation, HalfDbPerCmPerMhz) { EXPECT_NEAR(db_to_np(0.5), kHalfDbInNp, 1e-18); }

TEST(Attenuation, RoundTrip) {
  const double x = 1.2;
  EXPECT_NEAR(np_to_db(db_to_np(x)), x, 1e-12 * x);
}

TEST(Attenuation, NegativeRejected) { EXPECT_THROW(db_to_np(-1.0), Error); }

TEST(Compressibility, Water) {
  const Complex k = compressibility(1540.0, 0.0, 1000.0);
  EXPECT_NEAR(k.real(), kKappaWater, 1e-22);
  EXPECT_EQ(k.imag(), 0.0);
}

TEST(Compressibility, LossyImaginaryPart) {
  const Complex k = compressibility(1540.0, kHalfDbInNp, 1000.0);
  EXPECT_NEAR(-k.imag(), kKappaImagHalfDb, 1e-20);
  EXPECT_LE(k.imag(), 0.0);
}

TEST(Compressibility, InvalidInputs) {
  EXPECT_THROW(compressibility(0.0, 0.0, 1000.0), Error);
  EXPECT_THROW(compressibility(1540.0, 0.0, 0.0), Error);
  EXPECT_THROW(compressibility(1540.0, -1.0, 1000.0), Error);
}

TEST(Contrast, BackgroundIsZero) {
  const auto g = small_grid(4, 5, 1e-4);
  Background bg{1540.0, db_to_np(0.5), 1000.0};
  auto med = AcousticMedium<2>::homogeneous(g, bg);
  const auto m = contrast_from_medium(med, g);
  EXPECT_TRUE((m.values.array() == Complex(0.0)).all());
}

TEST(Contrast, SingleCell) {
  const auto g = small_grid(3, 3, 1e-4);
  auto med = AcousticMedium<2>::homogeneous(g, Background{});
  med.sos[4] = 1620.0;
  const auto m = contrast_from_medium(med, g);
  EXPECT_NEAR(m.values[4].real(), kContrast1620, 1e-12);
  EXPECT_EQ(m.values[0], Complex(0.0));
}

TEST(Contrast, PatchAveragesOntoCoarseCell) {
  const auto coarse = small_grid(1, 1, 2e-4);
  const auto fine = coarse.refined(2);
  auto med = AcousticMedium<2>::homogeneous(fine, Background{});
  med.sos << 1500.0, 1560.0, 1600.0, 1620.0;
  med.atten << 0.0, 1e-6, 2e-6, 3e-6;
  const auto fine_m = contrast_from_medium(med, fine);
  const auto coarse_m = contrast_from_medium(med, coarse);
  EXPECT_NEAR(std::abs(coarse_m.values[0] - fine_m.values.mean()), 0.0, 1e-15);
}

TEST(Contrast, ExtentMismatchRejected) {
  const auto g = small_grid(4, 4, 1e-4);
  const auto other = small_grid(4, 5, 1e-4);
  auto med = AcousticMedium<2>::homogeneous(g, Background{});
  EXPECT_THROW(contrast_from_medium(med, other), Error);
}

TEST(Contrast, InverseOfSingleCell) {
  const auto g = small_grid(1, 1, 1e-4);
  ContrastMap<2> m{g, CVector::Constant(1, Complex(kContrast1620, 0.0))};
  const auto med = medium_from_contrast(m, Background{});
  EXPECT_NEAR(med.sos[0], 1620.0, 0.01);
}

TEST(Contrast, RoundTripRandomMedium) {
  const auto g = small_grid(7, 6, 1e-4);
  Background bg{1540.0, db_to_np(0.7), 1000.0};
  auto med = AcousticMedium<2>::homogeneous(g, bg);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> c(1400.0, 1700.0), a(0.0, db_to_np(2.0));
  for (std::ptrdiff_t n = 0; n < g.size(); ++n) {
    med.sos[n] = c(rng);
    med.atten[n] = a(rng);
  }
  const auto back = medium_from_contrast(contrast_from_medium(med, g), bg);
  for (std::ptrdiff_t n = 0; n < g.size(); ++n) {
    EXPECT_LE(std::abs(back.sos[n] - med.sos[n]) / med.sos[n], 1e-10);
    EXPECT_LE(std::abs(back.atten[n] - med.atten[n]), 1e-10 * db_to_np(2.0));
  }
}

TEST(Contrast, NonPhysicalCellsReported) {
  const auto g = small_grid(2, 2, 1e-4);
  ContrastMap<2> m{g, CVector::Zero(4)};
  m.values[3] = -1.5;
  try {
    medium_from_contrast(m, Background{});
    FAIL() << "expected NonPhysicalContrast";
  } catch (const NonPhysicalContrast& e) {
    ASSERT_EQ(e.cells().size(), 1u);
    EXPECT_EQ(e.cells()[0], 3);
  }
}

TEST(GridTransfer, ProlongRestrictAreAdjoint) {
  const Grid<3> coarse({3, 2, 4}, 2e-4, {0.0, 0.0, 1e-3});
  const auto fine = coarse.refined(3);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd;
  CVector a(coarse.size()), f(fine.size());
  for (auto& v : a) v = {nd(rng), nd(rng)};
  for (auto& v : f) v = {nd(rng), nd(rng)};
  const Complex lhs = prolong(coarse, fine, a).dot(f) * fine.cell_measure();
  const Complex rhs = a.dot(restrict_average(coarse, fine, f)) * coarse.cell_measure();
  EXPECT_LE(std::abs(lhs - rhs), 1e-13 * std::abs(lhs));
}

TEST(GridTransfer, RefinementFactorChecks) {
  const Grid<2> coarse({4, 4}, 1e-4, {0.0, 0.0});
  EXPECT_EQ(refinement_factor(coarse, coarse.refined(2)), 2);
  const Grid<2> shifted({8, 8}, 5e-5, {1e-5, 0.0});
  EXPECT_THROW(refinement_factor(coarse, shifted), Error);
}

TEST(GridIndexing, LinearUnravelRoundTrip) {
  const Grid<3> g({3, 4, 5}, 1.0, {0.0, 0.0, 0.0});
  for (std::ptrdiff_t n = 0; n < g.size(); ++n) EXPECT_EQ(g.linear(g.unravel(n)), n);
  EXPECT_EQ(g.unravel(1)[2], 1);
}
