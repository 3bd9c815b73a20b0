#include "usfwi/phantoms.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace usfwi;

namespace {

// 24 mm × 24 mm at 0.1 mm around a 3 mm cyst at 10 mm depth.
Grid<2> cyst_grid() { return {{240, 240}, 1e-4, {-11.95e-3, 0.05e-3}}; }

ScenarioSpec desk(ScenarioKind k) {
  ScenarioSpec s = ScenarioSpec::preset(k);
  s.cyst_radius = 3e-3;
  s.cyst_depth = 10e-3;
  s.muscle_thickness = 4e-3;
  return s;
}

double mean_over(const RVector& v, const std::vector<char>& mask, double* sd = nullptr) {
  double s = 0.0, s2 = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) s += v[static_cast<Eigen::Index>(i)], s2 += v[static_cast<Eigen::Index>(i)] * v[static_cast<Eigen::Index>(i)], ++n;
  const double m = s / n;
  if (sd) *sd = std::sqrt(s2 / n - m * m);
  return m;
}

}  // namespace

TEST(Phantoms, SpeckleFreeSimpleCystHasPresetValues) {
  ScenarioSpec s = desk(ScenarioKind::SimpleCyst);
  s.speckle_std = 0.0;
  const auto med = build(s, cyst_grid());
  std::set<double> values(med.sos.begin(), med.sos.end());
  EXPECT_EQ(values, (std::set<double>{1540.0, 1580.0}));
  const auto r = region_masks(s, cyst_grid());
  for (std::size_t i = 0; i < r.wall.size(); ++i) {
    const auto e = static_cast<Eigen::Index>(i);
    if (r.wall[i]) {
      EXPECT_EQ(med.sos[e], 1580.0);
    }
    if (r.interior[i]) {
      EXPECT_EQ(med.sos[e], 1540.0);
      EXPECT_DOUBLE_EQ(med.atten[e], db_to_np(0.02));
    }
    if (!r.wall[i] && !r.interior[i]) {
      EXPECT_DOUBLE_EQ(med.atten[e], db_to_np(0.5));
    }
  }
}

TEST(Phantoms, SameSeedIsBitIdentical) {
  const ScenarioSpec s = desk(ScenarioKind::SolidCyst);
  const auto a = build(s, cyst_grid()), b = build(s, cyst_grid());
  EXPECT_EQ(a.sos, b.sos);
  EXPECT_EQ(a.atten, b.atten);
  ScenarioSpec t = s;
  t.seed = 2;
  EXPECT_NE(build(t, cyst_grid()).sos, a.sos);
}

TEST(Phantoms, TextureStatistics) {
  const ScenarioSpec s = desk(ScenarioKind::SolidCyst);
  const auto g = cyst_grid();
  const auto med = build(s, g);
  const auto r = region_masks(s, g);
  double sd = 0.0;
  EXPECT_NEAR(mean_over(med.sos, r.interior, &sd), 1620.0, 0.01 * 1620.0);
  EXPECT_NEAR(sd / 1620.0, 0.03, 0.01);
  std::vector<char> bg(r.interior.size());
  for (std::size_t i = 0; i < bg.size(); ++i) bg[i] = !r.interior[i] && !r.wall[i];
  EXPECT_NEAR(mean_over(med.sos, bg, &sd), 1540.0, 1e-9);
  EXPECT_NEAR(sd / 1540.0, 0.01, 0.002);
}

TEST(Phantoms, SpeckleCorrelationFollowsSmoothingKernel) {
  // Gaussian smoothing with std σ gives autocorrelation exp(−d²/4σ²).
  const Grid<2> g({256, 256}, 1e-4, {0.0, 0.0});
  const RVector z = detail::correlated_noise(g, 3e-4, 11);
  for (int lag : {1, 3, 6}) {
    double acc = 0.0;
    int n = 0;
    for (std::ptrdiff_t i = 0; i < 256; ++i)
      for (std::ptrdiff_t j = 0; j + lag < 256; ++j, ++n) acc += z[g.linear({i, j})] * z[g.linear({i, j + lag})];
    EXPECT_NEAR(acc / n, std::exp(-lag * lag / 36.0), 0.05) << "lag " << lag;
  }
}

TEST(Phantoms, DiskAreaConverges) {
  ScenarioSpec s = desk(ScenarioKind::SimpleCyst);
  s.wall_thickness = 0.0;
  const double r = 3e-3;
  const Grid<2> g({140, 140}, r / 20, {-6.95e-3, 3.05e-3});
  const auto m = region_masks(s, g);
  const double area = std::count(m.interior.begin(), m.interior.end(), 1) * g.cell_measure();
  EXPECT_NEAR(area / (kPi * r * r), 1.0, 0.02);
}

TEST(Phantoms, RegionOverflowRejected) {
  ScenarioSpec s = desk(ScenarioKind::SimpleCyst);
  s.cyst_depth = 22e-3;
  EXPECT_THROW(build(s, cyst_grid()), Error);
  s = desk(ScenarioKind::SimpleCyst);
  s.cyst_radius = -1.0;
  EXPECT_THROW(build(s, cyst_grid()), Error);
  EXPECT_THROW(build(ScenarioSpec::preset(ScenarioKind::SpherePair3d), cyst_grid()), Error);
}

TEST(Phantoms, MuscleLayer) {
  ScenarioSpec s = desk(ScenarioKind::MuscleCyst);
  s.speckle_std = 0.0;
  const auto g = cyst_grid();
  const auto med = build(s, g);
  for (std::ptrdiff_t n = 0; n < g.size(); n += 97) {
    const double z = g.center(n)[1];
    const auto r = region_masks(s, g);
    if (z < 4e-3 && !r.interior[static_cast<std::size_t>(n)] && !r.wall[static_cast<std::size_t>(n)]) {
      EXPECT_EQ(med.sos[n], 1590.0);
      EXPECT_DOUBLE_EQ(med.atten[n], db_to_np(0.7));
    }
  }
}

TEST(Phantoms, InitialModels) {
  const auto g = cyst_grid();
  for (auto k : {ScenarioKind::SimpleCyst, ScenarioKind::SolidCyst})
    EXPECT_EQ(initial_model(desk(k), g, 1e-3).values.norm(), 0.0);
  const ScenarioSpec s = desk(ScenarioKind::MuscleCyst);
  // Zero blur: exact target-free layer with background attenuation.
  const auto m0 = initial_model(s, g, 0.0);
  const Background bg;
  for (std::ptrdiff_t n = 0; n < g.size(); ++n) {
    const double c = g.center(n)[1] < 4e-3 ? 1590.0 : 1540.0;
    EXPECT_NEAR(std::abs(m0.values[n] - (compressibility(c, 0.0, 1000.0) / bg.kappa0() - 1.0)), 0.0, 1e-15);
  }
  // Blurred step: 10%→90% width ≈ 2.56σ.
  const double sigma = 1e-3;
  const auto mb = initial_model(s, g, sigma);
  const RVector c = sos_from_contrast(mb, bg);
  std::vector<double> prof;
  for (std::ptrdiff_t j = 0; j < g.extent(1); ++j) prof.push_back(c[g.linear({120, j})]);
  auto depth_at = [&](double level) {
    for (std::size_t j = 1; j < prof.size(); ++j)
      if (prof[j] <= level && prof[j - 1] > level)
        return g.center(Index<2>{0, static_cast<std::ptrdiff_t>(j - 1)})[1] +
               (prof[j - 1] - level) / (prof[j - 1] - prof[j]) * g.spacing();
    return 0.0;
  };
  const double width = depth_at(1540.0 + 0.1 * 50.0) - depth_at(1540.0 + 0.9 * 50.0);
  EXPECT_NEAR(width / (2.5631 * sigma), 1.0, 0.2);
}

TEST(Phantoms, SpherePair) {
  const ScenarioSpec s = ScenarioSpec::preset(ScenarioKind::SpherePair3d);
  const Grid<3> g({40, 20, 20}, 2e-4, {-3.9e-3, -1.9e-3, 10.1e-3});
  const auto med = build(s, g);
  const auto r = region_masks(s, g);
  ASSERT_EQ(r.inclusions.size(), 2u);
  EXPECT_DOUBLE_EQ(mean_over(med.sos, r.inclusions[0]), 1400.0);
  EXPECT_DOUBLE_EQ(mean_over(med.sos, r.inclusions[1]), 1600.0);
  std::vector<char> bg(static_cast<std::size_t>(g.size()));
  for (std::size_t i = 0; i < bg.size(); ++i) bg[i] = !r.inclusions[0][i] && !r.inclusions[1][i];
  EXPECT_DOUBLE_EQ(mean_over(med.sos, bg), 1540.0);
  EXPECT_NEAR(mean_over(med.atten, bg) / db_to_np(0.7), 1.0, 1e-12);
}
