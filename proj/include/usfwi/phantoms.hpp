#pragma once

/// \file usfwi/phantoms.hpp
/// \brief Seeded cyst, muscle-cyst and sphere-pair phantoms with speckle.
///
/// Coordinates: axis 0 is lateral, the last axis is depth. In 3D axis 1 is
/// elevation. Depths are measured from z = 0 (the array plane).

#include "usfwi/medium.hpp"

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <string>

namespace usfwi {

enum class ScenarioKind { SimpleCyst, SolidCyst, MuscleCyst, SpherePair3d, Custom };

inline std::string to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::SimpleCyst: return "simple_cyst";
    case ScenarioKind::SolidCyst: return "solid_cyst";
    case ScenarioKind::MuscleCyst: return "muscle_cyst";
    case ScenarioKind::SpherePair3d: return "sphere_pair_3d";
    case ScenarioKind::Custom: return "custom";
  }
  return "custom";
}

inline ScenarioKind scenario_kind_from_string(const std::string& s) {
  for (auto k : {ScenarioKind::SimpleCyst, ScenarioKind::SolidCyst, ScenarioKind::MuscleCyst,
                 ScenarioKind::SpherePair3d, ScenarioKind::Custom})
    if (to_string(k) == s) return k;
  throw Error("unknown scenario kind '" + s + "'");
}

/// SoS (m/s) and attenuation slope (dB/cm/MHz) of one region.
struct Tissue {
  double sos = 1540.0;
  double atten_db = 0.0;
};

/// Ball (3D) or disk (2D) inclusion with uniform properties.
struct Inclusion {
  std::vector<double> center;  ///< lateral[, elevation], depth (m)
  double radius = 0.0;
  Tissue tissue;
};

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::SimpleCyst;

  // Cyst geometry (2D scenarios).
  double cyst_radius = 10e-3;
  double wall_thickness = 0.8e-3;
  double cyst_lateral = 0.0;
  double cyst_depth = 25e-3;

  // Muscle layer, from muscle_top down by muscle_thickness.
  double muscle_top = 0.0;
  double muscle_thickness = 8e-3;

  Tissue background{1540.0, 0.5};
  Tissue cyst_fluid{1540.0, 0.02};
  Tissue solid{1620.0, 1.2};
  Tissue wall{1580.0, 0.5};
  Tissue muscle{1590.0, 0.7};

  std::vector<Inclusion> inclusions;  ///< sphere_pair_3d and custom

  double speckle_std = 0.01;       ///< relative SoS std of the background texture
  double solid_std = 0.03;         ///< relative SoS std inside the solid cyst
  double correlation_length = 0.3e-3;
  std::uint64_t seed = 1;

  void validate() const {
    auto tissue_ok = [](const Tissue& t) { return t.sos > 0.0 && t.atten_db >= 0.0; };
    for (const Tissue* t : {&background, &cyst_fluid, &solid, &wall, &muscle})
      if (!tissue_ok(*t)) throw Error("scenario: SoS must be positive and attenuation non-negative");
    for (const auto& inc : inclusions) {
      if (!(inc.radius > 0.0)) throw Error("scenario: inclusion radius must be positive");
      if (!tissue_ok(inc.tissue)) throw Error("scenario: inclusion SoS must be positive");
    }
    if (kind != ScenarioKind::SpherePair3d && kind != ScenarioKind::Custom) {
      if (!(cyst_radius > 0.0)) throw Error("scenario: cyst radius must be positive");
      if (!(wall_thickness >= 0.0)) throw Error("scenario: wall thickness must be >= 0");
    }
    if (kind == ScenarioKind::MuscleCyst && !(muscle_thickness > 0.0))
      throw Error("scenario: muscle thickness must be positive");
    if (!(speckle_std >= 0.0) || !(solid_std >= 0.0)) throw Error("scenario: speckle std must be >= 0");
    if (!(correlation_length >= 0.0)) throw Error("scenario: correlation length must be >= 0");
  }

  /// Default per-kind values at full scale.
  static ScenarioSpec preset(ScenarioKind k) {
    ScenarioSpec s;
    s.kind = k;
    if (k == ScenarioKind::MuscleCyst) s.cyst_depth = 20e-3;
    if (k == ScenarioKind::SpherePair3d) {
      s.background = {1540.0, 0.7};
      s.speckle_std = 0.0;
      s.inclusions = {{{-1.5e-3, 0.0, 12e-3}, 0.8e-3, {1400.0, 0.05}},
                      {{1.5e-3, 0.0, 12e-3}, 0.5e-3, {1600.0, 0.7}}};
    }
    return s;
  }
};

namespace detail {

/// Separable Gaussian smoothing with edge replication; sigma in cells.
template <int Dim>
RVector gaussian_blur(const Grid<Dim>& g, const RVector& v, double sigma) {
  if (!(sigma > 0.0)) return v;
  const int half = static_cast<int>(std::ceil(4.0 * sigma));
  std::vector<double> w(2 * half + 1);
  double sum = 0.0;
  for (int i = -half; i <= half; ++i) sum += w[i + half] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (auto& x : w) x /= sum;
  RVector cur = v, next(v.size());
  for (int q = 0; q < Dim; ++q) {
    std::ptrdiff_t stride = 1;
    for (int r = Dim - 1; r > q; --r) stride *= g.extent(r);
    const std::ptrdiff_t len = g.extent(q);
    for (std::ptrdiff_t n = 0; n < g.size(); ++n) {
      const std::ptrdiff_t i = g.unravel(n)[q];
      double acc = 0.0;
      for (int t = -half; t <= half; ++t) {
        const std::ptrdiff_t j = std::clamp<std::ptrdiff_t>(i + t, 0, len - 1);
        acc += w[t + half] * cur[n + (j - i) * stride];
      }
      next[n] = acc;
    }
    std::swap(cur, next);
  }
  return cur;
}

/// Smoothed white noise scaled to unit standard deviation.
template <int Dim>
RVector correlated_noise(const Grid<Dim>& g, double corr_length, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  RVector z(g.size());
  for (auto& x : z) x = nd(rng);
  z = gaussian_blur(g, z, corr_length / g.spacing());
  z.array() -= z.mean();
  const double sd = std::sqrt(z.squaredNorm() / static_cast<double>(z.size()));
  if (sd > 0.0) z /= sd;
  return z;
}

/// Textured SoS over a mask, renormalized to exactly `mean` on that mask.
inline void texture(RVector& sos, const std::vector<char>& mask, const RVector& z, double mean, double rel_std) {
  double zm = 0.0;
  std::ptrdiff_t count = 0;
  for (std::size_t n = 0; n < mask.size(); ++n)
    if (mask[n]) zm += z[static_cast<Eigen::Index>(n)], ++count;
  if (count == 0) return;
  zm /= static_cast<double>(count);
  for (std::size_t n = 0; n < mask.size(); ++n)
    if (mask[n]) sos[static_cast<Eigen::Index>(n)] = mean * (1.0 + rel_std * (z[static_cast<Eigen::Index>(n)] - zm));
}

template <int Dim>
double depth_of(const Point<Dim>& x) {
  return x[Dim - 1];
}

template <int Dim>
double distance_to(const Point<Dim>& x, const std::vector<double>& c) {
  if (c.size() != static_cast<std::size_t>(Dim)) throw Error("inclusion center has the wrong dimension");
  double s = 0.0;
  for (int q = 0; q < Dim; ++q) s += (x[q] - c[q]) * (x[q] - c[q]);
  return std::sqrt(s);
}

template <int Dim>
Point<Dim> cyst_center(const ScenarioSpec& s) {
  Point<Dim> c{};
  c[0] = s.cyst_lateral;
  c[Dim - 1] = s.cyst_depth;
  return c;
}

template <int Dim>
double distance_to(const Point<Dim>& x, const Point<Dim>& c) {
  double s = 0.0;
  for (int q = 0; q < Dim; ++q) s += (x[q] - c[q]) * (x[q] - c[q]);
  return std::sqrt(s);
}

/// Rejects regions whose bounding box leaves the grid.
template <int Dim>
void check_fits(const Grid<Dim>& g, const Point<Dim>& c, double r, const char* what) {
  const auto lo = g.lower(), hi = g.upper();
  for (int q = 0; q < Dim; ++q)
    if (c[q] - r < lo[q] || c[q] + r > hi[q])
      throw Error(std::string("scenario: ") + what + " does not fit in the grid");
}

}  // namespace detail

/// Cell-center membership masks for the named regions.
template <int Dim>
struct RegionMasks {
  std::vector<char> interior, wall, muscle;
  std::vector<std::vector<char>> inclusions;
};

template <int Dim>
RegionMasks<Dim> region_masks(const ScenarioSpec& s, const Grid<Dim>& g) {
  RegionMasks<Dim> r;
  const auto n = static_cast<std::size_t>(g.size());
  r.interior.assign(n, 0);
  r.wall.assign(n, 0);
  r.muscle.assign(n, 0);
  const bool cyst = s.kind == ScenarioKind::SimpleCyst || s.kind == ScenarioKind::SolidCyst ||
                    s.kind == ScenarioKind::MuscleCyst;
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = g.center(static_cast<std::ptrdiff_t>(i));
    if (cyst) {
      const double d = detail::distance_to<Dim>(x, detail::cyst_center<Dim>(s));
      if (d < s.cyst_radius)
        r.interior[i] = 1;
      else if (d < s.cyst_radius + s.wall_thickness)
        r.wall[i] = 1;
    }
    if (s.kind == ScenarioKind::MuscleCyst) {
      const double z = detail::depth_of<Dim>(x);
      if (z >= s.muscle_top && z < s.muscle_top + s.muscle_thickness && !r.interior[i] && !r.wall[i])
        r.muscle[i] = 1;
    }
  }
  for (const auto& inc : s.inclusions) {
    std::vector<char> m(n, 0);
    for (std::size_t i = 0; i < n; ++i)
      if (detail::distance_to<Dim>(g.center(static_cast<std::ptrdiff_t>(i)), inc.center) < inc.radius) m[i] = 1;
    r.inclusions.push_back(std::move(m));
  }
  return r;
}

namespace detail {

template <int Dim>
void check_scenario_fits(const ScenarioSpec& s, const Grid<Dim>& g) {
  s.validate();
  const bool cyst = s.kind == ScenarioKind::SimpleCyst || s.kind == ScenarioKind::SolidCyst ||
                    s.kind == ScenarioKind::MuscleCyst;
  if (cyst) check_fits<Dim>(g, cyst_center<Dim>(s), s.cyst_radius + s.wall_thickness, "cyst");
  for (const auto& inc : s.inclusions) {
    if (inc.center.size() != static_cast<std::size_t>(Dim)) throw Error("scenario: inclusion center has the wrong dimension");
    Point<Dim> c{};
    for (int q = 0; q < Dim; ++q) c[q] = inc.center[q];
    check_fits<Dim>(g, c, inc.radius, "inclusion");
  }
  if (s.kind == ScenarioKind::MuscleCyst) {
    if (s.muscle_top + s.muscle_thickness <= g.lower()[Dim - 1] || s.muscle_top >= g.upper()[Dim - 1])
      throw Error("scenario: muscle layer does not intersect the grid");
  }
  if (s.kind == ScenarioKind::SpherePair3d && Dim != 3) throw Error("scenario: sphere_pair_3d needs a 3D grid");
}

/// Piecewise-constant layered medium without targets or texture.
template <int Dim>
AcousticMedium<Dim> layered(const ScenarioSpec& s, const Grid<Dim>& g, const Background& bg) {
  AcousticMedium<Dim> med{g, RVector::Constant(g.size(), s.background.sos),
                          RVector::Constant(g.size(), db_to_np(s.background.atten_db)), bg};
  if (s.kind == ScenarioKind::MuscleCyst) {
    for (std::ptrdiff_t n = 0; n < g.size(); ++n) {
      const double z = depth_of<Dim>(g.center(n));
      if (z >= s.muscle_top && z < s.muscle_top + s.muscle_thickness) {
        med.sos[n] = s.muscle.sos;
        med.atten[n] = db_to_np(s.muscle.atten_db);
      }
    }
  }
  return med;
}

}  // namespace detail

/// Rasterizes the scenario onto `g`. The speckle realization depends only on
/// the seed and the grid.
template <int Dim>
AcousticMedium<Dim> build(const ScenarioSpec& s, const Grid<Dim>& g, const Background& bg = {}) {
  detail::check_scenario_fits(s, g);
  const RegionMasks<Dim> r = region_masks(s, g);
  AcousticMedium<Dim> med = detail::layered(s, g, bg);
  const auto n = static_cast<std::size_t>(g.size());

  // Background and muscle texture share one field.
  if (s.speckle_std > 0.0) {
    const RVector z = detail::correlated_noise(g, s.correlation_length, s.seed);
    std::vector<char> bgm(n, 0), mm(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      if (r.interior[i] || r.wall[i]) continue;
      (r.muscle[i] ? mm : bgm)[i] = 1;
    }
    detail::texture(med.sos, bgm, z, s.background.sos, s.speckle_std);
    detail::texture(med.sos, mm, z, s.muscle.sos, s.speckle_std);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto e = static_cast<Eigen::Index>(i);
    if (r.wall[i]) {
      med.sos[e] = s.wall.sos;
      med.atten[e] = db_to_np(s.wall.atten_db);
    } else if (r.interior[i]) {
      const Tissue& t = s.kind == ScenarioKind::SolidCyst ? s.solid : s.cyst_fluid;
      med.sos[e] = t.sos;
      med.atten[e] = db_to_np(t.atten_db);
    }
  }
  if (s.kind == ScenarioKind::SolidCyst && s.solid_std > 0.0) {
    const RVector z = detail::correlated_noise(g, s.correlation_length, s.seed ^ 0x9E3779B97F4A7C15ULL);
    detail::texture(med.sos, r.interior, z, s.solid.sos, s.solid_std);
  }
  for (std::size_t k = 0; k < s.inclusions.size(); ++k)
    for (std::size_t i = 0; i < n; ++i)
      if (r.inclusions[k][i]) {
        med.sos[static_cast<Eigen::Index>(i)] = s.inclusions[k].tissue.sos;
        med.atten[static_cast<Eigen::Index>(i)] = db_to_np(s.inclusions[k].tissue.atten_db);
      }
  med.validate();
  return med;
}

/// Starting model. Cyst and sphere scenarios start from the homogeneous
/// background (m0 = 0). The muscle case starts from the target-free layered
/// SoS blurred by a Gaussian of std `blur_std` (m), with background
/// attenuation.
template <int Dim>
ContrastMap<Dim> initial_model(const ScenarioSpec& s, const Grid<Dim>& g, double blur_std, const Background& bg = {}) {
  if (!(blur_std >= 0.0)) throw Error("blur std must be >= 0");
  if (s.kind != ScenarioKind::MuscleCyst) return ContrastMap<Dim>::zeros(g);
  AcousticMedium<Dim> med = detail::layered(s, g, bg);
  med.sos = detail::gaussian_blur(g, med.sos, blur_std / g.spacing());
  med.atten.setConstant(bg.alpha0);
  return contrast_from_medium(med, g);
}

}  // namespace usfwi
