#pragma once

/// \file usfwi/config.hpp
/// \brief Experiment configuration: JSON schema, validation, presets.
///
/// `to_json(from_json(j))` is the canonical form of `j`: compact ranges are
/// expanded to explicit lists, every optional field is written out, and
/// `from_json(to_json(c))` reproduces `c` exactly (doubles are printed with
/// round-trip precision).

#include "usfwi/container.hpp"
#include "usfwi/forward.hpp"
#include "usfwi/inversion.hpp"
#include "usfwi/phantoms.hpp"

#include <set>

namespace usfwi {

// Desk-scale tuning, chosen by sweeps on the desk phantoms. With per-cell
// contrast steps of a few percent, λ/ρ must stay well below 0.1 or the
// shrinkage zeroes g everywhere and TV degenerates to gradient smoothing.
inline constexpr double kDeskLambdaRel = 1e-4;
inline constexpr double kDeskRhoRel = 100.0;
inline constexpr double kDeskSpherePitch = 0.7e-3;
inline constexpr double kDeskSphereDepth = 4.5e-3;
inline constexpr double kDeskSphereLateral = 2e-3;
inline constexpr double kDeskSphereRadius = 1.2e-3;
inline constexpr int kDeskSphereIters = 8;

struct GridSpec {
  std::vector<std::ptrdiff_t> extent;
  double spacing = 0.0;
  std::vector<double> origin;

  int dim() const { return static_cast<int>(extent.size()); }

  template <int Dim>
  Grid<Dim> make() const {
    if (dim() != Dim) throw Error("grid has " + std::to_string(dim()) + " axes, expected " + std::to_string(Dim));
    Index<Dim> e{};
    Point<Dim> o{};
    for (int q = 0; q < Dim; ++q) e[q] = extent[static_cast<std::size_t>(q)], o[q] = origin[static_cast<std::size_t>(q)];
    return Grid<Dim>(e, spacing, o);
  }

  bool operator==(const GridSpec&) const = default;
};

struct ArraySpec {
  int elements = 32;
  double pitch = 0.44e-3;
  double depth = 0.0;  ///< array plane position along the depth axis
  double elevation_width = 0.0;
  int elevation_points = 5;
  std::string transmit = "plane_wave";  ///< plane_wave | per_element
  std::vector<double> angles_deg;
  bool ideal_plane_wave = false;
  double source_amplitude = 1.0;

  template <int Dim>
  ArrayGeometry<Dim> make() const {
    TransmitPlan plan = PerElementPlan{};
    if (transmit == "plane_wave") plan = PlaneWavePlan{angles_deg, ideal_plane_wave};
    auto g = ArrayGeometry<Dim>::linear(elements, pitch, depth, plan, elevation_width);
    g.elevation_points = elevation_points;
    g.source_amplitude = source_amplitude;
    g.validate();
    return g;
  }

  bool operator==(const ArraySpec&) const = default;
};

struct ExperimentConfig {
  std::string name = "experiment";
  ScenarioSpec scenario;
  GridSpec grid;  ///< inversion grid
  double c0 = 1540.0;
  double alpha0_db = 0.0;  ///< background attenuation used as contrast reference, dB/cm/MHz
  double rho0 = 1000.0;
  ArraySpec array;
  std::vector<double> frequencies_hz;
  int data_refinement = 2;       ///< forward grid used to simulate data
  int inversion_refinement = 1;  ///< forward grid used inside the inversion
  double noise_level = 0.02;
  std::uint64_t noise_seed = 7;
  double initial_blur_std = 1e-3;  ///< muscle case only
  std::string method = "fwi_tv";   ///< fwi_tv | basic_fwi
  AdmmConfig admm;
  GmresOptions gmres;
  int workers = 1;
  std::string output_dir = "out";

  Background background() const { return {c0, db_to_np(alpha0_db), rho0}; }
  FrequencySet freqs() const { return FrequencySet::from_hz(frequencies_hz); }

  /// AdmmConfig with the method applied (basic FWI forces λ = 0).
  AdmmConfig admm_config() const {
    AdmmConfig a = admm;
    if (method == "basic_fwi") a.lambda = 0.0;
    a.workers = workers;
    return a;
  }

  /// Label used in outputs.
  std::string method_label() const { return method == "basic_fwi" ? "basic FWI" : "FWI-TV"; }

  void validate() const;
};

namespace detail {

// Reads a JSON object, tracking the field path for error messages and
// rejecting keys that are never read.
class JsonReader {
 public:
  JsonReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("expected an object");
  }

  [[noreturn]] void fail(const std::string& msg, const std::string& key = "") const {
    throw Error("config: " + (key.empty() ? path_ : at_path(key)) + ": " + msg);
  }

  std::string at_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  const Json& raw(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) fail("missing field", key);
    return j_.at(key);
  }

  template <class T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      fail("wrong type", key);
    }
  }

  template <class T>
  void get_optional(const std::string& key, std::optional<T>& out) {
    seen_.insert(key);
    if (!has(key)) {
      out.reset();
      return;
    }
    T v{};
    get(key, v);
    out = v;
  }

  JsonReader child(const std::string& key) {
    seen_.insert(key);
    static const Json empty = Json::object();
    return JsonReader(j_.contains(key) ? j_.at(key) : empty, at_path(key));
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) fail("unknown field", it.key());
  }

  const std::string& path() const { return path_; }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline Json tissue_to_json(const Tissue& t) { return Json{{"sos", t.sos}, {"atten_db", t.atten_db}}; }

inline void tissue_from_json(JsonReader r, Tissue& t) {
  r.get("sos", t.sos);
  r.get("atten_db", t.atten_db);
  r.finish();
}

// Either an explicit list or {"min", "max", "count"} (inclusive linspace).
inline std::vector<double> list_or_range(JsonReader& r, const std::string& key) {
  if (r.raw(key).is_array()) {
    std::vector<double> v;
    r.get(key, v);
    return v;
  }
  JsonReader c = r.child(key);
  double lo = 0.0, hi = 0.0;
  int n = 0;
  c.get("min", lo);
  c.get("max", hi);
  c.get("count", n);
  c.finish();
  if (n < 1) c.fail("count must be >= 1");
  std::vector<double> v;
  for (int i = 0; i < n; ++i) v.push_back(n == 1 ? lo : lo + (hi - lo) * i / (n - 1));
  return v;
}

}  // namespace detail

inline Json to_json(const ScenarioSpec& s) {
  Json inc = Json::array();
  for (const auto& i : s.inclusions)
    inc.push_back(Json{{"center", i.center}, {"radius", i.radius}, {"tissue", detail::tissue_to_json(i.tissue)}});
  return Json{{"kind", to_string(s.kind)},
              {"cyst_radius", s.cyst_radius},
              {"wall_thickness", s.wall_thickness},
              {"cyst_lateral", s.cyst_lateral},
              {"cyst_depth", s.cyst_depth},
              {"muscle_top", s.muscle_top},
              {"muscle_thickness", s.muscle_thickness},
              {"background", detail::tissue_to_json(s.background)},
              {"cyst_fluid", detail::tissue_to_json(s.cyst_fluid)},
              {"solid", detail::tissue_to_json(s.solid)},
              {"wall", detail::tissue_to_json(s.wall)},
              {"muscle", detail::tissue_to_json(s.muscle)},
              {"inclusions", inc},
              {"speckle_std", s.speckle_std},
              {"solid_std", s.solid_std},
              {"correlation_length", s.correlation_length},
              {"seed", s.seed}};
}

/// Missing fields take the preset values of the given kind.
inline ScenarioSpec scenario_from_json(detail::JsonReader r) {
  std::string kind = "simple_cyst";
  r.get("kind", kind);
  ScenarioSpec s;
  try {
    s = ScenarioSpec::preset(scenario_kind_from_string(kind));
  } catch (const Error& e) {
    r.fail(e.what(), "kind");
  }
  r.get("cyst_radius", s.cyst_radius);
  r.get("wall_thickness", s.wall_thickness);
  r.get("cyst_lateral", s.cyst_lateral);
  r.get("cyst_depth", s.cyst_depth);
  r.get("muscle_top", s.muscle_top);
  r.get("muscle_thickness", s.muscle_thickness);
  for (auto [key, t] : {std::pair{"background", &s.background}, std::pair{"cyst_fluid", &s.cyst_fluid},
                        std::pair{"solid", &s.solid}, std::pair{"wall", &s.wall}, std::pair{"muscle", &s.muscle}})
    if (r.has(key)) detail::tissue_from_json(r.child(key), *t);
    else r.child(key);
  if (r.has("inclusions")) {
    const Json& arr = r.raw("inclusions");
    if (!arr.is_array()) r.fail("expected an array", "inclusions");
    s.inclusions.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      detail::JsonReader c(arr[i], r.at_path("inclusions[" + std::to_string(i) + "]"));
      Inclusion inc;
      c.get("center", inc.center);
      c.get("radius", inc.radius);
      detail::tissue_from_json(c.child("tissue"), inc.tissue);
      c.finish();
      s.inclusions.push_back(inc);
    }
  } else {
    r.child("inclusions");
  }
  r.get("speckle_std", s.speckle_std);
  r.get("solid_std", s.solid_std);
  r.get("correlation_length", s.correlation_length);
  r.get("seed", s.seed);
  r.finish();
  try {
    s.validate();
  } catch (const Error& e) {
    r.fail(e.what());
  }
  return s;
}

inline Json to_json(const ExperimentConfig& c) {
  auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
  const AdmmConfig& a = c.admm;
  Json admm{{"lambda", opt(a.lambda)},
            {"rho", opt(a.rho)},
            {"gamma", opt(a.gamma)},
            {"lambda_rel", a.lambda_rel},
            {"rho_rel", a.rho_rel},
            {"rho_floor_rel", a.rho_floor_rel},
            {"gamma_rel", a.gamma_rel},
            {"outer_iters", a.outer_iters},
            {"cg_tol", a.inner.tol},
            {"cg_max_iter", a.inner.max_iter},
            {"fidelity_stop", a.fidelity_stop},
            {"refresh_period", a.refresh_period},
            {"real_contrast_only", a.real_contrast_only},
            {"standard_dual_update", a.standard_dual_update},
            {"max_halvings", a.max_halvings}};
  return Json{{"name", c.name},
              {"scenario", to_json(c.scenario)},
              {"grid", Json{{"extent", c.grid.extent}, {"spacing", c.grid.spacing}, {"origin", c.grid.origin}}},
              {"background", Json{{"c0", c.c0}, {"alpha0_db", c.alpha0_db}, {"rho0", c.rho0}}},
              {"array", Json{{"elements", c.array.elements},
                             {"pitch", c.array.pitch},
                             {"depth", c.array.depth},
                             {"elevation_width", c.array.elevation_width},
                             {"elevation_points", c.array.elevation_points},
                             {"transmit", c.array.transmit},
                             {"angles_deg", c.array.angles_deg},
                             {"ideal_plane_wave", c.array.ideal_plane_wave},
                             {"source_amplitude", c.array.source_amplitude}}},
              {"frequencies_hz", c.frequencies_hz},
              {"data_refinement", c.data_refinement},
              {"inversion_refinement", c.inversion_refinement},
              {"noise", Json{{"level", c.noise_level}, {"seed", c.noise_seed}}},
              {"initial_blur_std", c.initial_blur_std},
              {"method", c.method},
              {"admm", admm},
              {"gmres", Json{{"tol", c.gmres.tol}, {"restart", c.gmres.restart}, {"max_iter", c.gmres.max_iter}}},
              {"workers", c.workers},
              {"output_dir", c.output_dir}};
}

inline ExperimentConfig config_from_json(const Json& j) {
  detail::JsonReader r(j, "");
  ExperimentConfig c;
  r.get("name", c.name);
  c.scenario = scenario_from_json(r.child("scenario"));
  {
    auto g = r.child("grid");
    g.get("extent", c.grid.extent);
    g.get("spacing", c.grid.spacing);
    g.get("origin", c.grid.origin);
    g.finish();
  }
  {
    auto b = r.child("background");
    b.get("c0", c.c0);
    b.get("alpha0_db", c.alpha0_db);
    b.get("rho0", c.rho0);
    b.finish();
  }
  {
    auto a = r.child("array");
    a.get("elements", c.array.elements);
    a.get("pitch", c.array.pitch);
    a.get("depth", c.array.depth);
    a.get("elevation_width", c.array.elevation_width);
    a.get("elevation_points", c.array.elevation_points);
    a.get("transmit", c.array.transmit);
    if (a.has("angles_deg")) c.array.angles_deg = detail::list_or_range(a, "angles_deg");
    else a.child("angles_deg");
    a.get("ideal_plane_wave", c.array.ideal_plane_wave);
    a.get("source_amplitude", c.array.source_amplitude);
    a.finish();
  }
  c.frequencies_hz = detail::list_or_range(r, "frequencies_hz");
  r.get("data_refinement", c.data_refinement);
  r.get("inversion_refinement", c.inversion_refinement);
  {
    auto n = r.child("noise");
    n.get("level", c.noise_level);
    n.get("seed", c.noise_seed);
    n.finish();
  }
  r.get("initial_blur_std", c.initial_blur_std);
  r.get("method", c.method);
  {
    auto a = r.child("admm");
    AdmmConfig& m = c.admm;
    a.get_optional("lambda", m.lambda);
    a.get_optional("rho", m.rho);
    a.get_optional("gamma", m.gamma);
    a.get("lambda_rel", m.lambda_rel);
    a.get("rho_rel", m.rho_rel);
    a.get("rho_floor_rel", m.rho_floor_rel);
    a.get("gamma_rel", m.gamma_rel);
    a.get("outer_iters", m.outer_iters);
    a.get("cg_tol", m.inner.tol);
    a.get("cg_max_iter", m.inner.max_iter);
    a.get("fidelity_stop", m.fidelity_stop);
    a.get("refresh_period", m.refresh_period);
    a.get("real_contrast_only", m.real_contrast_only);
    a.get("standard_dual_update", m.standard_dual_update);
    a.get("max_halvings", m.max_halvings);
    a.finish();
  }
  {
    auto g = r.child("gmres");
    g.get("tol", c.gmres.tol);
    g.get("restart", c.gmres.restart);
    g.get("max_iter", c.gmres.max_iter);
    g.finish();
  }
  r.get("workers", c.workers);
  r.get("output_dir", c.output_dir);
  r.finish();
  c.validate();
  return c;
}

inline void ExperimentConfig::validate() const {
  auto fail = [](const std::string& path, const std::string& msg) { throw Error("config: " + path + ": " + msg); };
  const int d = grid.dim();
  if (d != 2 && d != 3) fail("grid.extent", "must have 2 or 3 entries");
  if (grid.origin.size() != grid.extent.size()) fail("grid.origin", "must have as many entries as grid.extent");
  for (auto e : grid.extent)
    if (e < 1) fail("grid.extent", "entries must be >= 1");
  if (!(grid.spacing > 0.0)) fail("grid.spacing", "must be positive");
  if (!(c0 > 0.0)) fail("background.c0", "must be positive");
  if (!(alpha0_db >= 0.0)) fail("background.alpha0_db", "must be >= 0");
  if (!(rho0 > 0.0)) fail("background.rho0", "must be positive");
  if (array.elements < 1) fail("array.elements", "must be >= 1");
  if (!(array.pitch > 0.0)) fail("array.pitch", "must be positive");
  if (array.transmit != "plane_wave" && array.transmit != "per_element")
    fail("array.transmit", "must be plane_wave or per_element");
  if (array.transmit == "plane_wave" && array.angles_deg.empty()) fail("array.angles_deg", "plane-wave plan needs angles");
  if (d == 3 && !(array.elevation_width > 0.0)) fail("array.elevation_width", "3D arrays need a positive width");
  if (d == 2 && array.elevation_width != 0.0) fail("array.elevation_width", "must be 0 in 2D");
  if (array.elevation_points < 1) fail("array.elevation_points", "must be >= 1");
  if (!std::isfinite(array.source_amplitude) || array.source_amplitude == 0.0)
    fail("array.source_amplitude", "must be finite and nonzero");
  try {
    freqs();
  } catch (const Error& e) {
    fail("frequencies_hz", e.what());
  }
  if (data_refinement < 1) fail("data_refinement", "must be >= 1");
  if (inversion_refinement < 1) fail("inversion_refinement", "must be >= 1");
  if (!(noise_level >= 0.0)) fail("noise.level", "must be >= 0");
  if (!(initial_blur_std >= 0.0)) fail("initial_blur_std", "must be >= 0");
  if (method != "fwi_tv" && method != "basic_fwi") fail("method", "must be fwi_tv or basic_fwi");
  try {
    admm.validate();
  } catch (const Error& e) {
    fail("admm", e.what());
  }
  if (!(gmres.tol > 0.0) || gmres.restart < 1 || gmres.max_iter < 1) fail("gmres", "tol > 0, restart >= 1, max_iter >= 1");
  if (workers < 1) fail("workers", "must be >= 1");
  if ((scenario.kind == ScenarioKind::SpherePair3d) != (d == 3) && scenario.kind != ScenarioKind::Custom)
    fail("scenario.kind", to_string(scenario.kind) + " does not match a " + std::to_string(d) + "D grid");
  for (std::size_t i = 0; i < scenario.inclusions.size(); ++i)
    if (scenario.inclusions[i].center.size() != static_cast<std::size_t>(d))
      fail("scenario.inclusions[" + std::to_string(i) + "].center", "must have " + std::to_string(d) + " entries");
  // Grid coverage and array placement.
  const double zlo = grid.origin.back() - 0.5 * grid.spacing;
  const double zhi = zlo + static_cast<double>(grid.extent.back()) * grid.spacing;
  if (array.depth > zlo && array.depth < zhi) fail("array.depth", "array must lie outside the grid's depth range");
  try {
    if (d == 2) detail::check_scenario_fits(scenario, grid.make<2>());
    else detail::check_scenario_fits(scenario, grid.make<3>());
  } catch (const Error& e) {
    fail("scenario", e.what());
  }
}

namespace detail {

inline std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v;
  for (int i = 0; i < n; ++i) v.push_back(n == 1 ? a : a + (b - a) * i / (n - 1));
  return v;
}

// Square-pixel grid whose first depth cell starts `top` below the array.
inline GridSpec centred_grid(std::vector<std::ptrdiff_t> extent, double h, double top) {
  GridSpec g{extent, h, {}};
  for (std::size_t q = 0; q + 1 < extent.size(); ++q) g.origin.push_back(-0.5 * static_cast<double>(extent[q] - 1) * h);
  g.origin.push_back(top + 0.5 * h);
  return g;
}

}  // namespace detail

/// Names accepted by preset().
inline std::vector<std::string> preset_names() {
  return {"simple_cyst",      "solid_cyst",      "muscle_cyst",      "sphere_pair_3d",
          "desk_simple_cyst", "desk_solid_cyst", "desk_muscle_cyst", "desk_sphere_pair_3d"};
}

/// Full-scale presets: 64 elements, 60
/// plane waves, 15 frequencies 0.2-3 MHz in 2D; 64 per-element transmits
/// with 1 cm elevation, 10 frequencies 0.2-2 MHz in 3D). `desk_*` presets
/// shrink the domain and bandwidth to run on one CPU core.
inline ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  c.name = name;
  const bool desk = name.rfind("desk_", 0) == 0;
  const std::string kind = desk ? name.substr(5) : name;
  ScenarioKind k;
  try {
    k = scenario_kind_from_string(kind);
  } catch (const Error&) {
    throw Error("unknown preset '" + name + "'");
  }
  if (k == ScenarioKind::Custom) throw Error("unknown preset '" + name + "'");
  c.scenario = ScenarioSpec::preset(k);
  c.admm.outer_iters = 20;
  // The literal dual step u += ρ(g − ∇m) barely moves u at these ρ, which
  // leaves the primal residual flat; presets use the scaled-form step.
  c.admm.standard_dual_update = true;
  if (k != ScenarioKind::SpherePair3d) {
    c.array.transmit = "plane_wave";
    if (!desk) {
      c.array.elements = 64;
      c.array.pitch = 0.78e-3;
      c.array.angles_deg = detail::linspace(-60.0, 60.0, 60);
      c.frequencies_hz = detail::linspace(0.2e6, 3e6, 15);
      // λ/4 at 3 MHz for the unknowns, λ/8 inside the inversion, λ/16 for data.
      c.grid = detail::centred_grid({392, 312}, 0.128e-3, 0.3e-3);
      c.inversion_refinement = 2;
      c.data_refinement = 4;
    } else {
      c.array.elements = 32;
      c.array.pitch = 0.44e-3;
      c.array.angles_deg = detail::linspace(-60.0, 60.0, 11);
      c.frequencies_hz = detail::linspace(0.2e6, 1.5e6, 8);
      c.grid = detail::centred_grid({110, 110}, 14.08e-3 / 110, 0.3e-3);
      c.scenario.cyst_radius = 3e-3;
      c.scenario.cyst_depth = k == ScenarioKind::MuscleCyst ? 9e-3 : 8.3e-3;
      c.scenario.muscle_thickness = 3e-3;
    }
  } else {
    c.array.transmit = "per_element";
    c.array.elevation_width = 1e-2;
    c.noise_level = 0.02;
    if (!desk) {
      c.array.elements = 64;
      c.array.pitch = 0.3e-3;
      c.frequencies_hz = detail::linspace(0.2e6, 2e6, 10);
      c.grid = detail::centred_grid({96, 32, 72}, 0.2e-3, 0.3e-3);
      c.inversion_refinement = 2;
      c.data_refinement = 3;
    } else {
      c.array.elements = 8;
      c.array.pitch = kDeskSpherePitch;
      c.frequencies_hz = detail::linspace(0.3e6, 1.2e6, 4);
      c.grid = detail::centred_grid({48, 48, 48}, 0.2e-3, 0.3e-3);
      // Sub-wavelength spheres leave no bulk signature at 1.2 MHz; at this
      // radius both contrast signs come through.
      for (int i = 0; i < 2; ++i) {
        c.scenario.inclusions[i].center = {(2 * i - 1) * kDeskSphereLateral, 0.0, kDeskSphereDepth};
        c.scenario.inclusions[i].radius = kDeskSphereRadius;
      }
      c.admm.outer_iters = kDeskSphereIters;
    }
  }
  if (desk) {
    c.admm.lambda_rel = kDeskLambdaRel;
    c.admm.rho_rel = kDeskRhoRel;
  }
  c.output_dir = "out/" + name;
  c.validate();
  return c;
}

inline std::string canonical_text(const ExperimentConfig& c) { return to_json(c).dump(2) + "\n"; }

inline std::string config_hash(const ExperimentConfig& c) { return sha256_hex(to_json(c).dump()); }

inline ExperimentConfig load_config(const std::filesystem::path& p) {
  Json j;
  try {
    j = Json::parse(read_text_file(p));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error("config: " + p.string() + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace usfwi
