#pragma once

/// \file usfwi/experiment.hpp
/// \brief End-to-end pipelines: simulate data, invert it, score the result,
///        and the files each step reads and writes.
///
/// Output directory layout:
///   config.json                 canonical config that produced the directory
///   dataset.{bin,json}          noisy data, shape (transmit, receive, frequency)
///   truth_sos / truth_atten     ground truth on the inversion grid
///   medium_sos / medium_atten   ground truth on the data-generation grid
///   recon_sos / recon_atten     reconstruction on the inversion grid
///   history.jsonl               one record per iteration
///   report.json                 weights, method label, solve counts, timing
///   metrics.json                RMSE, SSIM, region means

#include "usfwi/config.hpp"
#include "usfwi/metrics.hpp"

#include <chrono>

namespace usfwi {

template <int Dim>
std::vector<std::string> axis_names() {
  if constexpr (Dim == 2) return {"lateral", "depth"};
  else return {"lateral", "elevation", "depth"};
}

/// Objects derived from a config.
template <int Dim>
struct Setup {
  Grid<Dim> inv;
  Grid<Dim> data_grid;   ///< used to generate data
  Grid<Dim> model_grid;  ///< used inside the inversion
  ArrayGeometry<Dim> geom;
  FrequencySet freqs;
  Background bg;
  ForwardOptions fwd;

  static Setup from(const ExperimentConfig& c) {
    c.validate();
    const Grid<Dim> inv = c.grid.make<Dim>();
    ForwardOptions fo;
    fo.gmres = c.gmres;
    return {inv, inv.refined(c.data_refinement), inv.refined(c.inversion_refinement), c.array.make<Dim>(),
            c.freqs(), c.background(), fo};
  }
};

template <int Dim>
struct Simulation {
  AcousticMedium<Dim> medium;  ///< data grid
  AcousticMedium<Dim> truth;   ///< inversion grid
  Dataset clean, observed;
  long long solves = 0;
  double wall_seconds = 0.0;
};

/// Truth on the inversion grid: the data-grid phantom's contrast averaged
/// onto inversion cells. Rebuilding the phantom on the coarse grid would
/// draw a different speckle realisation.
template <int Dim>
AcousticMedium<Dim> restrict_medium(const AcousticMedium<Dim>& fine, const Grid<Dim>& inv) {
  return medium_from_contrast(contrast_from_medium(fine, inv), fine.background);
}

template <int Dim>
Simulation<Dim> simulate(const ExperimentConfig& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const Setup<Dim> s = Setup<Dim>::from(c);
  Simulation<Dim> out;
  out.medium = build(c.scenario, s.data_grid, s.bg);
  out.truth = restrict_medium(out.medium, s.inv);
  ForwardModel<Dim> model(s.data_grid, s.geom, s.freqs, s.bg, s.fwd);
  out.clean = model.forward(contrast_from_medium(out.medium, s.data_grid), c.workers, true);
  out.observed = add_noise(out.clean, c.noise_level, c.noise_seed);
  out.solves = model.solve_count();
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

/// Refuses data simulated on the grid the inversion itself uses.
inline void check_inverse_crime(const ExperimentConfig& c, int data_refinement, bool allow) {
  if (allow) return;
  if (data_refinement <= c.inversion_refinement)
    throw Error("inverse crime: data were generated at refinement " + std::to_string(data_refinement) +
                ", not finer than the inversion's " + std::to_string(c.inversion_refinement) +
                " (pass --allow-inverse-crime to override)");
}

template <int Dim>
struct Inversion {
  AdmmResult<Dim> result;
  ContrastMap<Dim> m0;
  AcousticMedium<Dim> recon;
  long long solves = 0;
  double wall_seconds = 0.0;
};

template <int Dim>
ContrastMap<Dim> initial_contrast(const ExperimentConfig& c, const Grid<Dim>& inv) {
  return initial_model(c.scenario, inv, c.initial_blur_std, c.background());
}

template <int Dim>
Inversion<Dim> invert(const ExperimentConfig& c, const Dataset& d_obs,
                      const std::type_identity_t<IterationCallback<Dim>>& on_iteration = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  const Setup<Dim> s = Setup<Dim>::from(c);
  ForwardModel<Dim> model(s.model_grid, s.geom, s.freqs, s.bg, s.fwd);
  if (!d_obs.same_shape(Dataset::zeros(model.n_transmit(), model.n_receive(), s.freqs)))
    throw Error("dataset shape (" + std::to_string(d_obs.n_transmit) + ", " + std::to_string(d_obs.n_receive) + ", " +
                std::to_string(d_obs.n_freq()) + ") does not match the config geometry (" +
                std::to_string(model.n_transmit()) + ", " + std::to_string(model.n_receive()) + ", " +
                std::to_string(s.freqs.size()) + ")");
  Inversion<Dim> out;
  out.m0 = initial_contrast<Dim>(c, s.inv);
  out.result = run(model, d_obs, out.m0, c.admm_config(), on_iteration);
  out.solves = model.solve_count();
  try {
    out.recon = medium_from_contrast(out.result.state.m, s.bg);
  } catch (const NonPhysicalContrast& e) {
    throw Error(std::string("reconstruction is non-physical: ") + e.what());
  }
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

inline Json history_record(const IterationRecord& r) {
  return Json{{"k", r.k},
              {"fidelity", r.fidelity},
              {"tv", r.tv},
              {"primal_residual", r.primal_residual},
              {"inner_iterations", r.inner_iterations},
              {"inner_residual", r.inner_residual},
              {"inner_breakdown", r.inner_breakdown},
              {"step", r.step},
              {"halvings", r.halvings},
              {"refreshed", r.refreshed},
              {"forward_solves", r.forward_solves},
              {"adjoint_solves", r.adjoint_solves},
              {"rejected_trial_solves", r.rejected_trial_solves},
              {"wall_seconds", r.wall_seconds}};
}

struct MetricsReport {
  double rmse = 0.0;
  double ssim = 0.0;
  double ssim_range = 1.0;
  std::optional<double> background_mean;
  std::vector<double> inclusion_means;  ///< truth-independent region means over the scenario's inclusions
  std::vector<double> inclusion_truth;

  Json to_json() const {
    const SsimParams p;
    Json j{{"rmse_mps", rmse},
           {"ssim", ssim},
           {"ssim_params", Json{{"window", p.window}, {"sigma", p.sigma}, {"k1", p.k1}, {"k2", p.k2}, {"range", ssim_range}}}};
    if (background_mean) j["background_mean_mps"] = *background_mean;
    if (!inclusion_means.empty()) {
      j["inclusion_means_mps"] = inclusion_means;
      j["inclusion_truth_mps"] = inclusion_truth;
    }
    return j;
  }
};

/// RMSE/SSIM of SoS maps, plus inclusion and background means when the
/// scenario defines inclusions.
template <int Dim>
MetricsReport score(const ExperimentConfig& c, const RVector& recon_sos, const RVector& truth_sos) {
  const Grid<Dim> g = c.grid.make<Dim>();
  if (recon_sos.size() != g.size() || truth_sos.size() != g.size()) throw Error("metrics: maps do not match the grid");
  MetricsReport m;
  m.rmse = rmse(recon_sos, truth_sos);
  m.ssim_range = ssim_range(truth_sos);
  m.ssim = ssim(g, recon_sos, truth_sos, m.ssim_range);
  if (!c.scenario.inclusions.empty()) {
    const auto masks = region_masks(c.scenario, g);
    std::vector<char> bg(static_cast<std::size_t>(g.size()), 1);
    for (std::size_t i = 0; i < masks.inclusions.size(); ++i) {
      m.inclusion_means.push_back(region_mean(recon_sos, masks.inclusions[i]));
      m.inclusion_truth.push_back(c.scenario.inclusions[i].tissue.sos);
      for (std::size_t n = 0; n < bg.size(); ++n) bg[n] = bg[n] && !masks.inclusions[i][n];
    }
    m.background_mean = region_mean(recon_sos, bg);
  }
  return m;
}

// -- files ------------------------------------------------------------------

template <int Dim>
ArrayHeader map_header(const Grid<Dim>& g, const std::string& units, const std::string& hash) {
  ArrayHeader h;
  for (int q = 0; q < Dim; ++q) h.shape.push_back(g.extent(q));
  h.axes = axis_names<Dim>();
  h.units = units;
  h.config_hash = hash;
  std::vector<double> origin(g.origin().begin(), g.origin().end());
  h.meta = Json{{"spacing_m", g.spacing()}, {"origin_m", origin}};
  return h;
}

/// Inverse of map_header: the grid a map container was written on.
template <int Dim>
Grid<Dim> grid_from_header(const ArrayHeader& h) {
  if (h.shape.size() != static_cast<std::size_t>(Dim))
    throw Error("map has " + std::to_string(h.shape.size()) + " axes, expected " + std::to_string(Dim));
  Index<Dim> ext{};
  Point<Dim> org{};
  double spacing = 0.0;
  try {
    spacing = h.meta.at("spacing_m").get<double>();
    const auto o = h.meta.at("origin_m").get<std::vector<double>>();
    if (o.size() != static_cast<std::size_t>(Dim)) throw Error("map origin has the wrong length");
    for (int q = 0; q < Dim; ++q) {
      ext[q] = h.shape[q];
      org[q] = o[q];
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error("map header lacks grid metadata: " + std::string(e.what()));
  }
  return Grid<Dim>(ext, spacing, org);
}

template <int Dim>
void write_medium(const std::filesystem::path& dir, const std::string& stem, const AcousticMedium<Dim>& m,
                  const std::string& hash) {
  write_array(dir / (stem + "_sos"), map_header(m.grid, "m/s", hash), m.sos);
  RVector db(m.atten.size());
  // Reconstructed attenuation is unconstrained and can dip below zero, so
  // scale directly instead of going through the checked conversion.
  for (Eigen::Index n = 0; n < db.size(); ++n) db[n] = m.atten[n] / detail::kDbCmMhzInNpMHz;
  write_array(dir / (stem + "_atten"), map_header(m.grid, "dB/cm/MHz", hash), db);
}

inline void write_config(const std::filesystem::path& dir, const ExperimentConfig& c) {
  std::filesystem::create_directories(dir);
  write_text_file(dir / "config.json", canonical_text(c));
}

inline void write_dataset(const std::filesystem::path& base, const Dataset& d, const ExperimentConfig& c) {
  ArrayHeader h;
  h.shape = {d.n_transmit, d.n_receive, d.n_freq()};
  h.axes = {"transmit", "receive", "frequency"};
  h.units = "Pa";
  h.config_hash = config_hash(c);
  std::vector<double> hz;
  for (std::size_t l = 0; l < d.freqs.size(); ++l) hz.push_back(d.freqs.hz(l));
  h.meta = Json{{"frequencies_hz", hz},
                {"data_refinement", c.data_refinement},
                {"noise_level", c.noise_level},
                {"noise_seed", c.noise_seed}};
  write_array(base, h, d.values);
}

struct LoadedDataset {
  Dataset data;
  int data_refinement = 0;
};

inline LoadedDataset read_dataset(const std::filesystem::path& base) {
  const ArrayFile f = read_array(base);
  if (f.header.shape.size() != 3) throw Error("dataset must have shape (transmit, receive, frequency)");
  LoadedDataset out;
  try {
    out.data.freqs = FrequencySet::from_hz(f.header.meta.at("frequencies_hz").get<std::vector<double>>());
    out.data_refinement = f.header.meta.at("data_refinement").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw Error("dataset header lacks frequency or refinement metadata: " + std::string(e.what()));
  }
  out.data.n_transmit = f.header.shape[0];
  out.data.n_receive = f.header.shape[1];
  if (f.header.shape[2] != out.data.n_freq()) throw Error("dataset frequency axis does not match its metadata");
  out.data.values = f.complex_values();
  return out;
}

template <int Dim>
void write_simulation(const std::filesystem::path& dir, const ExperimentConfig& c, const Simulation<Dim>& s) {
  write_config(dir, c);
  const std::string hash = config_hash(c);
  write_dataset(dir / "dataset", s.observed, c);
  write_medium(dir, "truth", s.truth, hash);
  write_medium(dir, "medium", s.medium, hash);
}

template <int Dim>
void write_inversion(const std::filesystem::path& dir, const ExperimentConfig& c, const Inversion<Dim>& inv) {
  write_config(dir, c);
  const std::string hash = config_hash(c);
  write_medium(dir, "recon", inv.recon, hash);
  std::string lines;
  for (const auto& r : inv.result.state.history) lines += history_record(r).dump() + "\n";
  write_text_file(dir / "history.jsonl", lines);
  const auto& w = inv.result.weights;
  Json rep{{"method", c.method_label()},
           {"iterations", inv.result.state.k},
           {"weights", Json{{"lambda", w.lambda}, {"rho", w.rho}, {"gamma", w.gamma}}},
           {"initial_fidelity", inv.result.initial_fidelity},
           {"final_fidelity", inv.result.state.history.empty() ? inv.result.initial_fidelity
                                                               : inv.result.state.history.back().fidelity},
           {"vie_solves", inv.solves},
           {"accounted_solves", accounted_solves(inv.result)},
           {"wall_seconds", inv.wall_seconds},
           {"aborted", inv.result.aborted ? Json(*inv.result.aborted) : Json(nullptr)},
           {"config_hash", hash}};
  write_text_file(dir / "report.json", rep.dump(2) + "\n");
}

}  // namespace usfwi
