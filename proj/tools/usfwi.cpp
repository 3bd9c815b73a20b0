// usfwi: simulate / invert / metrics / render / selftest / config.
//
//   usfwi simulate --preset desk_simple_cyst --out run
//   usfwi invert --config run/config.json --data run --out run/tv
//   usfwi metrics --recon run/tv/recon_sos --truth run/truth_sos --config run/config.json
//   usfwi render --map run/tv/recon_sos --out recon.png

#include "usfwi/usfwi.hpp"

#include "acceptance_checks.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

using namespace usfwi;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config_path, preset_name, out;
  int workers = 0;
};

void add_common(CLI::App* cmd, Common& o) {
  auto* cfg = cmd->add_option("--config", o.config_path, "experiment config (JSON)");
  auto* pre = cmd->add_option("--preset", o.preset_name, "built-in preset name");
  cfg->excludes(pre);
  cmd->add_option("--workers", o.workers, "worker threads (overrides the config)")->check(CLI::PositiveNumber);
}

ExperimentConfig load(const Common& o) {
  if (o.config_path.empty() && o.preset_name.empty()) throw Error("one of --config or --preset is required");
  ExperimentConfig c = o.config_path.empty() ? preset(o.preset_name) : load_config(o.config_path);
  if (o.workers > 0) c.workers = o.workers;
  c.validate();
  return c;
}

fs::path out_dir(const Common& o, const ExperimentConfig& c) { return o.out.empty() ? fs::path(c.output_dir) : fs::path(o.out); }

// A directory argument means "the dataset inside it".
fs::path dataset_base(const fs::path& p) { return fs::is_directory(p) ? p / "dataset" : p; }

template <int Dim>
void run_simulate(const ExperimentConfig& c, const fs::path& dir) {
  const Simulation<Dim> s = simulate<Dim>(c);
  write_simulation(dir, c, s);
  std::fprintf(stderr, "simulate: %lld VIE solves, %.1f s -> %s\n", s.solves, s.wall_seconds, dir.c_str());
}

template <int Dim>
void run_invert(const ExperimentConfig& c, const Dataset& d, const fs::path& dir) {
  auto progress = [](const AdmmState<Dim>&, const IterationRecord& r) {
    std::fprintf(stderr, "  k=%d fidelity=%.4e tv=%.3e primal=%.3e cg=%d step=%.3f %.1fs\n", r.k, r.fidelity, r.tv,
                 r.primal_residual, r.inner_iterations, r.step, r.wall_seconds);
  };
  const Inversion<Dim> inv = invert<Dim>(c, d, progress);
  write_inversion(dir, c, inv);
  std::fprintf(stderr, "%s: %d iterations, %lld VIE solves, %.1f s -> %s\n", c.method_label().c_str(),
               inv.result.state.k, inv.solves, inv.wall_seconds, dir.c_str());
  if (inv.result.aborted) std::fprintf(stderr, "stopped early: %s\n", inv.result.aborted->c_str());
}

template <int Dim>
Json run_metrics(const ArrayFile& recon, const ArrayFile& truth, const std::optional<ExperimentConfig>& c,
                 const std::string& mask_path) {
  const Grid<Dim> g = grid_from_header<Dim>(recon.header);
  const Grid<Dim> gt = grid_from_header<Dim>(truth.header);
  if (g.extent() != gt.extent() || g.spacing() != gt.spacing() || g.origin() != gt.origin())
    throw Error("metrics: recon and truth are on different grids");
  const RVector x = recon.real_values(), y = truth.real_values();
  Json out;
  if (c) {
    if (c->grid.dim() != Dim || c->grid.make<Dim>().extent() != g.extent())
      throw Error("metrics: config grid does not match the maps");
    out = score<Dim>(*c, x, y).to_json();
  } else {
    const double range = ssim_range(y);
    out = MetricsReport{rmse(x, y), ssim(g, x, y, range), range, {}, {}, {}}.to_json();
  }
  if (!mask_path.empty()) {
    const ArrayFile mf = read_array(mask_path);
    const RVector mv = mf.real_values();
    if (mv.size() != x.size()) throw Error("metrics: mask does not match the maps");
    std::vector<char> mask(static_cast<std::size_t>(mv.size()));
    for (Eigen::Index n = 0; n < mv.size(); ++n) mask[n] = mv[n] != 0.0;
    out["masked_rmse_mps"] = rmse(x, y, &mask);
    out["masked_mean_mps"] = region_mean(x, mask);
  }
  return out;
}

int selftest() {
  using namespace usfwi::acceptance;
  const std::vector<std::pair<int, std::function<Verdict()>>> checks{
      {1, operator_vs_dense}, {2, cylinder_series}, {3, adjoint_identity}, {4, linearization},
      {5, tv_pieces},         {6, fixed_point},     {9, parallel_equivalence}};
  int failed = 0;
  for (const auto& [id, f] : checks) {
    Verdict v;
    try {
      v = f();
    } catch (const std::exception& e) {
      v = {id, false, std::string("error: ") + e.what(), 0.0};
    }
    std::printf("%s check %d: %s\n", v.pass ? "PASS" : "FAIL", id, v.detail.c_str());
    failed += !v.pass;
  }
  return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"usfwi: frequency-domain full-waveform inversion for single-sided ultrasound"};
  app.require_subcommand(1);

  Common sim_o;
  long long seed = -1;
  auto* sim = app.add_subcommand("simulate", "generate a noisy dataset and ground truth");
  add_common(sim, sim_o);
  sim->add_option("--out", sim_o.out, "output directory (default: the config's output_dir)");
  sim->add_option("--seed", seed, "noise seed (overrides the config)")->check(CLI::NonNegativeNumber);

  Common inv_o;
  std::string data_path;
  bool allow_crime = false;
  auto* inv = app.add_subcommand("invert", "reconstruct SoS/attenuation from a dataset");
  add_common(inv, inv_o);
  inv->add_option("--data", data_path, "dataset container or a simulate output directory")->required();
  inv->add_option("--out", inv_o.out, "output directory (default: the config's output_dir)");
  inv->add_flag("--allow-inverse-crime", allow_crime, "accept data simulated no finer than the inversion grid");

  std::string recon_path, truth_path, mask_path, metrics_out;
  Common met_o;
  auto* met = app.add_subcommand("metrics", "RMSE, SSIM and region means of a SoS map");
  met->add_option("--recon", recon_path, "reconstructed SoS map container")->required();
  met->add_option("--truth", truth_path, "ground-truth SoS map container")->required();
  met->add_option("--mask", mask_path, "optional mask map (nonzero = inside)");
  auto* mcfg = met->add_option("--config", met_o.config_path, "config whose scenario defines region masks");
  met->add_option("--preset", met_o.preset_name, "preset whose scenario defines region masks")->excludes(mcfg);
  met->add_option("--out", metrics_out, "write the report here as well as to stdout");

  std::string map_path, png_path, palette = "viridis";
  std::ptrdiff_t slice = -1;
  std::optional<double> vmin, vmax;
  int scale = 4;
  auto* ren = app.add_subcommand("render", "heatmap PNG of a 2D map or an x-z slice of a 3D map");
  ren->add_option("--map", map_path, "map container")->required();
  ren->add_option("--out", png_path, "output PNG")->required();
  ren->add_option("--palette", palette, "gray or viridis");
  ren->add_option("--slice", slice, "elevation index for 3D maps (default: middle)");
  ren->add_option("--vmin", vmin, "lower end of the color range");
  ren->add_option("--vmax", vmax, "upper end of the color range");
  ren->add_option("--scale", scale, "pixels per cell")->check(CLI::Range(1, 64));

  auto* st = app.add_subcommand("selftest", "operator, adjoint, TV and determinism checks");

  Common cfg_o;
  auto* cfg = app.add_subcommand("config", "print a preset or a validated config in canonical form");
  add_common(cfg, cfg_o);
  bool list = false;
  cfg->add_flag("--list", list, "list preset names");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) {
      ExperimentConfig c = load(sim_o);
      if (seed >= 0) c.noise_seed = static_cast<std::uint64_t>(seed);
      const fs::path dir = out_dir(sim_o, c);
      c.grid.dim() == 3 ? run_simulate<3>(c, dir) : run_simulate<2>(c, dir);
    } else if (*inv) {
      const ExperimentConfig c = load(inv_o);
      const LoadedDataset d = read_dataset(dataset_base(data_path));
      check_inverse_crime(c, d.data_refinement, allow_crime);
      const fs::path dir = out_dir(inv_o, c);
      c.grid.dim() == 3 ? run_invert<3>(c, d.data, dir) : run_invert<2>(c, d.data, dir);
    } else if (*met) {
      std::optional<ExperimentConfig> c;
      if (!met_o.config_path.empty() || !met_o.preset_name.empty()) c = load(met_o);
      const ArrayFile recon = read_array(recon_path), truth = read_array(truth_path);
      const Json report = recon.header.shape.size() == 3 ? run_metrics<3>(recon, truth, c, mask_path)
                                                         : run_metrics<2>(recon, truth, c, mask_path);
      std::cout << report.dump(2) << "\n";
      if (!metrics_out.empty()) write_text_file(metrics_out, report.dump(2) + "\n");
    } else if (*ren) {
      const ArrayFile f = read_array(map_path);
      RenderOptions o;
      o.palette = palette_from_string(palette);
      o.vmin = vmin;
      o.vmax = vmax;
      o.scale = scale;
      Image im;
      if (f.header.shape.size() == 2) {
        im = rasterize(grid_from_header<2>(f.header), f.real_values(), o);
      } else if (f.header.shape.size() == 3) {
        const Grid<3> g = grid_from_header<3>(f.header);
        const auto [g2, v2] = slice_xz(g, f.real_values(), slice < 0 ? g.extent(1) / 2 : slice);
        im = rasterize(g2, v2, o);
      } else {
        throw Error("render: unsupported map shape with " + std::to_string(f.header.shape.size()) + " axes");
      }
      write_png(png_path, im);
    } else if (*st) {
      return selftest();
    } else if (*cfg) {
      if (list) {
        for (const auto& n : preset_names()) std::cout << n << "\n";
        return 0;
      }
      std::cout << canonical_text(load(cfg_o));
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
