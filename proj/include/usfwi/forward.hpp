#pragma once

/// \file usfwi/forward.hpp
/// \brief Array geometry, incident fields, the volume-integral total-field
///        solve and the data equation, assembled into the forward operator.
///
/// Every transmit and receive aperture is represented by its cell-averaged
/// response on the forward grid,
///   r_e(n) = Σ_m w_m ∫_{τ_n} G(a_m, x') dx' / |τ|,
/// where (a_m, w_m) are the aperture's quadrature points. Incident fields are
/// combinations of r_e, and receiver e reads P^s_e = k0²|τ| Σ_n r_e(n) m_n p_n.
/// Using one response for both roles makes reciprocity hold exactly.

#include "usfwi/greens.hpp"
#include "usfwi/krylov.hpp"
#include "usfwi/medium.hpp"
#include "usfwi/schedule.hpp"

#include <atomic>
#include <mutex>
#include <random>
#include <sstream>
#include <utility>
#include <variant>

namespace usfwi {

/// Steered plane waves, one transmit event per angle. With `ideal` the
/// incident field is an analytic plane wave instead of an element synthesis.
struct PlaneWavePlan {
  std::vector<double> angles_deg;
  bool ideal = false;
};

/// One transmit event per element.
struct PerElementPlan {};

using TransmitPlan = std::variant<PlaneWavePlan, PerElementPlan>;

template <int Dim>
struct ArrayGeometry {
  std::vector<Point<Dim>> element_centers;
  double pitch = 0.0;
  double elevation_width = 0.0;  ///< 3D only: length of each element along axis 1
  int elevation_points = 5;      ///< 3D only: midpoint-rule points per element
  TransmitPlan transmit_plan = PerElementPlan{};
  double source_amplitude = 1.0;  ///< scales transmit events only

  std::ptrdiff_t num_receivers() const { return static_cast<std::ptrdiff_t>(element_centers.size()); }

  bool per_element() const { return std::holds_alternative<PerElementPlan>(transmit_plan); }

  std::ptrdiff_t num_transmits() const {
    if (per_element()) return num_receivers();
    return static_cast<std::ptrdiff_t>(std::get<PlaneWavePlan>(transmit_plan).angles_deg.size());
  }

  /// Mean element position.
  Point<Dim> centroid() const {
    Point<Dim> c{};
    for (const auto& e : element_centers)
      for (int q = 0; q < Dim; ++q) c[q] += e[q] / static_cast<double>(element_centers.size());
    return c;
  }

  void validate() const {
    if (element_centers.empty()) throw Error("array has no elements");
    if (num_transmits() < 1) throw Error("array has no transmit events");
    for (const auto& e : element_centers)
      for (int q = 1; q < Dim; ++q)
        if (std::abs(e[q] - element_centers[0][q]) > 1e-12)
          throw Error("array elements must lie on a line along axis 0");
    if constexpr (Dim == 3) {
      if (!(elevation_width > 0.0)) throw Error("3D arrays need a positive elevation width");
      if (elevation_points < 1) throw Error("elevation quadrature needs at least one point");
    }
    if (!std::isfinite(source_amplitude) || source_amplitude == 0.0)
      throw Error("source amplitude must be finite and nonzero");
  }

  /// Quadrature points and weights of element e's aperture.
  std::vector<std::pair<Point<Dim>, double>> aperture(std::ptrdiff_t e) const {
    const auto& c = element_centers.at(static_cast<std::size_t>(e));
    if constexpr (Dim == 2) {
      return {{c, 1.0}};
    } else {
      std::vector<std::pair<Point<Dim>, double>> pts;
      const double w = elevation_width / elevation_points;
      for (int m = 0; m < elevation_points; ++m) {
        Point<Dim> p = c;
        p[1] += (m + 0.5) * w - 0.5 * elevation_width;
        pts.push_back({p, w});
      }
      return pts;
    }
  }

  /// Elements along axis 0, centred at x = 0, at depth `depth` (last axis).
  static ArrayGeometry linear(int elements, double pitch, double depth, TransmitPlan plan,
                              double elevation_width = 0.0) {
    ArrayGeometry g;
    g.pitch = pitch;
    g.elevation_width = elevation_width;
    g.transmit_plan = std::move(plan);
    for (int e = 0; e < elements; ++e) {
      Point<Dim> p{};
      p[0] = (e - 0.5 * (elements - 1)) * pitch;
      p[Dim - 1] = depth;
      g.element_centers.push_back(p);
    }
    g.validate();
    return g;
  }
};

struct FrequencySet {
  std::vector<double> omegas;  ///< rad/s, strictly increasing

  static FrequencySet from_hz(const std::vector<double>& hz) {
    FrequencySet f;
    for (double v : hz) f.omegas.push_back(2.0 * kPi * v);
    f.validate();
    return f;
  }

  static FrequencySet linspace_hz(double f0, double f1, int n) {
    if (n < 1) throw Error("frequency count must be >= 1");
    std::vector<double> hz;
    for (int l = 0; l < n; ++l) hz.push_back(n == 1 ? f0 : f0 + (f1 - f0) * l / (n - 1));
    return from_hz(hz);
  }

  std::size_t size() const { return omegas.size(); }
  double hz(std::size_t l) const { return omegas.at(l) / (2.0 * kPi); }

  void validate() const {
    if (omegas.empty()) throw Error("frequency set is empty");
    for (std::size_t l = 0; l < omegas.size(); ++l) {
      if (!(omegas[l] > 0.0)) throw Error("frequencies must be positive");
      if (l > 0 && !(omegas[l] > omegas[l - 1])) throw Error("frequencies must be strictly increasing");
    }
  }
};

template <int Dim>
struct Wavefield {
  Grid<Dim> grid;
  CVector values;
  std::ptrdiff_t source = -1;  ///< transmit index, or receiver index for adjoint fields
  std::ptrdiff_t freq = -1;
  bool adjoint = false;
};

/// Measurements indexed (transmit i, receiver j, frequency l), flattened as
/// (i·N_R + j)·N_F + l.
struct Dataset {
  std::ptrdiff_t n_transmit = 0;
  std::ptrdiff_t n_receive = 0;
  FrequencySet freqs;
  CVector values;

  static Dataset zeros(std::ptrdiff_t nt, std::ptrdiff_t nr, const FrequencySet& f) {
    return {nt, nr, f, CVector::Zero(nt * nr * static_cast<std::ptrdiff_t>(f.size()))};
  }

  std::ptrdiff_t n_freq() const { return static_cast<std::ptrdiff_t>(freqs.size()); }
  std::ptrdiff_t size() const { return n_transmit * n_receive * n_freq(); }
  std::ptrdiff_t index(std::ptrdiff_t i, std::ptrdiff_t j, std::ptrdiff_t l) const {
    return (i * n_receive + j) * n_freq() + l;
  }
  Complex& at(std::ptrdiff_t i, std::ptrdiff_t j, std::ptrdiff_t l) { return values[index(i, j, l)]; }
  Complex at(std::ptrdiff_t i, std::ptrdiff_t j, std::ptrdiff_t l) const { return values[index(i, j, l)]; }

  bool same_shape(const Dataset& o) const {
    return n_transmit == o.n_transmit && n_receive == o.n_receive && freqs.omegas == o.freqs.omegas;
  }
};

/// Adds circular complex Gaussian noise with per-component standard deviation
/// level·RMS(d)/√2, RMS taken over the whole tensor.
inline Dataset add_noise(const Dataset& d, double level, std::uint64_t seed) {
  if (!(level >= 0.0)) throw Error("noise level must be non-negative");
  Dataset out = d;
  if (level == 0.0 || d.values.size() == 0) return out;
  const double rms = std::sqrt(d.values.squaredNorm() / static_cast<double>(d.values.size()));
  const double sigma = level * rms / std::sqrt(2.0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (Eigen::Index n = 0; n < out.values.size(); ++n) {
    const double re = nd(rng), im = nd(rng);
    out.values[n] += sigma * Complex(re, im);
  }
  return out;
}

struct ForwardOptions {
  GmresOptions gmres;
  CellRule rule = CellRule::Exact;
};

/// The forward operator on one forward grid: owns per-frequency kernels and
/// aperture responses (built on first use) and counts VIE solves.
template <int Dim>
class ForwardModel {
 public:
  ForwardModel(const Grid<Dim>& grid, ArrayGeometry<Dim> geom, FrequencySet freqs, Background bg,
               ForwardOptions opt = {})
      : grid_(grid), geom_(std::move(geom)), freqs_(std::move(freqs)), bg_(bg), opt_(opt) {
    geom_.validate();
    freqs_.validate();
    if (!(bg_.c0 > 0.0) || !(bg_.alpha0 >= 0.0) || !(bg_.rho0 > 0.0)) throw Error("invalid background");
    const std::size_t nf = freqs_.size();
    kernels_.resize(nf);
    apertures_.resize(nf);
    for (std::size_t l = 0; l < nf; ++l) wavenumbers_.push_back(Wavenumber::from(freqs_.omegas[l], bg_));
    const double zmin = grid_.lower()[Dim - 1], zmax = grid_.upper()[Dim - 1];
    const double za = geom_.element_centers[0][Dim - 1];
    if (za > zmin && za < zmax) throw Error("array must lie outside the imaged volume along depth");
  }

  ForwardModel(const ForwardModel&) = delete;
  ForwardModel& operator=(const ForwardModel&) = delete;

  const Grid<Dim>& grid() const { return grid_; }
  const ArrayGeometry<Dim>& geometry() const { return geom_; }
  const FrequencySet& freqs() const { return freqs_; }
  const Background& background() const { return bg_; }
  const ForwardOptions& options() const { return opt_; }
  const Wavenumber& wavenumber(std::size_t l) const { return wavenumbers_.at(l); }
  std::ptrdiff_t n_transmit() const { return geom_.num_transmits(); }
  std::ptrdiff_t n_receive() const { return geom_.num_receivers(); }

  /// Total number of VIE solves requested so far.
  long long solve_count() const { return solves_.load(); }

  /// Builds the kernel and aperture responses of frequency l.
  void prepare(std::size_t l, int workers = 1) const {
    std::lock_guard<std::mutex> lock(mutex_);
    if (!kernels_.at(l)) kernels_[l] = std::make_unique<ConvolutionKernel<Dim>>(grid_, wavenumbers_[l], opt_.rule);
    if (apertures_[l].size() == 0) apertures_[l] = compute_apertures(l, workers);
  }

  /// Frees the kernel and aperture responses of frequency l.
  void release(std::size_t l) const {
    std::lock_guard<std::mutex> lock(mutex_);
    kernels_.at(l).reset();
    apertures_.at(l) = CMatrix();
  }

  const ConvolutionKernel<Dim>& kernel(std::size_t l) const {
    prepare(l);
    return *kernels_[l];
  }

  /// N × N_R matrix of cell-averaged aperture responses.
  const CMatrix& apertures(std::size_t l) const {
    prepare(l);
    return apertures_[l];
  }

  /// N_R × N_T synthesis weights: incident column i = apertures · column i.
  CMatrix steering(std::size_t l) const {
    const std::ptrdiff_t nr = n_receive(), nt = n_transmit();
    const double amp = geom_.source_amplitude;
    if (geom_.per_element()) return CMatrix::Identity(nr, nt) * amp;
    const auto& angles = std::get<PlaneWavePlan>(geom_.transmit_plan).angles_deg;
    const double xc = geom_.centroid()[0];
    CMatrix w(nr, nt);
    for (std::ptrdiff_t i = 0; i < nt; ++i) {
      const double s = std::sin(angles[i] * kPi / 180.0);
      for (std::ptrdiff_t e = 0; e < nr; ++e) {
        const double tau = (geom_.element_centers[e][0] - xc) * s / bg_.c0;
        w(e, i) = amp * std::exp(-kJ * freqs_.omegas[l] * tau);
      }
    }
    return w;
  }

  /// N × N_T incident fields of every transmit event at frequency l.
  CMatrix incident_all(std::size_t l) const {
    if (const auto* pw = std::get_if<PlaneWavePlan>(&geom_.transmit_plan); pw && pw->ideal) {
      CMatrix p(grid_.size(), n_transmit());
      for (std::ptrdiff_t i = 0; i < n_transmit(); ++i) p.col(i) = ideal_plane_wave(pw->angles_deg[i], l);
      return p;
    }
    return apertures(l) * steering(l);
  }

  CVector incident(std::ptrdiff_t i, std::size_t l) const {
    if (i < 0 || i >= n_transmit()) throw Error("transmit index out of range");
    if (const auto* pw = std::get_if<PlaneWavePlan>(&geom_.transmit_plan); pw && pw->ideal)
      return ideal_plane_wave(pw->angles_deg[i], l);
    return apertures(l) * steering(l).col(i);
  }

  Wavefield<Dim> incident_field(std::ptrdiff_t i, std::size_t l) const {
    return {grid_, incident(i, l), i, static_cast<std::ptrdiff_t>(l), false};
  }

  /// Unit source at receiver j's aperture.
  CVector adjoint_incident(std::ptrdiff_t j, std::size_t l) const {
    if (j < 0 || j >= n_receive()) throw Error("receiver index out of range");
    return apertures(l).col(j);
  }

  /// Solves (I − K diag(m)) p = p0. The returned field's residual is
  /// re-verified independently of the Krylov recurrence.
  CVector solve_total(const CVector& m_fwd, const CVector& p0, std::size_t l, const FftBuffer& ws,
                      const std::string& label = "", int* iterations = nullptr) const {
    if (m_fwd.size() != grid_.size() || p0.size() != grid_.size())
      throw Error("solve_total: vectors do not match the forward grid");
    ++solves_;
    if (iterations) *iterations = 0;
    if ((m_fwd.array() == Complex(0.0)).all()) return p0;
    const auto& k = kernel(l);
    CVector tmp(grid_.size()), kp(grid_.size());
    auto op = [&](const CVector& in, CVector& out) {
      tmp = m_fwd.cwiseProduct(in);
      k.apply(tmp, kp, ws);
      out = in - kp;
    };
    CVector p = CVector::Zero(grid_.size());
    GmresOptions o = opt_.gmres;
    const double p0n = p0.norm();
    double true_res = 0.0;
    for (int attempt = 0; attempt < 3; ++attempt) {
      const auto r = gmres(op, p0, p, o);
      if (iterations) *iterations += r.iterations;
      CVector ap(grid_.size());
      op(p, ap);
      true_res = p0n > 0.0 ? (p0 - ap).norm() / p0n : (p0 - ap).norm();
      if (true_res <= opt_.gmres.tol && p.allFinite()) return p;
      if (!r.converged) break;
      o.tol *= 0.25;  // recurrence estimate was optimistic; tighten and continue
    }
    std::ostringstream os;
    os << "VIE solve did not converge (" << label << " l=" << l << "): relative residual " << true_res
       << " > " << opt_.gmres.tol;
    throw ConvergenceError(os.str(), true_res);
  }

  Wavefield<Dim> solve_total_field(const CVector& m_fwd, const Wavefield<Dim>& p0) const {
    auto ws = kernel(static_cast<std::size_t>(p0.freq)).make_workspace();
    return {grid_, solve_total(m_fwd, p0.values, static_cast<std::size_t>(p0.freq), ws), p0.source, p0.freq,
            p0.adjoint};
  }

  /// Solves the total field of every column of `incident`, sharded over
  /// columns. `kind` labels errors ("transmit" or "receiver").
  CMatrix solve_columns(const CVector& m_fwd, std::size_t l, const CMatrix& incident, int workers,
                        const char* kind) const {
    prepare(l, workers);
    CMatrix out(incident.rows(), incident.cols());
    const auto shards = schedule(workers, incident.cols());
    run_sharded(shards, [&](int, const Shard& s) {
      auto ws = kernel(l).make_workspace();
      for (std::ptrdiff_t c = s.begin; c < s.end; ++c) {
        std::ostringstream label;
        label << kind << " " << c;
        out.col(c) = solve_total(m_fwd, incident.col(c), l, ws, label.str());
      }
    });
    return out;
  }

  /// Receiver readings P^s_j for one total field.
  CVector scattered(const CVector& m_fwd, const CVector& p, std::size_t l) const {
    return data_scale(l) * (apertures(l).transpose() * m_fwd.cwiseProduct(p));
  }

  /// N_R × N_T readings for all columns of `fields`.
  CMatrix scattered_all(const CVector& m_fwd, const CMatrix& fields, std::size_t l) const {
    return data_scale(l) * (apertures(l).transpose() * (m_fwd.asDiagonal() * fields));
  }

  /// k0²|τ|, the factor in front of Σ_n r_j(n) m_n p_n.
  Complex data_scale(std::size_t l) const { return wavenumbers_.at(l).k0_squared() * grid_.cell_measure(); }

  /// Prolongs m onto the forward grid.
  CVector to_forward_grid(const ContrastMap<Dim>& m) const {
    if (m.values.size() != m.grid.size()) throw Error("contrast map does not match its grid");
    return prolong(m.grid, grid_, m.values);
  }

  /// F(m): the full data tensor. Frequencies run in sequence, transmits are
  /// sharded across `workers`.
  Dataset forward(const ContrastMap<Dim>& m, int workers = 1, bool release_after = false) const {
    const CVector mf = to_forward_grid(m);
    Dataset d = Dataset::zeros(n_transmit(), n_receive(), freqs_);
    for (std::size_t l = 0; l < freqs_.size(); ++l) {
      prepare(l, workers);
      const CMatrix p = solve_columns(mf, l, incident_all(l), workers, "transmit");
      store(d, l, scattered_all(mf, p, l));
      if (release_after) release(l);
    }
    return d;
  }

  /// Writes an N_R × N_T block into frequency slice l.
  static void store(Dataset& d, std::size_t l, const CMatrix& block) {
    for (std::ptrdiff_t i = 0; i < d.n_transmit; ++i)
      for (std::ptrdiff_t j = 0; j < d.n_receive; ++j) d.at(i, j, static_cast<std::ptrdiff_t>(l)) = block(j, i);
  }

 private:
  CVector ideal_plane_wave(double angle_deg, std::size_t l) const {
    const double th = angle_deg * kPi / 180.0;
    const auto c = geom_.centroid();
    const Complex k = wavenumbers_[l].k0;
    CVector p(grid_.size());
    for (std::ptrdiff_t n = 0; n < grid_.size(); ++n) {
      const auto x = grid_.center(n);
      p[n] = geom_.source_amplitude *
             std::exp(-kJ * k * ((x[0] - c[0]) * std::sin(th) + (x[Dim - 1] - c[Dim - 1]) * std::cos(th)));
    }
    return p;
  }

  CMatrix compute_apertures(std::size_t l, int workers) const {
    const std::ptrdiff_t n = grid_.size(), nr = n_receive();
    CMatrix r(n, nr);
    const double h = grid_.spacing(), inv_measure = 1.0 / grid_.cell_measure();
    const Complex k = wavenumbers_[l].k0;
    std::vector<std::vector<std::pair<Point<Dim>, double>>> pts;
    for (std::ptrdiff_t e = 0; e < nr; ++e) pts.push_back(geom_.aperture(e));
    run_sharded(schedule(workers, n), [&](int, const Shard& s) {
      for (std::ptrdiff_t c = s.begin; c < s.end; ++c) {
        const auto center = grid_.center(c);
        for (std::ptrdiff_t e = 0; e < nr; ++e) {
          Complex v = 0.0;
          for (const auto& [a, w] : pts[e])
            v += w * (opt_.rule == CellRule::Exact ? cell_integral<Dim>(k, a, center, h)
                                                   : cell_integral_equal_measure<Dim>(k, a, center, h));
          r(c, e) = v * inv_measure;
        }
      }
    });
    return r;
  }

  Grid<Dim> grid_;
  ArrayGeometry<Dim> geom_;
  FrequencySet freqs_;
  Background bg_;
  ForwardOptions opt_;
  std::vector<Wavenumber> wavenumbers_;
  mutable std::mutex mutex_;
  mutable std::vector<std::unique_ptr<ConvolutionKernel<Dim>>> kernels_;
  mutable std::vector<CMatrix> apertures_;
  mutable std::atomic<long long> solves_{0};
};

}  // namespace usfwi
