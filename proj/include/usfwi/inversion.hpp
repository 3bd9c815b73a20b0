#pragma once

/// \file usfwi/inversion.hpp
/// \brief TV-regularized ADMM with a Gauss–Newton m-step.
///
/// Objective: ½‖d − F(m)‖² + λ Σ_n ‖(∇m)_n‖ + (γ/2)‖m − m_ref‖², split with
/// g = ∇m. Each iteration solves the linearized normal equations by CG,
/// shrinks g and updates the dual u.

#include "usfwi/krylov.hpp"
#include "usfwi/sensitivity.hpp"
#include "usfwi/tv.hpp"

#include <chrono>
#include <functional>
#include <optional>
#include <type_traits>

namespace usfwi {

/// Weights actually used by a run. Unset config weights are derived from
/// S = ‖Jᴴ d_obs‖_∞ at the first iteration.
struct AdmmWeights {
  double lambda = 0.0;
  double rho = 1.0;
  double gamma = 0.0;
};

struct AdmmConfig {
  std::optional<double> lambda, rho, gamma;
  double lambda_rel = 1e-3;   ///< λ = lambda_rel·S
  double rho_rel = 10.0;      ///< ρ = rho_rel·λ
  double rho_floor_rel = 1e-6;  ///< ρ = rho_floor_rel·S when λ = 0
  double gamma_rel = 1e-5;    ///< γ = gamma_rel·S
  std::optional<CVector> m_ref;  ///< defaults to m0
  int outer_iters = 20;
  CgOptions inner;
  double fidelity_stop = 0.0;  ///< 0 disables the threshold
  int refresh_period = 3;
  bool real_contrast_only = false;
  bool standard_dual_update = false;  ///< u += (g − ∇m) instead of u += ρ(g − ∇m)
  int max_halvings = 4;
  int workers = 1;

  void validate() const {
    if (lambda && !(*lambda >= 0.0)) throw Error("lambda must be >= 0");
    if (rho && !(*rho > 0.0)) throw Error("rho must be > 0");
    if (gamma && !(*gamma >= 0.0)) throw Error("gamma must be >= 0");
    if (!(lambda_rel >= 0.0) || !(rho_rel > 0.0) || !(rho_floor_rel > 0.0) || !(gamma_rel >= 0.0))
      throw Error("relative weights must be non-negative (rho factors positive)");
    if (outer_iters < 1) throw Error("outer_iters must be >= 1");
    if (refresh_period < 1) throw Error("refresh_period must be >= 1");
    if (max_halvings < 0) throw Error("max_halvings must be >= 0");
    if (workers < 1) throw Error("workers must be >= 1");
    if (!(fidelity_stop >= 0.0)) throw Error("fidelity_stop must be >= 0");
  }

  /// S = 0 (data with no energy, e.g. consistent data at m0 = 0) falls back
  /// to S = 1; the m-step right-hand side is then zero anyway.
  AdmmWeights resolve(double s) const {
    if (!(s >= 0.0) || !std::isfinite(s)) throw Error("data scale must be finite and >= 0");
    if (s == 0.0) s = 1.0;
    AdmmWeights w;
    w.lambda = lambda.value_or(lambda_rel * s);
    w.rho = rho.value_or(w.lambda > 0.0 ? rho_rel * w.lambda : rho_floor_rel * s);
    w.gamma = gamma.value_or(gamma_rel * s);
    return w;
  }

  /// λ = 0 and a vanishing ρ: plain Gauss–Newton FWI.
  static AdmmConfig basic_fwi() {
    AdmmConfig c;
    c.lambda = 0.0;
    return c;
  }
};

struct IterationRecord {
  int k = 0;
  double fidelity = 0.0;  ///< ½‖F(m_k) − d‖²
  double tv = 0.0;        ///< Σ‖g_n‖
  double primal_residual = 0.0;
  int inner_iterations = 0;
  double inner_residual = 0.0;
  bool inner_breakdown = false;
  double step = 1.0;
  int halvings = 0;
  bool refreshed = false;
  long long forward_solves = 0;
  long long adjoint_solves = 0;
  long long rejected_trial_solves = 0;
  double wall_seconds = 0.0;
};

template <int Dim>
struct AdmmState {
  ContrastMap<Dim> m;
  CMatrix g, u;
  int k = 0;
  std::vector<IterationRecord> history;
};

template <int Dim>
struct AdmmResult {
  AdmmState<Dim> state;
  AdmmWeights weights;
  double initial_fidelity = 0.0;
  long long initial_solves = 0;
  std::optional<std::string> aborted;  ///< solver failure message; history is partial
};

inline double fidelity(const Dataset& a, const Dataset& b) { return 0.5 * (a.values - b.values).squaredNorm(); }

/// A x = Jᴴ J x + ρ ∇ᵀ∇ x + γ x.
template <int Dim>
CVector normal_apply(const LinearizedOperator<Dim>& op, const AdmmWeights& w, const CVector& x) {
  const auto& g = op.inversion_grid();
  return op.vjp(op.jvp(x)) + w.rho * div(g, grad(g, x)) + w.gamma * x;
}

/// Right-hand side Jᴴ r + ρ ∇ᵀ(g + u − ∇m) + γ(m_ref − m), r = d − F(m).
template <int Dim>
CVector normal_rhs(const LinearizedOperator<Dim>& op, const AdmmWeights& w, const CVector& residual,
                   const AdmmState<Dim>& s, const CVector& m_ref) {
  const auto& g = op.inversion_grid();
  return op.vjp(residual) + w.rho * div(g, CMatrix(s.g + s.u - grad(g, s.m.values))) + w.gamma * (m_ref - s.m.values);
}

struct MStep {
  CVector delta;
  KrylovResult cg;
};

template <int Dim>
MStep m_step(const LinearizedOperator<Dim>& op, const AdmmWeights& w, const CVector& residual,
             const AdmmState<Dim>& s, const CVector& m_ref, const CgOptions& inner, bool real_only) {
  const CVector b = normal_rhs(op, w, residual, s, m_ref);
  MStep out{CVector::Zero(b.size()), {}};
  out.cg = conjugate_gradient([&](const CVector& x, CVector& y) { y = normal_apply(op, w, x); }, b, out.delta, inner);
  if (real_only) out.delta = out.delta.real().template cast<Complex>();
  return out;
}

template <int Dim>
CMatrix g_step(const Grid<Dim>& grid, const CVector& m, const CMatrix& u, const AdmmWeights& w) {
  return shrink(grad(grid, m) - u, w.lambda / w.rho);
}

template <int Dim>
CMatrix u_step(const Grid<Dim>& grid, const CVector& m, const CMatrix& g, const CMatrix& u, const AdmmWeights& w,
               bool standard) {
  return u + (standard ? 1.0 : w.rho) * (g - grad(grid, m));
}

/// Called after every completed iteration.
template <int Dim>
using IterationCallback = std::function<void(const AdmmState<Dim>&, const IterationRecord&)>;

/// Algorithm loop. `model` is the inversion-time forward model (its grid an
/// integer refinement of m0's grid).
template <int Dim>
AdmmResult<Dim> run(const ForwardModel<Dim>& model, const Dataset& d_obs, const ContrastMap<Dim>& m0,
                    const AdmmConfig& cfg, const std::type_identity_t<IterationCallback<Dim>>& on_iteration = {}) {
  cfg.validate();
  const Grid<Dim>& grid = m0.grid;
  if (m0.values.size() != grid.size()) throw Error("initial model does not match its grid");
  if (d_obs.n_transmit != model.n_transmit() || d_obs.n_receive != model.n_receive() ||
      d_obs.n_freq() != static_cast<std::ptrdiff_t>(model.freqs().size()))
    throw Error("observed data shape does not match the forward model");
  refinement_factor(grid, model.grid());
  const CVector m_ref = cfg.m_ref ? *cfg.m_ref : m0.values;
  if (m_ref.size() != grid.size()) throw Error("m_ref does not match the inversion grid");
  const int workers = cfg.workers;
  const std::ptrdiff_t nt = model.n_transmit(), nr = model.n_receive();
  const std::ptrdiff_t nf = static_cast<std::ptrdiff_t>(model.freqs().size());

  AdmmResult<Dim> res;
  AdmmState<Dim>& s = res.state;
  s.m = m0;
  s.g = grad(grid, m0.values);
  s.u = CMatrix::Zero(grid.size(), Dim);

  FieldBank bank;
  CVector mf = model.to_forward_grid(s.m);
  bank.primaries = solve_primaries(model, mf, workers);
  bank.primary_stamp = 0;
  res.initial_solves = nt * nf;
  Dataset fm = data_from_primaries(model, mf, bank.primaries);
  double fid = fidelity(fm, d_obs);
  res.initial_fidelity = fid;

  try {
    for (int k = 0; k < cfg.outer_iters; ++k) {
      const auto t0 = std::chrono::steady_clock::now();
      IterationRecord rec;
      rec.k = k + 1;
      rec.refreshed = refresh_policy(k, cfg.refresh_period);
      if (rec.refreshed) {
        bank.adjoints = solve_adjoint_fields(model, mf, workers);
        bank.adjoint_stamp = k;
        rec.adjoint_solves = nr * nf;
      }
      const LinearizedOperator<Dim> op(model, grid, bank, workers);
      if (k == 0) res.weights = cfg.resolve(op.vjp(d_obs.values).cwiseAbs().maxCoeff());
      const AdmmWeights& w = res.weights;

      const MStep ms = m_step(op, w, CVector(d_obs.values - fm.values), s, m_ref, cfg.inner, cfg.real_contrast_only);
      rec.inner_iterations = ms.cg.iterations;
      rec.inner_residual = ms.cg.residual;
      rec.inner_breakdown = ms.cg.breakdown;

      // Backtracking on data fidelity; the accepted trial's fields are kept.
      // If every halving still increases the misfit, m is left unchanged.
      double step = 1.0;
      for (int h = 0;; ++h) {
        const CVector trial = s.m.values + step * ms.delta;
        const CVector tf = prolong(grid, model.grid(), trial);
        auto prim = solve_primaries(model, tf, workers);
        Dataset tfm = data_from_primaries(model, tf, prim);
        const double tfid = fidelity(tfm, d_obs);
        if (tfid <= fid) {
          s.m.values = trial;
          mf = tf;
          bank.primaries = std::move(prim);
          bank.primary_stamp = k + 1;
          fm = std::move(tfm);
          fid = tfid;
          rec.halvings = h;
          rec.forward_solves = nt * nf;
          break;
        }
        rec.rejected_trial_solves += nt * nf;
        if (h == cfg.max_halvings) {
          rec.halvings = h;
          step = 0.0;
          break;
        }
        step *= 0.5;
      }
      rec.step = step;

      s.g = g_step(grid, s.m.values, s.u, w);
      s.u = u_step(grid, s.m.values, s.g, s.u, w, cfg.standard_dual_update);
      s.k = k + 1;

      rec.fidelity = fid;
      rec.tv = tv_norm(s.g);
      rec.primal_residual = (s.g - grad(grid, s.m.values)).norm();
      rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      s.history.push_back(rec);
      if (on_iteration) on_iteration(s, rec);
      if (cfg.fidelity_stop > 0.0 && fid <= cfg.fidelity_stop) break;
    }
  } catch (const ConvergenceError& e) {
    res.aborted = e.what();
  }
  return res;
}

/// Total VIE solves implied by a run's bookkeeping.
template <int Dim>
long long accounted_solves(const AdmmResult<Dim>& r) {
  long long n = r.initial_solves;
  for (const auto& h : r.state.history) n += h.forward_solves + h.adjoint_solves + h.rejected_trial_solves;
  return n;
}

}  // namespace usfwi
