#pragma once

/// \file usfwi/sensitivity.hpp
/// \brief Adjoint fields and the implicit Jacobian of the forward operator.
///
/// With primaries P_l (N × N_T) and adjoint fields P̃_l (N × N_R), the
/// Jacobian acts as
///   (J a)_{i,j,l} = k0l²|τ| Σ_n p̃_j(n) p_i(n) a(n)
/// on the forward grid. Because the Green's kernel is symmetric, p̃_j (the
/// total field of a unit source at receiver j) is exactly the adjoint state,
/// so J is the true derivative of the discrete forward map.

#include "usfwi/forward.hpp"

#include <climits>

namespace usfwi {

/// Per-frequency field matrices and the iterations at which they were solved.
struct FieldBank {
  std::vector<CMatrix> primaries;  ///< N × N_T per frequency
  std::vector<CMatrix> adjoints;   ///< N × N_R per frequency
  int primary_stamp = -1;
  int adjoint_stamp = -1;
};

/// Refresh period meaning "never refresh after the first solve".
inline constexpr int kNeverRefresh = INT_MAX;

/// Adjoint fields are re-solved at iteration k iff k mod T == 0.
inline bool refresh_policy(int k, int period) {
  if (period < 1) throw Error("refresh period must be >= 1");
  if (k < 0) throw Error("iteration index must be >= 0");
  return k % period == 0;
}

/// VIE solves one iteration needs under the refresh policy.
inline long long solves_per_iteration(std::ptrdiff_t nt, std::ptrdiff_t nr, std::ptrdiff_t nf, bool refresh) {
  return static_cast<long long>(nt) * nf + (refresh ? static_cast<long long>(nr) * nf : 0);
}

template <int Dim>
std::vector<CMatrix> solve_primaries(const ForwardModel<Dim>& model, const CVector& m_fwd, int workers) {
  std::vector<CMatrix> out;
  for (std::size_t l = 0; l < model.freqs().size(); ++l) {
    model.prepare(l, workers);
    out.push_back(model.solve_columns(m_fwd, l, model.incident_all(l), workers, "transmit"));
  }
  return out;
}

/// p̃_j for every (j, l): total fields of unit sources at the receiver apertures.
template <int Dim>
std::vector<CMatrix> solve_adjoint_fields(const ForwardModel<Dim>& model, const CVector& m_fwd, int workers) {
  std::vector<CMatrix> out;
  for (std::size_t l = 0; l < model.freqs().size(); ++l) {
    model.prepare(l, workers);
    out.push_back(model.solve_columns(m_fwd, l, model.apertures(l), workers, "receiver"));
  }
  return out;
}

/// Data tensor from solved primaries.
template <int Dim>
Dataset data_from_primaries(const ForwardModel<Dim>& model, const CVector& m_fwd,
                            const std::vector<CMatrix>& primaries) {
  Dataset d = Dataset::zeros(model.n_transmit(), model.n_receive(), model.freqs());
  for (std::size_t l = 0; l < primaries.size(); ++l)
    ForwardModel<Dim>::store(d, l, model.scattered_all(m_fwd, primaries[l], l));
  return d;
}

/// J and Jᴴ on the inversion grid, sharing one FieldBank. Work is sharded
/// over transmits; vjp partial sums are combined in ascending worker order.
template <int Dim>
class LinearizedOperator {
 public:
  LinearizedOperator(const ForwardModel<Dim>& model, const Grid<Dim>& inv_grid, const FieldBank& bank,
                     int workers = 1)
      : model_(model), inv_grid_(inv_grid), bank_(bank), workers_(workers) {
    refinement_factor(inv_grid_, model_.grid());
    const std::size_t nf = model_.freqs().size();
    if (bank_.primaries.size() != nf || bank_.adjoints.size() != nf) throw Error("field bank is incomplete");
    for (std::size_t l = 0; l < nf; ++l) {
      if (bank_.primaries[l].rows() != model_.grid().size() || bank_.primaries[l].cols() != model_.n_transmit())
        throw Error("primary fields do not match the forward model");
      if (bank_.adjoints[l].rows() != model_.grid().size() || bank_.adjoints[l].cols() != model_.n_receive())
        throw Error("adjoint fields do not match the forward model");
      scale_.push_back(model_.data_scale(l));
    }
  }

  std::ptrdiff_t data_size() const {
    return model_.n_transmit() * model_.n_receive() * static_cast<std::ptrdiff_t>(model_.freqs().size());
  }
  const Grid<Dim>& inversion_grid() const { return inv_grid_; }

  /// J a as a flattened (i, j, l) tensor.
  CVector jvp(const CVector& a) const {
    if (a.size() != inv_grid_.size()) throw Error("jvp: vector does not match the inversion grid");
    const CVector af = prolong(inv_grid_, model_.grid(), a);
    const std::ptrdiff_t nt = model_.n_transmit(), nr = model_.n_receive();
    const std::ptrdiff_t nf = static_cast<std::ptrdiff_t>(scale_.size());
    CVector out(nt * nr * nf);
    run_sharded(schedule(workers_, nt), [&](int, const Shard& s) {
      for (std::ptrdiff_t l = 0; l < nf; ++l) {
        // One product per transmit so the result does not depend on sharding.
        for (std::ptrdiff_t i = s.begin; i < s.end; ++i) {
          const CVector col = scale_[l] * (bank_.adjoints[l].transpose() * af.cwiseProduct(bank_.primaries[l].col(i)));
          for (std::ptrdiff_t j = 0; j < nr; ++j) out[(i * nr + j) * nf + l] = col[j];
        }
      }
    });
    return out;
  }

  /// Jᴴ b on the inversion grid. Transmit contributions are summed in
  /// ascending order for every cell, so the result is bit-identical for any
  /// worker count.
  CVector vjp(const CVector& b) const {
    if (b.size() != data_size()) throw Error("vjp: vector does not match the data shape");
    const std::ptrdiff_t nt = model_.n_transmit(), nr = model_.n_receive();
    const std::ptrdiff_t nf = static_cast<std::ptrdiff_t>(scale_.size());
    const std::ptrdiff_t n = model_.grid().size();
    CVector total = CVector::Zero(n);
    CMatrix q(n, nt);
    for (std::ptrdiff_t l = 0; l < nf; ++l) {
      // Receiver back-projection, one product per transmit.
      run_sharded(schedule(workers_, nt), [&](int, const Shard& s) {
        CVector bi(nr);
        for (std::ptrdiff_t i = s.begin; i < s.end; ++i) {
          for (std::ptrdiff_t j = 0; j < nr; ++j) bi[j] = b[(i * nr + j) * nf + l];
          q.col(i).noalias() = bank_.adjoints[l].conjugate() * bi;
        }
      });
      const Complex sc = std::conj(scale_[l]);
      const CMatrix& p = bank_.primaries[l];
      run_sharded(schedule(workers_, n), [&](int, const Shard& s) {
        auto acc = total.segment(s.begin, s.size());
        for (std::ptrdiff_t i = 0; i < nt; ++i)
          acc += sc * p.col(i).segment(s.begin, s.size()).conjugate().cwiseProduct(q.col(i).segment(s.begin, s.size()));
      });
    }
    return restrict_sum(inv_grid_, model_.grid(), total);
  }

 private:
  const ForwardModel<Dim>& model_;
  Grid<Dim> inv_grid_;
  const FieldBank& bank_;
  int workers_;
  std::vector<Complex> scale_;
};

}  // namespace usfwi
