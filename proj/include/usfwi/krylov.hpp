#pragma once

/// \file usfwi/krylov.hpp
/// \brief Matrix-free restarted GMRES and conjugate gradients.
///
/// Operators are callables `void(const CVector& in, CVector& out)`.

#include "usfwi/core.hpp"

#include <cmath>
#include <vector>

namespace usfwi {

struct KrylovResult {
  int iterations = 0;   ///< operator applications spent in the iteration
  double residual = 0;  ///< relative residual ‖b − Ax‖/‖b‖ (recurrence estimate for GMRES)
  bool converged = false;
  bool breakdown = false;  ///< CG only: non-positive curvature or non-finite values
};

struct GmresOptions {
  int restart = 30;
  double tol = 1e-6;
  int max_iter = 400;
};

/// Restarted GMRES with modified Gram–Schmidt and complex Givens rotations.
/// `x` holds the initial guess on entry and the iterate on return.
template <class Op>
KrylovResult gmres(Op&& apply, const CVector& b, CVector& x, const GmresOptions& opt = {}) {
  KrylovResult res;
  const Eigen::Index n = b.size();
  if (x.size() != n) x = CVector::Zero(n);
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    x.setZero();
    res.converged = true;
    return res;
  }
  const int m = opt.restart;
  std::vector<CVector> v(m + 1);
  CMatrix hess = CMatrix::Zero(m + 1, m);
  std::vector<double> cs(m);
  std::vector<Complex> sn(m);
  CVector g(m + 1), w(n), ax(n);

  while (true) {
    apply(x, ax);
    CVector r = b - ax;
    double beta = r.norm();
    res.residual = beta / bnorm;
    if (res.residual <= opt.tol) {
      res.converged = true;
      return res;
    }
    if (res.iterations >= opt.max_iter) return res;
    v[0] = r / beta;
    g.setZero();
    g[0] = beta;
    int j = 0;
    for (; j < m && res.iterations < opt.max_iter; ++j) {
      apply(v[j], w);
      ++res.iterations;
      for (int i = 0; i <= j; ++i) {
        hess(i, j) = v[i].dot(w);
        w -= hess(i, j) * v[i];
      }
      const double hn = w.norm();
      hess(j + 1, j) = hn;
      for (int i = 0; i < j; ++i) {
        const Complex a = hess(i, j), c = hess(i + 1, j);
        hess(i, j) = cs[i] * a + sn[i] * c;
        hess(i + 1, j) = -std::conj(sn[i]) * a + cs[i] * c;
      }
      const Complex h1 = hess(j, j), h2 = hess(j + 1, j);
      const double a1 = std::abs(h1), t = std::hypot(a1, std::abs(h2));
      if (t == 0.0) {
        cs[j] = 1.0;
        sn[j] = 0.0;
      } else if (a1 == 0.0) {
        cs[j] = 0.0;
        sn[j] = std::conj(h2) / t;
      } else {
        cs[j] = a1 / t;
        sn[j] = (h1 / a1) * std::conj(h2) / t;
      }
      hess(j, j) = cs[j] * h1 + sn[j] * h2;
      hess(j + 1, j) = 0.0;
      g[j + 1] = -std::conj(sn[j]) * g[j];
      g[j] = cs[j] * g[j];
      res.residual = std::abs(g[j + 1]) / bnorm;
      if (hn > 0.0) v[j + 1] = w / hn;
      if (res.residual <= opt.tol || hn == 0.0) {
        ++j;
        break;
      }
    }
    // back substitution on the j×j triangle
    CVector y(j);
    for (int i = j - 1; i >= 0; --i) {
      Complex s = g[i];
      for (int l = i + 1; l < j; ++l) s -= hess(i, l) * y[l];
      y[i] = s / hess(i, i);
    }
    for (int i = 0; i < j; ++i) x += y[i] * v[i];
    if (!x.allFinite()) return res;
  }
}

struct CgOptions {
  double tol = 1e-2;
  int max_iter = 30;
};

/// Conjugate gradients for a Hermitian positive (semi-)definite operator.
/// On breakdown the best iterate seen (smallest residual) is returned with
/// `breakdown` set. `x` holds the initial guess on entry.
template <class Op>
KrylovResult conjugate_gradient(Op&& apply, const CVector& b, CVector& x, const CgOptions& opt = {}) {
  KrylovResult res;
  const Eigen::Index n = b.size();
  if (x.size() != n) x = CVector::Zero(n);
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    x.setZero();
    res.converged = true;
    return res;
  }
  CVector ap(n);
  apply(x, ap);
  CVector r = b - ap;
  CVector p = r;
  double rr = r.squaredNorm();
  res.residual = std::sqrt(rr) / bnorm;
  CVector best = x;
  double best_res = res.residual;
  while (res.residual > opt.tol && res.iterations < opt.max_iter) {
    apply(p, ap);
    ++res.iterations;
    const Complex pap = p.dot(ap);
    if (!(pap.real() > 0.0) || !std::isfinite(pap.real())) {
      res.breakdown = true;
      break;
    }
    const double alpha = rr / pap.real();
    x += alpha * p;
    r -= alpha * ap;
    const double rr_new = r.squaredNorm();
    res.residual = std::sqrt(rr_new) / bnorm;
    if (!std::isfinite(res.residual)) {
      res.breakdown = true;
      break;
    }
    if (res.residual < best_res) {
      best_res = res.residual;
      best = x;
    }
    p = r + (rr_new / rr) * p;
    rr = rr_new;
  }
  if (res.breakdown || res.residual > best_res) {
    x = best;
    res.residual = best_res;
  }
  res.converged = res.residual <= opt.tol;
  return res;
}

}  // namespace usfwi
