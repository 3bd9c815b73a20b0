#include "usfwi/krylov.hpp"
#include "usfwi/schedule.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <random>

using namespace usfwi;

namespace {

CMatrix random_matrix(Eigen::Index n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  CMatrix a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = Complex(nd(rng), nd(rng));
  return a;
}

CVector random_vector(Eigen::Index n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  CVector v(n);
  for (auto& x : v) x = Complex(nd(rng), nd(rng));
  return v;
}

}  // namespace

TEST(Gmres, SolvesNonHermitianSystem) {
  const Eigen::Index n = 80;
  const CMatrix a = CMatrix::Identity(n, n) + 0.3 / std::sqrt(double(n)) * random_matrix(n, 1);
  const CVector b = random_vector(n, 2);
  CVector x = CVector::Zero(n);
  const auto r = gmres([&](const CVector& in, CVector& out) { out = a * in; }, b, x, {10, 1e-10, 500});
  EXPECT_TRUE(r.converged);
  EXPECT_LE((a * x - b).norm() / b.norm(), 1e-10);
}

TEST(Gmres, ZeroRightHandSide) {
  CVector x = CVector::Ones(4);
  const auto r = gmres([](const CVector& in, CVector& out) { out = 2.0 * in; }, CVector::Zero(4), x);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.iterations, 0);
  EXPECT_EQ(x.norm(), 0.0);
}

TEST(Gmres, ReportsNonConvergence) {
  const Eigen::Index n = 60;
  const CMatrix a = random_matrix(n, 3);
  CVector x;
  const auto r = gmres([&](const CVector& in, CVector& out) { out = a * in; }, random_vector(n, 4), x, {5, 1e-12, 7});
  EXPECT_FALSE(r.converged);
  EXPECT_LE(r.iterations, 7);
  EXPECT_GT(r.residual, 1e-12);
}

TEST(ConjugateGradient, SolvesHermitianPositiveDefinite) {
  const Eigen::Index n = 50;
  const CMatrix b = random_matrix(n, 5);
  const CMatrix a = b.adjoint() * b + CMatrix::Identity(n, n);
  const CVector rhs = random_vector(n, 6);
  CVector x;
  const auto r = conjugate_gradient([&](const CVector& in, CVector& out) { out = a * in; }, rhs, x, {1e-10, 500});
  EXPECT_TRUE(r.converged);
  EXPECT_FALSE(r.breakdown);
  EXPECT_LE((a * x - rhs).norm() / rhs.norm(), 1e-10);
}

TEST(ConjugateGradient, BreakdownKeepsBestIterate) {
  const Eigen::Index n = 10;
  CMatrix a = CMatrix::Identity(n, n);
  a(3, 3) = -1.0;  // indefinite
  const CVector rhs = random_vector(n, 7);
  CVector x;
  const auto r = conjugate_gradient([&](const CVector& in, CVector& out) { out = a * in; }, rhs, x, {1e-12, 50});
  EXPECT_TRUE(x.allFinite());
  EXPECT_LE((a * x - rhs).norm() / rhs.norm(), 1.0 + 1e-12);
  EXPECT_FALSE(r.converged && r.breakdown);
}

TEST(Schedule, EvenSplit) {
  const auto s = schedule(4, 60);
  ASSERT_EQ(s.size(), 4u);
  for (const auto& sh : s) EXPECT_EQ(sh.size(), 15);
  EXPECT_EQ(s.back().end, 60);
}

TEST(Schedule, SizesDifferByAtMostOne) {
  for (int w : {3, 7, 8, 64}) {
    const auto s = schedule(w, 60);
    std::ptrdiff_t lo = 1 << 30, hi = 0, at = 0;
    for (const auto& sh : s) {
      EXPECT_EQ(sh.begin, at);
      at = sh.end;
      lo = std::min(lo, sh.size());
      hi = std::max(hi, sh.size());
    }
    EXPECT_EQ(at, 60);
    EXPECT_LE(hi - lo, 1);
  }
  EXPECT_THROW(schedule(0, 5), Error);
}

TEST(Schedule, RunShardedVisitsEveryItemOnce) {
  std::vector<std::atomic<int>> hits(37);
  run_sharded(schedule(5, 37), [&](int, const Shard& s) {
    for (auto i = s.begin; i < s.end; ++i) ++hits[i];
  });
  for (auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(Schedule, ExceptionsPropagate) {
  EXPECT_THROW(run_sharded(schedule(3, 9),
                           [&](int w, const Shard&) {
                             if (w == 2) throw Error("boom");
                           }),
               Error);
}
