#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "magidyn/errors.hpp"
#include "magidyn/kernel_bundle.hpp"
#include "magidyn/rng.hpp"

using namespace magidyn;

namespace {
std::vector<double> even_grid(int n, double t0, double t1) {
  std::vector<double> g;
  for (int i = 0; i < n; ++i) g.push_back(t0 + (t1 - t0) * i / (n - 1));
  return g;
}
}  // namespace

TEST(KernelBundle, TwoPointGrid) {
  const KernelHyper h{2.5, 0.9};
  const KernelBundle b = build_bundle({0.0, 0.4}, h);
  EXPECT_EQ(b.C.rows(), 2);
  EXPECT_DOUBLE_EQ(b.C(0, 0), 2.5);
  EXPECT_DOUBLE_EQ(b.C(1, 1), 2.5);
  EXPECT_DOUBLE_EQ(b.C(0, 1), matern_k(0.4, h));
}

TEST(KernelBundle, BlocksFollowKernelDerivatives) {
  const KernelHyper h{1.3, 0.6};
  const std::vector<double> g{0.0, 0.1, 0.35, 0.8, 1.5};
  const KernelBundle b = build_bundle(g, h);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      const MaternDerivs m = matern_derivatives(g[i] - g[j], h);
      EXPECT_NEAR(b.dC(i, j), m.d_ds, 1e-14);
      EXPECT_NEAR(b.ddC(i, j), m.d2_dsdt, 1e-12);
    }
  EXPECT_LT((b.m - b.dC * b.C_inv).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(KernelBundle, KIsSymmetric) {
  const KernelBundle b = build_bundle(even_grid(20, 0.0, 2.0), {3.0, 0.7});
  EXPECT_LT((b.K - b.K.transpose()).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((b.C - b.C.transpose()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(KernelBundle, FactorsAreConsistent) {
  const KernelBundle b = build_bundle(even_grid(15, 0.0, 3.0), {2.0, 0.5});
  Matrix Cj = b.C;
  Cj.diagonal().array() += b.jitter_C;
  EXPECT_LT((b.C_chol * b.C_chol.transpose() - Cj).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((b.C_inv * Cj - Matrix::Identity(15, 15)).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_NEAR(b.logdet_C, 2 * b.C_chol.diagonal().array().log().sum(), 1e-10);
}

TEST(KernelBundle, RandomGridsFactorWithSmallJitter) {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(u(gen) * 49);
    std::vector<double> g;
    double t = 0.0;
    for (int i = 0; i < n; ++i) {
      t += 0.01 + u(gen) * 0.2;
      g.push_back(t);
    }
    const KernelHyper h{std::exp(-2 + 5 * u(gen)), std::exp(-2 + 3 * u(gen))};
    const KernelBundle b = build_bundle(g, h);
    EXPECT_LE(b.jitter_C, 1e-6 * h.phi1 * (1 + 1e-12));
    EXPECT_LE(b.jitter_ratio_K, 1e-6);
  }
}

TEST(KernelBundle, JitterLadderPicksSmallestRung) {
  Matrix A = Matrix::Identity(3, 3);
  EXPECT_EQ(jittered_cholesky(A).jitter, 0.0);
  Matrix S = Matrix::Ones(3, 3);  // rank one
  const JitteredCholesky f = jittered_cholesky(S);
  EXPECT_GT(f.jitter_ratio, 0.0);
  Matrix N = -Matrix::Identity(2, 2);
  EXPECT_THROW(jittered_cholesky(N), NotPositiveDefinite);
}

TEST(KernelBundle, SamplingReproducesCovariance) {
  const KernelHyper h{1.5, 0.5};
  const KernelBundle b = build_bundle({0.0, 0.2, 0.4, 0.6, 0.8}, h);
  CounterRng rng(derive_key(1, 2));
  const int n = 20000;
  Matrix acc = Matrix::Zero(5, 5);
  for (int k = 0; k < n; ++k) {
    Vector z(5);
    for (int i = 0; i < 5; ++i) z[i] = rng.normal();
    const Vector x = b.C_chol * z;
    acc += x * x.transpose();
  }
  acc /= n;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) EXPECT_NEAR(acc(i, j), b.C(i, j), 0.05 * h.phi1);
}

TEST(KernelBundle, EvenGridShortcutMatchesDirect) {
  const KernelHyper h{1.1, 0.3};
  const std::vector<double> g = even_grid(30, 0.5, 2.0);
  const Matrix C = matern_cov(g, h);
  for (int i = 0; i < 30; ++i)
    for (int j = 0; j < 30; ++j) EXPECT_NEAR(C(i, j), matern_k(g[i] - g[j], h), 1e-13);
}

TEST(KernelBundle, RejectsBadGrid) {
  EXPECT_THROW(build_bundle({0.0}, {1, 1}), InvalidGrid);
  EXPECT_THROW(build_bundle({0.0, 0.5, 0.4}, {1, 1}), InvalidGrid);
  EXPECT_THROW(build_bundle({0.0, 0.5}, {-1, 1}), InvalidArgument);
}
