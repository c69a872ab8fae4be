#include <gtest/gtest.h>

#include <cmath>

#include "magidyn/errors.hpp"
#include "magidyn/hmc.hpp"

using namespace magidyn;

namespace {
double std_normal_logp(const Vector& x) { return -0.5 * x.squaredNorm(); }
Vector std_normal_grad(const Vector& x) { return -x; }

double energy(const Vector& q, const Vector& p) { return -std_normal_logp(q) + 0.5 * p.squaredNorm(); }
}  // namespace

TEST(Leapfrog, HandExecutedSingleStep) {
  for (double eps : {0.1, 0.5}) {
    Vector q = Vector::Zero(1), p = Vector::Ones(1);
    leapfrog(q, p, eps, 1, std_normal_grad, MassMatrix::identity(1));
    EXPECT_NEAR(q[0], eps, 1e-15);
    EXPECT_NEAR(p[0], 1.0 - 0.5 * eps * eps, 1e-15);
  }
}

TEST(Leapfrog, ZeroStepIsIdentity) {
  Vector q(2), p(2);
  q << 0.3, -1.2;
  p << 0.7, 0.1;
  const Vector q0 = q, p0 = p;
  leapfrog(q, p, 0.0, 10, std_normal_grad, MassMatrix::identity(2));
  EXPECT_EQ(q, q0);
  EXPECT_EQ(p, p0);
}

TEST(Leapfrog, Reversible) {
  Matrix M(3, 3);
  M << 2.0, 0.3, 0.0, 0.3, 1.0, 0.2, 0.0, 0.2, 0.5;
  for (const MassMatrix& mass : {MassMatrix::identity(3), MassMatrix::dense(M)}) {
    Vector q(3), p(3);
    q << 0.5, -0.2, 1.1;
    p << -0.3, 0.8, 0.05;
    const Vector q0 = q, p0 = p;
    auto grad = [](const Vector& x) -> Vector { return -x.array().cube().matrix() - x; };
    leapfrog(q, p, 0.05, 40, grad, mass);
    p = -p;
    leapfrog(q, p, 0.05, 40, grad, mass);
    EXPECT_LT((q - q0).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((p + p0).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Leapfrog, EnergyDriftIsSecondOrder) {
  const Vector q0 = Vector::Constant(2, 1.0), p0 = Vector::Constant(2, 0.5);
  auto drift = [&](double eps, int L) {
    Vector q = q0, p = p0;
    double worst = 0.0;
    for (int i = 0; i < L; ++i) {
      leapfrog(q, p, eps, 1, std_normal_grad, MassMatrix::identity(2));
      worst = std::max(worst, std::abs(energy(q, p) - energy(q0, p0)));
    }
    return worst;
  };
  const double coarse = drift(0.2, 10), fine = drift(0.1, 20);
  EXPECT_GE(coarse / fine, 3.5);
}

TEST(Leapfrog, NonFiniteStateThrows) {
  Vector q = Vector::Ones(1), p = Vector::Ones(1);
  auto bad = [](const Vector&) -> Vector { return Vector::Constant(1, NAN); };
  EXPECT_THROW(leapfrog(q, p, 0.1, 3, bad, MassMatrix::identity(1)), NonFiniteState);
}

TEST(Hmc, KeptCount) {
  EXPECT_EQ(kept_count(16001, 0.5), 8000);
  EXPECT_EQ(kept_count(4001, 0.5), 2000);
  EXPECT_EQ(kept_count(100, 0.2), 80);
  EXPECT_EQ(kept_count(10, 0.0), 10);
}

TEST(Hmc, StandardNormalMoments) {
  HmcSettings s;
  s.n_steps = 40001;
  s.leapfrog_steps = 10;
  s.step_size = 0.3;
  s.seed = 8;
  const ChainOutput out = hmc_sample(std_normal_logp, std_normal_grad, Vector::Constant(1, 2.0), s);
  ASSERT_EQ(out.samples.rows(), 20000);
  const double mean = out.samples.col(0).mean();
  const double var = (out.samples.col(0).array() - mean).square().mean();
  EXPECT_LT(std::abs(mean), 0.05);
  EXPECT_LT(std::abs(var - 1.0), 0.1);
  EXPECT_GE(out.accept_rate, 0.0);
  EXPECT_LE(out.accept_rate, 1.0);
}

TEST(Hmc, CorrelatedGaussian) {
  Matrix S(2, 2);
  S << 1.0, 0.8, 0.8, 1.0;
  const Matrix P = S.inverse();
  auto logp = [&](const Vector& x) { return -0.5 * x.dot(P * x); };
  auto grad = [&](const Vector& x) -> Vector { return -P * x; };
  HmcSettings s;
  s.n_steps = 40001;
  s.leapfrog_steps = 15;
  s.step_size = 0.2;
  s.step_jitter = 0.2;
  s.seed = 21;
  const ChainOutput out = hmc_sample(logp, grad, Vector::Zero(2), s);
  const Matrix c = out.samples.rowwise() - out.samples.colwise().mean();
  const Matrix cov = c.transpose() * c / static_cast<double>(c.rows());
  EXPECT_NEAR(cov(0, 1) / std::sqrt(cov(0, 0) * cov(1, 1)), 0.8, 0.05);
}

TEST(Hmc, Deterministic) {
  HmcSettings s;
  s.n_steps = 501;
  s.seed = 4;
  const ChainOutput a = hmc_sample(std_normal_logp, std_normal_grad, Vector::Zero(3), s);
  const ChainOutput b = hmc_sample(std_normal_logp, std_normal_grad, Vector::Zero(3), s);
  EXPECT_EQ(a.samples, b.samples);
  EXPECT_EQ(a.final_step_size, b.final_step_size);
  s.seed = 5;
  EXPECT_NE(hmc_sample(std_normal_logp, std_normal_grad, Vector::Zero(3), s).samples, a.samples);
}

TEST(Hmc, DivergencesAreRejectedNotThrown) {
  // Log density finite only on |x| < 1; big steps leave the support.
  auto logp = [](const Vector& x) { return x.cwiseAbs().maxCoeff() < 1.0 ? -0.5 * x.squaredNorm() : -INFINITY; };
  auto grad = [](const Vector& x) -> Vector { return -x; };
  HmcSettings s;
  s.n_steps = 201;
  s.step_size = 3.0;
  s.adapt_step_size = false;
  s.seed = 1;
  const ChainOutput out = hmc_sample(logp, grad, Vector::Zero(1), s);
  EXPECT_GT(out.divergences, 0);
  EXPECT_TRUE(out.samples.allFinite());
  EXPECT_TRUE((out.samples.array().abs() < 1.0).all());
}

TEST(Hmc, StepSizeFrozenAfterBurnIn) {
  HmcSettings s;
  s.n_steps = 1001;
  s.seed = 2;
  s.adapt_step_size = false;
  s.step_size = 0.123;
  EXPECT_EQ(hmc_sample(std_normal_logp, std_normal_grad, Vector::Zero(1), s).final_step_size, 0.123);
}

TEST(Hmc, RejectsBadSettings) {
  HmcSettings s;
  s.leapfrog_steps = 0;
  EXPECT_THROW(hmc_sample(std_normal_logp, std_normal_grad, Vector::Zero(1), s), InvalidArgument);
  HmcSettings t;
  auto nan_logp = [](const Vector&) { return NAN; };
  EXPECT_THROW(hmc_sample(nan_logp, std_normal_grad, Vector::Zero(1), t), InvalidArgument);
  HmcSettings u;
  u.step_jitter = 1.0;
  EXPECT_THROW(hmc_sample(std_normal_logp, std_normal_grad, Vector::Zero(1), u), InvalidArgument);
}
