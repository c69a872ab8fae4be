#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "magidyn/errors.hpp"
#include "magidyn/ode.hpp"

using namespace magidyn;

namespace {
const Theta kChaotic{8.0 / 3.0, 28.0, 10.0};
}

TEST(Lorenz, OriginIsStationary) {
  EXPECT_EQ(lorenz_f(State3::Zero(), kChaotic), State3::Zero());
}

TEST(Lorenz, HandSubstitution) {
  const State3 v = lorenz_f(State3(1, 1, 1), kChaotic);
  EXPECT_DOUBLE_EQ(v[0], 0.0);
  EXPECT_DOUBLE_EQ(v[1], 26.0);
  EXPECT_NEAR(v[2], -5.0 / 3.0, 1e-15);
}

TEST(Lorenz, NonOriginFixedPoint) {
  const double a = std::sqrt(40.0 / 3.0);
  const State3 v = lorenz_f(State3(a, a, 5.0), Theta{8.0 / 3.0, 6.0, 10.0});
  EXPECT_LT(v.cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Lorenz, StateJacobianAtOrigin) {
  Eigen::Matrix3d expect;
  expect << -10, 10, 0, 28, -1, 0, 0, 0, -8.0 / 3.0;
  EXPECT_LT((lorenz_grad_x(State3::Zero(), kChaotic) - expect).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Lorenz, ParameterJacobianExamples) {
  EXPECT_EQ(lorenz_grad_theta(State3::Zero(), kChaotic), Eigen::Matrix3d::Zero());
  Eigen::Matrix3d expect;
  expect << 0, 0, 0, 0, 1, 0, -1, 0, 0;
  EXPECT_EQ(lorenz_grad_theta(State3(1, 1, 1), Theta{1.3, 2.1, 0.4}), expect);
}

TEST(Lorenz, JacobiansMatchCentralDifferences) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(-20.0, 20.0), pu(0.5, 30.0);
  const double h = 1e-6;
  for (int trial = 0; trial < 200; ++trial) {
    const State3 s(u(gen), u(gen), u(gen));
    const Theta th{pu(gen), pu(gen), pu(gen)};
    const Eigen::Matrix3d Jx = lorenz_grad_x(s, th), Jt = lorenz_grad_theta(s, th);
    for (int j = 0; j < 3; ++j) {
      State3 sp = s, sm = s;
      sp[j] += h;
      sm[j] -= h;
      const State3 fd = (lorenz_f(sp, th) - lorenz_f(sm, th)) / (2 * h);
      for (int i = 0; i < 3; ++i)
        EXPECT_NEAR(fd[i], Jx(i, j), 1e-5 * std::max(1.0, std::abs(Jx(i, j))));
      Vector tp = th.to_vector(), tm = tp;
      tp[j] += h;
      tm[j] -= h;
      const State3 fdt = (lorenz_f(s, Theta::from_vector(tp)) - lorenz_f(s, Theta::from_vector(tm))) / (2 * h);
      for (int i = 0; i < 3; ++i)
        EXPECT_NEAR(fdt[i], Jt(i, j), 1e-5 * std::max(1.0, std::abs(Jt(i, j))));
    }
  }
}

TEST(Lorenz, JacobianTraceIsStateIndependent) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (int k = 0; k < 50; ++k) {
    const State3 s(u(gen), u(gen), u(gen));
    EXPECT_NEAR(lorenz_grad_x(s, kChaotic).trace(), -10.0 - 1.0 - 8.0 / 3.0, 1e-12);
  }
}

TEST(Lorenz, CriticalRho) {
  EXPECT_NEAR(rho_critical(8.0 / 3.0, 10.0), 470.0 / 19.0, 1e-12);
  EXPECT_GT(28.0, rho_critical(8.0 / 3.0, 10.0));
  EXPECT_LT(23.0, rho_critical(8.0 / 3.0, 10.0));
  EXPECT_THROW(rho_critical(2.0, 3.0), DegenerateDenominator);
}

TEST(Lorenz, CriticalRhoIncreasesWithBeta) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> s(3.0, 40.0), f(0.01, 0.95);
  for (int k = 0; k < 200; ++k) {
    const double sigma = s(gen);
    const double b1 = f(gen) * (sigma - 1.0), b2 = f(gen) * (sigma - 1.0);
    const double lo = std::min(b1, b2), hi = std::max(b1, b2);
    if (hi - lo < 1e-6) continue;
    EXPECT_LT(rho_critical(lo, sigma), rho_critical(hi, sigma));
  }
}

TEST(Lorenz, BatchEvaluatorsMatchPointwise) {
  LorenzSystem sys;
  std::mt19937_64 gen(5);
  std::normal_distribution<double> n(0.0, 10.0);
  Matrix X(7, 3), W(7, 3);
  for (int r = 0; r < 7; ++r)
    for (int c = 0; c < 3; ++c) {
      X(r, c) = n(gen);
      W(r, c) = n(gen);
    }
  const Vector t = Vector::LinSpaced(7, 0.0, 1.0);
  const Vector th = kChaotic.to_vector();
  Matrix F;
  sys.f_rows(X, t, th, F);
  Matrix gx;
  Vector gth = Vector::Zero(3);
  sys.vjp_rows(X, t, th, W, gx, gth);
  Vector gth_ref = Vector::Zero(3);
  for (int r = 0; r < 7; ++r) {
    const Vector xr = X.row(r).transpose();
    EXPECT_LT((F.row(r).transpose() - sys.f(xr, t[r], th)).norm(), 1e-12);
    const Vector w = W.row(r).transpose();
    EXPECT_LT((gx.row(r).transpose() - sys.grad_x(xr, t[r], th).transpose() * w).norm(), 1e-10);
    gth_ref += sys.grad_theta(xr, t[r], th).transpose() * w;
  }
  EXPECT_LT((gth - gth_ref).norm(), 1e-9);
}
