#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "magidyn/errors.hpp"
#include "magidyn/matern.hpp"

using namespace magidyn;

TEST(Matern, VarianceAtZeroLag) {
  EXPECT_DOUBLE_EQ(matern_k(0.0, {3.5, 0.7}), 3.5);
  EXPECT_NEAR(matern_k(1e-12, {3.5, 0.7}), 3.5, 1e-9);
}

TEST(Matern, EvenAndDecreasing) {
  const KernelHyper h{2.0, 0.8};
  double prev = matern_k(0.0, h);
  for (double d = 0.01; d < 8.0; d += 0.01) {
    EXPECT_DOUBLE_EQ(matern_k(d, h), matern_k(-d, h));
    const double k = matern_k(d, h);
    EXPECT_LT(k, prev);
    prev = k;
  }
  EXPECT_LT(matern_k(10 * h.phi2, h), 1e-3 * h.phi1);
}

TEST(Matern, DerivativeSymmetries) {
  const KernelHyper h{1.7, 0.45};
  const MaternDerivs z = matern_derivatives(0.0, h);
  EXPECT_EQ(z.d_ds, 0.0);
  EXPECT_EQ(z.d_dt, 0.0);
  EXPECT_GT(z.d2_dsdt, 0.0);
  for (double d : {-2.0, -0.3, 0.1, 1.0, 3.7}) {
    const MaternDerivs m = matern_derivatives(d, h);
    EXPECT_EQ(m.d_ds, -m.d_dt);
    EXPECT_DOUBLE_EQ(m.value, matern_k(d, h));
  }
}

// Derivatives in s at fixed t are derivatives in d; d/dt = -d/dd, and
// d2/dsdt = -d2/dd2.
TEST(Matern, DerivativesMatchFiniteDifferencesOnLogSweep) {
  for (const KernelHyper h : {KernelHyper{1.0, 1.0}, KernelHyper{4.0, 0.3}, KernelHyper{0.2, 2.5}}) {
    for (double d = 1e-3; d < 20.0 * h.phi2; d *= 1.3) {
      const double step = 1e-4 * std::max(d, 1e-2) * h.phi2;
      const double kp = matern_k(d + step, h), km = matern_k(d - step, h), k0 = matern_k(d, h);
      const double d1 = (kp - km) / (2 * step);
      const double d2 = (kp - 2 * k0 + km) / (step * step);
      const MaternDerivs m = matern_derivatives(d, h);
      const double scale1 = std::max(std::abs(m.d_ds), 1e-8 * h.phi1 / h.phi2);
      const double scale2 = std::max(std::abs(m.d2_dsdt), 1e-6 * h.phi1 / (h.phi2 * h.phi2));
      EXPECT_NEAR(m.d_ds, d1, 1e-5 * scale1) << "d=" << d;
      EXPECT_NEAR(m.d2_dsdt, -d2, 1e-5 * scale2 + 1e-9 * std::abs(k0) / (step * step)) << "d=" << d;
    }
  }
}

TEST(Matern, RejectsBadHyperparameters) {
  EXPECT_THROW(validate({0.0, 1.0}), InvalidArgument);
  EXPECT_THROW(validate({1.0, -1.0}), InvalidArgument);
  EXPECT_THROW(validate({NAN, 1.0}), InvalidArgument);
  EXPECT_NO_THROW(validate({1e-8, 1e3}));
}
