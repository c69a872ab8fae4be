#include <gtest/gtest.h>

#include <cmath>

#include "magidyn/analysis.hpp"
#include "magidyn/errors.hpp"
#include "magidyn/ode.hpp"
#include "magidyn/rng.hpp"

using namespace magidyn;

namespace {

Matrix rows(std::initializer_list<std::initializer_list<double>> r) {
  Matrix m(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(r.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& row : r) {
    Eigen::Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

Trajectory traj(std::vector<double> t, Matrix v) { return {std::move(t), std::move(v)}; }

}  // namespace

TEST(Analysis, QuantileType7) {
  const std::vector<double> s{1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(quantile_sorted(s, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile_sorted(s, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(quantile_sorted(s, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile_sorted(s, 0.025), 1.075);
  EXPECT_DOUBLE_EQ(quantile_sorted({7.0}, 0.3), 7.0);
}

TEST(Analysis, SummarizeColumns) {
  const ColumnSummary s = summarize_columns(rows({{1, 10}, {2, 10}, {3, 10}}));
  EXPECT_DOUBLE_EQ(s.mean[0], 2.0);
  EXPECT_DOUBLE_EQ(s.sd[0], 1.0);
  EXPECT_DOUBLE_EQ(s.sd[1], 0.0);
  EXPECT_DOUBLE_EQ(s.lo[0], 1.05);
  EXPECT_DOUBLE_EQ(s.hi[0], 2.95);
  EXPECT_THROW(summarize_columns(Matrix(0, 2)), InvalidArgument);
}

TEST(Analysis, ScaledL1Examples) {
  EXPECT_NEAR(scaled_l1(rows({{5}, {7}}), Vector::Constant(1, 6.0))[0], 1.0 / 6.0, 1e-15);
  const Vector truth = (Vector(3) << 8.0 / 3.0, 28.0, 10.0).finished();
  Matrix d(4, 3);
  for (int k = 0; k < 4; ++k) d.row(k) = 1.1 * truth.transpose();
  const Vector v = scaled_l1(d, truth);
  for (int c = 0; c < 3; ++c) EXPECT_NEAR(v[c], 0.1, 1e-12);
  EXPECT_EQ(mape(d, truth), v);
  EXPECT_THROW(scaled_l1(d, Vector::Zero(3)), InvalidArgument);
}

TEST(Analysis, ScaledL1Invariances) {
  CounterRng rng(derive_key(11, 0));
  Matrix d(50, 2);
  for (Eigen::Index i = 0; i < d.size(); ++i) d.data()[i] = 3.0 + rng.normal();
  const Vector truth = (Vector(2) << 2.5, -4.0).finished();
  const Vector base = scaled_l1(d, truth);
  // Common positive scaling of draws and truth leaves it unchanged.
  EXPECT_LT((scaled_l1(7.0 * d, 7.0 * truth) - base).cwiseAbs().maxCoeff(), 1e-12);
  // Row order does not matter.
  EXPECT_LT((scaled_l1(d.colwise().reverse(), truth) - base).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_TRUE((base.array() >= 0).all());
  // Perfect draws give zero.
  Matrix exact(3, 2);
  exact.rowwise() = truth.transpose();
  EXPECT_EQ(scaled_l1(exact, truth), Vector::Zero(2));
}

TEST(Analysis, SmaeExcludesZeroTruth) {
  const Trajectory truth = traj({0, 1, 2}, rows({{2, 0.0}, {4, 1.0}, {0.0, 2.0}}));
  const Trajectory pred = traj({0, 1, 2}, rows({{3, 0.5}, {4, 1.5}, {1.0, 2.0}}));
  const SmaeResult r = smae(pred, truth);
  EXPECT_EQ(r.rows, 3);
  // Column 0: |1|/2 + 0 over the 2 rows with nonzero truth; column 1: 0.5/1 + 0.
  EXPECT_NEAR(r.value[0], 0.25, 1e-15);
  EXPECT_NEAR(r.value[1], 0.25, 1e-15);
  EXPECT_EQ(r.excluded, (std::vector<long>{1, 1}));
  EXPECT_EQ(smae(truth, truth).value, Vector::Zero(2));
}

TEST(Analysis, SmaeGridMismatch) {
  const Trajectory a = traj({0, 1}, rows({{1}, {1}}));
  const Trajectory b = traj({0, 1.1}, rows({{1}, {1}}));
  EXPECT_THROW(smae(a, b), InvalidArgument);
}

TEST(Analysis, StabilityExamples) {
  // rho_critical(8/3, 10) = 24.7368...
  const double crit = rho_critical(8.0 / 3.0, 10.0);
  EXPECT_EQ(stability_probability(rows({{8.0 / 3.0, 6, 10}})), 1.0);
  EXPECT_EQ(stability_probability(rows({{8.0 / 3.0, 23, 10}})), 1.0);
  EXPECT_EQ(stability_probability(rows({{8.0 / 3.0, 28, 10}})), 0.0);
  EXPECT_EQ(stability_probability(rows({{8.0 / 3.0, crit, 10}})), 0.0);  // strict
  EXPECT_EQ(stability_probability(rows({{8.0 / 3.0, 6, 10}, {8.0 / 3.0, 28, 10}})), 0.5);
  // Non-positive denominator: stable only for rho < 1.
  EXPECT_EQ(stability_probability(rows({{3, 0.5, 2}, {3, 5, 2}})), 0.5);
  // Overriding sigma flips the verdict.
  EXPECT_EQ(stability_probability(rows({{8.0 / 3.0, 28, 10}}), 30.0), 1.0);
}

TEST(Analysis, StabilityInvariance) {
  CounterRng rng(derive_key(12, 0));
  Matrix d(200, 3);
  for (Eigen::Index i = 0; i < 200; ++i) d.row(i) << 2.0 + rng.uniform(), 30 * rng.uniform(), 8 + 4 * rng.uniform();
  const double p = stability_probability(d);
  EXPECT_GE(p, 0.0);
  EXPECT_LE(p, 1.0);
  EXPECT_EQ(stability_probability(d.colwise().reverse()), p);
  Matrix twice(400, 3);
  twice << d, d;
  EXPECT_EQ(stability_probability(twice), p);
}

TEST(Analysis, MakeReport) {
  const Vector truth = (Vector(3) << 8.0 / 3.0, 6.0, 10.0).finished();
  Matrix d(2, 3);
  d.row(0) = truth.transpose();
  d.row(1) = 1.2 * truth.transpose();
  const MetricReport r = make_report(d, truth);
  EXPECT_EQ(r.n_draws, 2);
  EXPECT_NEAR(r.scaled_l1[1], 0.1, 1e-12);
  EXPECT_EQ(r.stability_probability, 1.0);
  EXPECT_FALSE(r.smae);
}

TEST(Analysis, SmaeScaleInvariance) {
  CounterRng rng(derive_key(13, 0));
  Matrix t(30, 3), p(30, 3);
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    t.data()[i] = 5 * rng.normal();
    p.data()[i] = t.data()[i] + rng.normal();
  }
  t(4, 1) = 0.0;
  std::vector<double> times;
  for (int i = 0; i < 30; ++i) times.push_back(0.1 * i);
  const SmaeResult a = smae(traj(times, p), traj(times, t));
  const SmaeResult b = smae(traj(times, -3.0 * p), traj(times, -3.0 * t));
  EXPECT_LT((a.value - b.value).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(a.excluded, b.excluded);
  EXPECT_EQ(a.excluded[1], 1);
}

TEST(Analysis, SmaeConstantOffset) {
  Matrix t = Matrix::Constant(5, 1, 2.0);
  std::vector<double> times{0, 1, 2, 3, 4};
  EXPECT_NEAR(smae(traj(times, t.array() + 0.3), traj(times, t)).value[0], 0.15, 1e-15);
  EXPECT_NEAR(smae(traj(times, 1.1 * t), traj(times, t)).value[0], 0.1, 1e-15);
}
