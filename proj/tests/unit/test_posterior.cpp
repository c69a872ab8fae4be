#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "../support/toy_systems.hpp"
#include "magidyn/integrator.hpp"
#include "magidyn/magi_solver.hpp"
#include "magidyn/rng.hpp"

using namespace magidyn;

namespace {

// Random small Lorenz instance with some missing observations.
struct Instance {
  MagiModel model;
  MagiState state;
};

Instance random_instance(std::uint64_t seed, bool sample_sigma, int n_obs = 5, int level = 1) {
  static LorenzSystem lorenz;
  CounterRng rng(derive_key(seed, 1));
  ObservationSet obs;
  for (int j = 0; j < n_obs; ++j) obs.times.push_back(0.1 * j);
  obs.values.resize(n_obs, 3);
  for (int j = 0; j < n_obs; ++j)
    for (int c = 0; c < 3; ++c) obs.values(j, c) = 5.0 * rng.normal() + (c == 2 ? 20.0 : 0.0);
  obs.values(1, 0) = kMissing;
  obs.values(n_obs - 1, 2) = kMissing;
  SolverSettings s;
  std::vector<KernelHyper> phi;
  for (int c = 0; c < 3; ++c) phi.push_back({std::exp(rng.normal()) * 20.0, 0.3 + rng.uniform()});
  s.phi = phi;
  s.sigma = Vector::Constant(3, 0.5);
  const DiscretizedGrid grid = discretize(obs.times, level);
  Instance in;
  in.model = build_model(obs, grid, lorenz, s);
  in.model.sample_sigma = sample_sigma;
  in.state.X.resize(static_cast<Eigen::Index>(grid.tau_inf.size()), 3);
  for (Eigen::Index r = 0; r < in.state.X.rows(); ++r)
    for (int c = 0; c < 3; ++c) in.state.X(r, c) = 5.0 * rng.normal() + (c == 2 ? 20.0 : 0.0);
  in.state.theta = Vector(3);
  in.state.theta << 2.0 + rng.uniform(), 20.0 + 10 * rng.uniform(), 8.0 + 4 * rng.uniform();
  if (sample_sigma) in.state.log_sigma = Vector::Constant(3, std::log(0.5)) + 0.3 * Vector::Random(3);
  return in;
}

}  // namespace

TEST(Posterior, FlattenRoundTrip) {
  const Instance in = random_instance(1, true);
  const Vector flat = flatten(in.state);
  EXPECT_EQ(flat.size(), in.model.flat_size());
  const MagiState back = unflatten(in.model, flat);
  EXPECT_EQ(back.X, in.state.X);
  EXPECT_EQ(back.theta, in.state.theta);
  EXPECT_EQ(back.log_sigma, in.state.log_sigma);
  // X column-major by component, then theta, then log sigma.
  EXPECT_EQ(flat[1], in.state.X(1, 0));
  EXPECT_EQ(flat[in.state.X.rows()], in.state.X(0, 1));
  EXPECT_EQ(flat[in.state.X.size()], in.state.theta[0]);
  EXPECT_EQ(flat[flat.size() - 1], in.state.log_sigma[2]);
}

TEST(Posterior, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Instance in = random_instance(seed, seed % 2 == 0, 3 + static_cast<int>(seed % 3), seed % 3 == 0 ? 2 : 1);
    ASSERT_LE(in.model.n_times(), 12);
    const Vector x = flatten(in.state);
    Vector g;
    log_posterior_flat(in.model, x, &g);
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      const double h = 1e-5 * std::max(1.0, std::abs(x[k]));
      Vector xp = x, xm = x;
      xp[k] += h;
      xm[k] -= h;
      const double fd = (log_posterior_flat(in.model, xp, nullptr) - log_posterior_flat(in.model, xm, nullptr)) / (2 * h);
      EXPECT_NEAR(g[k], fd, 1e-5 * std::max(std::abs(fd), 1.0)) << "seed " << seed << " coord " << k;
    }
  }
}

TEST(Posterior, DoublingSigmaWithZeroResiduals) {
  Instance in = random_instance(3, false);
  for (std::size_t j = 0; j < in.model.grid.obs_index.size(); ++j)
    for (int c = 0; c < 3; ++c)
      if (!is_missing(in.model.y(static_cast<Eigen::Index>(j), c)))
        in.state.X(in.model.grid.obs_index[j], c) = in.model.y(static_cast<Eigen::Index>(j), c);
  const double before = log_posterior(in.model, in.state);
  in.model.sigma_fixed[1] *= 2.0;
  const double after = log_posterior(in.model, in.state);
  long n1 = 0;
  for (Eigen::Index j = 0; j < in.model.y.rows(); ++j) n1 += !is_missing(in.model.y(j, 1));
  EXPECT_NEAR(after - before, -static_cast<double>(n1) * std::log(2.0), 1e-9);
}

TEST(Posterior, ObservationTermIsSumOfPointDensities) {
  const Instance in = random_instance(4, true);
  const PosteriorTerms t = posterior_terms(in.model, in.state);
  double expect = 0.0;
  for (std::size_t j = 0; j < in.model.grid.obs_index.size(); ++j)
    for (int c = 0; c < 3; ++c) {
      const double y = in.model.y(static_cast<Eigen::Index>(j), c);
      if (is_missing(y)) continue;
      const double s = std::exp(in.state.log_sigma[c]);
      const double e = in.state.X(in.model.grid.obs_index[j], c) - y;
      expect += -0.5 * std::log(2 * std::numbers::pi * s * s) - 0.5 * e * e / (s * s);
    }
  EXPECT_NEAR(t.observation, expect, 1e-12 * std::max(1.0, std::abs(expect)));
}

TEST(Posterior, UnobservedRowsHaveNoLikelihoodGradient) {
  Instance in = random_instance(5, false, 4, 2);
  const Vector g0 = grad_log_posterior(in.model, in.state);
  in.model.sigma_fixed *= 10.0;  // rescales only the likelihood part
  const Vector g1 = grad_log_posterior(in.model, in.state);
  const Eigen::Index n = in.model.n_times();
  std::vector<bool> observed(static_cast<std::size_t>(n), false);
  for (long r : in.model.grid.obs_index) observed[static_cast<std::size_t>(r)] = true;
  for (Eigen::Index r = 0; r < n; ++r) {
    if (observed[static_cast<std::size_t>(r)]) continue;
    for (int c = 0; c < 3; ++c) EXPECT_EQ(g0[c * n + r], g1[c * n + r]);
  }
}

TEST(Posterior, PriorSupport) {
  Instance in = random_instance(6, true);
  in.state.theta[1] = -1.0;
  EXPECT_EQ(log_posterior(in.model, in.state), -INFINITY);
  in = random_instance(6, true);
  in.state.log_sigma[0] = kLogSigmaMin - 1.0;
  EXPECT_EQ(log_posterior(in.model, in.state), -INFINITY);
}

TEST(Posterior, ManifoldResidualShrinksWithLevel) {
  // Exact solution of x' = -x on [0, 2] sampled at the grid.
  magidyn::testing::DecaySystem decay;
  std::vector<double> prev_norms;
  for (int k = 0; k <= 2; ++k) {
    ObservationSet obs;
    for (int j = 0; j < 11; ++j) obs.times.push_back(0.2 * j);
    obs.values.resize(11, 1);
    for (int j = 0; j < 11; ++j) obs.values(j, 0) = std::exp(-obs.times[j]);
    const DiscretizedGrid grid = discretize(obs.times, k);
    SolverSettings s;
    s.phi = std::vector<KernelHyper>{{1.0, 1.0}};
    s.sigma = Vector::Constant(1, 0.01);
    MagiModel m = build_model(obs, grid, decay, s);
    MagiState st;
    st.X.resize(static_cast<Eigen::Index>(grid.tau_inf.size()), 1);
    for (std::size_t r = 0; r < grid.tau_inf.size(); ++r) st.X(static_cast<Eigen::Index>(r), 0) = std::exp(-grid.tau_inf[r]);
    st.theta = Vector::Ones(1);
    prev_norms.push_back(manifold_discrepancy(m, st));
  }
  EXPECT_GT(prev_norms[0], prev_norms[1]);
  EXPECT_GT(prev_norms[1], prev_norms[2]);
}

TEST(Posterior, GaussNewtonHessianIsPositiveDefinite) {
  const Instance in = random_instance(8, true);
  const Matrix H = gauss_newton_hessian(in.model, flatten(in.state));
  EXPECT_LT((H - H.transpose()).cwiseAbs().maxCoeff(), 1e-8 * H.cwiseAbs().maxCoeff());
  Eigen::LLT<Matrix> llt(H);
  EXPECT_EQ(llt.info(), Eigen::Success);
}
