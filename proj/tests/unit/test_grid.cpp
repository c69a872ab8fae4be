#include <gtest/gtest.h>

#include "magidyn/errors.hpp"
#include "magidyn/magi_grid.hpp"

using namespace magidyn;

namespace {
std::vector<double> obs_grid(int n, double dt) {
  std::vector<double> g;
  for (int i = 0; i < n; ++i) g.push_back(i * dt);
  return g;
}
}  // namespace

TEST(Discretize, Sizes) {
  EXPECT_EQ(discretize(obs_grid(3, 1.0), 1).tau_inf.size(), 5u);
  EXPECT_EQ(discretize(obs_grid(20, 0.1), 2).tau_inf.size(), 77u);
  const auto g = obs_grid(7, 0.25);
  EXPECT_EQ(discretize(g, 0).tau_inf, g);
}

TEST(Discretize, ObservationTimesEmbeddedVerbatim) {
  const auto g = obs_grid(11, 0.1);
  for (int k = 0; k <= 3; ++k) {
    const DiscretizedGrid d = discretize(g, k);
    ASSERT_EQ(d.obs_index.size(), g.size());
    for (std::size_t j = 0; j < g.size(); ++j) EXPECT_EQ(d.tau_inf[static_cast<std::size_t>(d.obs_index[j])], g[j]);
    EXPECT_EQ(d.tau_inf.size(), (g.size() - 1) * (1u << k) + 1);
  }
}

TEST(Discretize, NestedAcrossLevels) {
  const auto g = obs_grid(6, 0.2);
  for (int k = 0; k < 3; ++k) {
    const auto a = discretize(g, k).tau_inf, b = discretize(g, k + 1).tau_inf;
    for (double t : a)
      EXPECT_TRUE(std::any_of(b.begin(), b.end(), [&](double s) { return std::abs(s - t) < 1e-12; }));
    EXPECT_GT(b.size(), a.size());
  }
}

TEST(Discretize, Errors) {
  EXPECT_THROW(discretize({0.0}, 1), InvalidGrid);
  EXPECT_THROW(discretize({0.0, 0.1, 0.3}, 1), InvalidGrid);
  EXPECT_THROW(discretize({0.0, 0.2, 0.1}, 1), InvalidGrid);
  EXPECT_THROW(discretize(obs_grid(4, 0.1), -1), InvalidArgument);
}

TEST(MakeGrid, CustomGrid) {
  const DiscretizedGrid d = make_grid({0.0, 1.0}, {0.0, 0.5, 1.0, 1.25});
  EXPECT_EQ(d.level, -1);
  EXPECT_EQ(d.obs_index, (std::vector<long>{0, 2}));
  EXPECT_THROW(make_grid({0.0, 0.7}, {0.0, 0.5, 1.0}), InvalidGrid);
  EXPECT_THROW(make_grid({0.0}, {0.0, 0.5, 0.4}), InvalidGrid);
}
