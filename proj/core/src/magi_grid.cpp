#include "magidyn/magi_grid.hpp"

#include <cmath>

#include "magidyn/errors.hpp"

namespace magidyn {

namespace {

void require_increasing(const std::vector<double>& t, const char* what) {
  for (std::size_t i = 1; i < t.size(); ++i)
    if (!(t[i] > t[i - 1])) throw InvalidGrid(std::string(what) + " must be strictly increasing");
}

}  // namespace

DiscretizedGrid discretize(const std::vector<double>& tau_obs, int k) {
  if (k < 0) throw InvalidArgument("discretize: level must be >= 0");
  if (k > 20) throw InvalidArgument("discretize: level too large");
  if (tau_obs.size() < 2) throw InvalidGrid("discretize: need at least 2 observation times");
  require_increasing(tau_obs, "discretize: tau_obs");
  const double h = (tau_obs.back() - tau_obs.front()) / static_cast<double>(tau_obs.size() - 1);
  for (std::size_t i = 1; i < tau_obs.size(); ++i)
    if (std::abs((tau_obs[i] - tau_obs[i - 1]) - h) > 1e-9 * h)
      throw InvalidGrid("discretize: observation times are not evenly spaced");

  const long per = 1L << k;
  DiscretizedGrid g;
  g.tau_obs = tau_obs;
  g.level = k;
  g.tau_inf.reserve((tau_obs.size() - 1) * static_cast<std::size_t>(per) + 1);
  for (std::size_t i = 0; i + 1 < tau_obs.size(); ++i) {
    g.obs_index.push_back(static_cast<long>(g.tau_inf.size()));
    g.tau_inf.push_back(tau_obs[i]);
    const double gap = tau_obs[i + 1] - tau_obs[i];
    for (long j = 1; j < per; ++j)
      g.tau_inf.push_back(tau_obs[i] + gap * static_cast<double>(j) / static_cast<double>(per));
  }
  g.obs_index.push_back(static_cast<long>(g.tau_inf.size()));
  g.tau_inf.push_back(tau_obs.back());
  return g;
}

DiscretizedGrid make_grid(const std::vector<double>& tau_obs, const std::vector<double>& tau_inf) {
  if (tau_inf.size() < 2) throw InvalidGrid("make_grid: need at least 2 inference times");
  require_increasing(tau_obs, "make_grid: tau_obs");
  require_increasing(tau_inf, "make_grid: tau_inf");
  DiscretizedGrid g;
  g.tau_obs = tau_obs;
  g.tau_inf = tau_inf;
  g.level = -1;
  std::size_t j = 0;
  for (double t : tau_obs) {
    while (j < tau_inf.size() && tau_inf[j] < t - 1e-9) ++j;
    if (j == tau_inf.size() || std::abs(tau_inf[j] - t) > 1e-9)
      throw InvalidGrid("make_grid: observation time missing from the inference grid");
    g.obs_index.push_back(static_cast<long>(j));
  }
  return g;
}

}  // namespace magidyn
