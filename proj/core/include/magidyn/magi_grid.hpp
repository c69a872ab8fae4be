#pragma once

#include <vector>

namespace magidyn {

// Observation times embedded in a (usually denser) inference grid.
struct DiscretizedGrid {
  std::vector<double> tau_obs;
  std::vector<double> tau_inf;
  int level = 0;                  // refinement level, -1 for a custom grid
  std::vector<long> obs_index;    // tau_inf[obs_index[j]] == tau_obs[j]
};

// Inserts 2^k - 1 evenly spaced points into every gap of an evenly spaced
// tau_obs; k = 0 returns tau_obs. Observation times are copied verbatim into
// tau_inf. Throws InvalidGrid for fewer than 2 points, unsorted or unevenly
// spaced input (relative tolerance 1e-9), and InvalidArgument for k < 0.
DiscretizedGrid discretize(const std::vector<double>& tau_obs, int k);

// Wraps an arbitrary strictly increasing tau_inf; every tau_obs entry must
// appear in it (absolute tolerance 1e-9). Throws InvalidGrid otherwise.
DiscretizedGrid make_grid(const std::vector<double>& tau_obs, const std::vector<double>& tau_inf);

}  // namespace magidyn
