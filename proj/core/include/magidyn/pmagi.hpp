#pragma once

#include "magidyn/magi_solver.hpp"

namespace magidyn {

struct PilotSettings {
  double t_max_pilot = 1.0;  // 0 disables the pilot stage
  int d_pilot = 0;           // pilot discretization level
  long n_hmc_pilot = 4001;
  long n_hmc_main = 16001;
  int d_main = 0;            // main discretization level
};

// What the pilot stage produced.
struct PilotResult {
  bool ran = false;
  long n_obs = 0;
  std::vector<KernelHyper> phi;
  Vector sigma;       // posterior mean of the pilot's noise draws
  Vector theta_mean;  // warm start for the main stage
};

// Observations with t <= t_end (rows kept whole, times unchanged).
ObservationSet restrict_to(const ObservationSet& obs, double t_end);
// Observations with t_begin <= t <= t_end.
ObservationSet restrict_to(const ObservationSet& obs, double t_begin, double t_end);

// Two-stage MAGI: fit (phi, sigma) on the pilot prefix [0, t_max_pilot] with a
// short run, then sample the full interval with those values held fixed and
// theta warm-started from the pilot mean. t_max_pilot = 0 runs plain MAGI.
// Throws PilotTooShort when fewer than 3 observation rows fall in the pilot
// window. `solver` supplies everything else (seed, prior, HMC tuning); its
// n_hmc is ignored in favour of the pilot settings.
PosteriorSamples pmagi(const ObservationSet& obs, const OdeSystem& system,
                       const PilotSettings& pilot, const SolverSettings& solver,
                       PilotResult* pilot_out = nullptr);

// log2(40 / d_obs) for d_obs in {5, 10, 20, 40}; InvalidArgument otherwise.
int default_discretization(double d_obs);

}  // namespace magidyn
