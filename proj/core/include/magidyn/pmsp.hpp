#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "magidyn/magi_solver.hpp"
#include "magidyn/pmagi.hpp"

namespace magidyn {

// Where kernel hyperparameters come from during sequential prediction.
//   NP   no pilot; every step fits (phi, sigma) itself
//   LP   pilot on the left end of the data, once
//   RP   pilot on the right end of the data, once
//   LOP  LP, then phi re-fitted after every step on the newest window
//   ROP  RP, then phi re-fitted after every step on the newest window
enum class PilotMode { NP, LP, RP, LOP, ROP };

std::string to_string(PilotMode m);
PilotMode pilot_mode_from_string(const std::string& s);

struct PmspSettings {
  double dt_pred = 0.5;
  double dt_step = 0.5;
  PilotMode mode = PilotMode::ROP;
  int level = 0;               // discretization of the observation window
  long n_hmc_init = 16001;     // first step
  long n_hmc_peak = 16001;     // last step; earlier steps scale down
  double pred_density = 40.0;  // prediction grid points per unit time
  double burn_in_first = 0.5;
  double burn_in_later = 0.2;
  long n_hmc_pilot = 4001;     // first pilot
  long n_hmc_repilot = 101;    // later online pilots
  SolverSettings solver;       // seed, prior, HMC tuning; n_hmc and warm starts are overridden
};

// Per-step record. Summaries rather than raw draws keep memory flat.
struct PmspCheckpoint {
  int step = 0;
  double t_end = 0.0;
  std::vector<double> grid;
  long n_hmc = 0;
  double burn_in_ratio = 0.0;
  Matrix x_mean, x_sd, x_lo, x_hi;  // |grid| x d; lo/hi are 2.5% / 97.5%
  Vector theta_mean, theta_sd, theta_lo, theta_hi;
  std::vector<KernelHyper> phi;
  Vector sigma;
  double accept_rate = 0.0;
  long divergences = 0;
  Matrix x_init;               // the warm start handed to the solver (empty at step 1)
  Vector theta_init;
  bool ewsi_fallback = false;  // forward integration failed; constant extension used
  Matrix last_x;               // final draw, used to warm-start the next step
  Vector last_theta;
};

struct PmspResult {
  PosteriorSamples final;
  std::vector<PmspCheckpoint> checkpoints;
  std::vector<double> tau_add;
};

// ceil(dt_pred / dt_step), robust to rounding in the ratio.
int pmsp_step_count(double dt_pred, double dt_step);

// HMC budget of step n (1-based): n_init at step 1, else
// round(t_step_end / t_pred * n_peak).
long pmsp_hmc_budget(int step, double t_step_end, double t_pred, long n_init, long n_peak);

// Pilot window for the given step. Step 1: LP/LOP [0, min(1, T_max)],
// RP/ROP [max(0, T_max - 1), T_max]. Later steps with LOP/ROP:
// [prev_end - dt_step, prev_end]. Otherwise (including NP) an empty
// optional signals no re-estimation.
std::optional<std::pair<double, double>> select_pilot_window(PilotMode mode, int step,
                                                             double t_max, double dt_step,
                                                             double prev_grid_end);

// Forward integration from last_state at t_start onto `times` (all > t_start)
// with the warm-start tolerances. On integrator failure the last state is
// repeated and *fallback is set.
Trajectory ewsi_out_of_sample(const OdeSystem& system, const Vector& last_state,
                              const Vector& last_theta, double t_start,
                              const std::vector<double>& times, bool* fallback = nullptr);

// Sequential prediction over (T_max, T_max + dt_pred]. `on_checkpoint` is
// called after every finished step, so a failure in a later step leaves the
// earlier checkpoints with the caller.
PmspResult pmsp(const ObservationSet& obs, double t_max, const OdeSystem& system,
                const PmspSettings& settings,
                const std::function<void(const PmspCheckpoint&)>& on_checkpoint = {});

}  // namespace magidyn
