#include "magidyn/pmagi.hpp"

#include <cmath>
#include <limits>

#include "magidyn/errors.hpp"
#include "magidyn/rng.hpp"

namespace magidyn {

namespace {
constexpr std::uint64_t kPilotStream = 0x50494C4F54;  // "PILOT"
constexpr std::uint64_t kMainStream = 0x4D41494E;     // "MAIN"
}  // namespace

ObservationSet restrict_to(const ObservationSet& obs, double t_begin, double t_end) {
  ObservationSet out;
  out.meta = obs.meta;
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < obs.size(); ++i) {
    const double t = obs.times[static_cast<std::size_t>(i)];
    if (t >= t_begin - 1e-12 && t <= t_end + 1e-12) rows.push_back(i);
  }
  out.values.resize(static_cast<Eigen::Index>(rows.size()), obs.values.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out.times.push_back(obs.times[static_cast<std::size_t>(rows[k])]);
    out.values.row(static_cast<Eigen::Index>(k)) = obs.values.row(rows[k]);
  }
  return out;
}

ObservationSet restrict_to(const ObservationSet& obs, double t_end) {
  return restrict_to(obs, -std::numeric_limits<double>::infinity(), t_end);
}

int default_discretization(double d_obs) {
  if (d_obs == 5.0) return 3;
  if (d_obs == 10.0) return 2;
  if (d_obs == 20.0) return 1;
  if (d_obs == 40.0) return 0;
  throw InvalidArgument("default_discretization: d_obs must be one of 5, 10, 20, 40");
}

PosteriorSamples pmagi(const ObservationSet& obs, const OdeSystem& system,
                       const PilotSettings& pilot, const SolverSettings& solver,
                       PilotResult* pilot_out) {
  if (!(pilot.t_max_pilot >= 0.0)) throw InvalidArgument("pmagi: pilot length must be >= 0");
  if (pilot.d_pilot < 0 || pilot.d_main < 0) throw InvalidArgument("pmagi: levels must be >= 0");
  PilotResult pr;
  SolverSettings main = solver;
  main.n_hmc = pilot.n_hmc_main;
  main.seed = derive_key(solver.seed, kMainStream);

  if (pilot.t_max_pilot > 0.0) {
    const ObservationSet head = restrict_to(obs, pilot.t_max_pilot);
    if (head.size() < 3)
      throw PilotTooShort("pmagi: fewer than 3 observations in the pilot window");
    SolverSettings ps = solver;
    ps.n_hmc = pilot.n_hmc_pilot;
    ps.seed = derive_key(solver.seed, kPilotStream);
    ps.x_init.reset();
    const PosteriorSamples pilot_run =
        magi_solver(head, discretize(head.times, pilot.d_pilot), system, ps);
    pr.ran = true;
    pr.n_obs = head.size();
    pr.phi = pilot_run.phi;
    pr.sigma = pilot_run.n_draws() > 0 ? pilot_run.sigma_mean() : pilot_run.sigma;
    pr.theta_mean = pilot_run.n_draws() > 0 ? pilot_run.theta_mean() : pilot_run.start.theta;
    main.phi = pr.phi;
    main.sigma = pr.sigma;
    if (!main.theta_init) main.theta_init = pr.theta_mean;
  }
  if (pilot_out) *pilot_out = pr;
  return magi_solver(obs, discretize(obs.times, pilot.d_main), system, main);
}

}  // namespace magidyn
