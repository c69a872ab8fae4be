#include "magidyn/pmsp.hpp"

#include <algorithm>
#include <cmath>

#include "magidyn/analysis.hpp"
#include "magidyn/errors.hpp"
#include "magidyn/integrator.hpp"
#include "magidyn/rng.hpp"

namespace magidyn {

namespace {

constexpr std::uint64_t kPilotStream = 0x50494C4F54;      // "PILOT"
constexpr std::uint64_t kRepilotStream = 0x5245504C00;    // "REPL" + step
constexpr std::uint64_t kStepStream = 0x5354455000;       // "STEP" + step
constexpr double kTimeTol = 1e-9;

void validate(const PmspSettings& s, double t_max) {
  if (!(s.dt_pred > 0.0) || !std::isfinite(s.dt_pred))
    throw InvalidArgument("pmsp: prediction horizon must be positive");
  if (!(s.dt_step > 0.0) || s.dt_step > s.dt_pred + kTimeTol)
    throw InvalidArgument("pmsp: step must lie in (0, horizon]");
  if (s.n_hmc_init < 1 || s.n_hmc_peak < 1 || s.n_hmc_pilot < 1 || s.n_hmc_repilot < 1)
    throw InvalidArgument("pmsp: HMC budgets must be >= 1");
  if (s.level < 0) throw InvalidArgument("pmsp: discretization level must be >= 0");
  if (!(s.pred_density > 0.0)) throw InvalidArgument("pmsp: prediction density must be positive");
  if (!(t_max > 0.0)) throw InvalidArgument("pmsp: T_max must be positive");
}

// Observation set extended by all-missing rows at the given times.
ObservationSet append_missing(const ObservationSet& obs, const std::vector<double>& extra) {
  ObservationSet out;
  out.meta = obs.meta;
  out.times = obs.times;
  out.times.insert(out.times.end(), extra.begin(), extra.end());
  out.values = Matrix::Constant(static_cast<Eigen::Index>(out.times.size()), obs.dim(), kMissing);
  out.values.topRows(obs.size()) = obs.values;
  return out;
}

std::vector<double> upto(const std::vector<double>& v, double t_end) {
  std::vector<double> out;
  for (double t : v)
    if (t <= t_end + kTimeTol) out.push_back(t);
  return out;
}

PmspCheckpoint make_checkpoint(int step, double t_end, const PosteriorSamples& ps, long n_hmc,
                               double burn_in) {
  PmspCheckpoint c;
  c.step = step;
  c.t_end = t_end;
  c.grid = ps.grid.tau_inf;
  c.n_hmc = n_hmc;
  c.burn_in_ratio = burn_in;
  c.phi = ps.phi;
  c.sigma = ps.sigma_sampled && ps.n_draws() > 0 ? ps.sigma_mean() : ps.sigma;
  c.accept_rate = ps.accept_rate;
  c.divergences = ps.divergences;
  if (ps.n_draws() > 0) {
    const PosteriorSummary s = summarize(ps);
    c.x_mean = s.x_mean;
    c.x_sd = s.x_sd;
    c.x_lo = s.x_lo;
    c.x_hi = s.x_hi;
    c.theta_mean = s.theta.mean;
    c.theta_sd = s.theta.sd;
    c.theta_lo = s.theta.lo;
    c.theta_hi = s.theta.hi;
  }
  const MagiState last = ps.last_state();
  c.last_x = last.X;
  c.last_theta = last.theta;
  return c;
}

}  // namespace

std::string to_string(PilotMode m) {
  switch (m) {
    case PilotMode::NP: return "NP";
    case PilotMode::LP: return "LP";
    case PilotMode::RP: return "RP";
    case PilotMode::LOP: return "LOP";
    case PilotMode::ROP: return "ROP";
  }
  return "?";
}

PilotMode pilot_mode_from_string(const std::string& s) {
  for (PilotMode m : {PilotMode::NP, PilotMode::LP, PilotMode::RP, PilotMode::LOP, PilotMode::ROP})
    if (to_string(m) == s) return m;
  throw InvalidArgument("unknown pilot mode '" + s + "' (expected NP, LP, RP, LOP or ROP)");
}

int pmsp_step_count(double dt_pred, double dt_step) {
  if (!(dt_pred > 0.0) || !(dt_step > 0.0)) throw InvalidArgument("pmsp_step_count: bad durations");
  const double r = dt_pred / dt_step;
  const double n = std::ceil(r - 1e-9);
  return std::max(1, static_cast<int>(n));
}

long pmsp_hmc_budget(int step, double t_step_end, double t_pred, long n_init, long n_peak) {
  if (step <= 1) return n_init;
  const double v = t_step_end / t_pred * static_cast<double>(n_peak);
  return std::max(1L, static_cast<long>(std::floor(v + 0.5)));
}

std::optional<std::pair<double, double>> select_pilot_window(PilotMode mode, int step,
                                                             double t_max, double dt_step,
                                                             double prev_grid_end) {
  if (mode == PilotMode::NP) return std::nullopt;
  const bool left = mode == PilotMode::LP || mode == PilotMode::LOP;
  if (step <= 1) {
    if (left) return std::make_pair(0.0, std::min(1.0, t_max));
    return std::make_pair(std::max(0.0, t_max - 1.0), t_max);
  }
  if (mode == PilotMode::LOP || mode == PilotMode::ROP)
    return std::make_pair(prev_grid_end - dt_step, prev_grid_end);
  return std::nullopt;
}

Trajectory ewsi_out_of_sample(const OdeSystem& system, const Vector& last_state,
                              const Vector& last_theta, double t_start,
                              const std::vector<double>& times, bool* fallback) {
  if (fallback) *fallback = false;
  Trajectory out;
  out.times = times;
  if (times.empty()) {
    out.values.resize(0, system.dim());
    return out;
  }
  if (!last_state.allFinite() || !last_theta.allFinite())
    throw InvalidArgument("ewsi: non-finite warm-start state");
  std::vector<double> grid{t_start};
  grid.insert(grid.end(), times.begin(), times.end());
  IntegratorOptions opt = warm_start_tolerances();
  opt.max_attempts = 1'000'000;
  try {
    const Trajectory tr = integrate(system, last_state, last_theta, grid, opt);
    if (tr.values.allFinite()) {
      out.values = tr.values.bottomRows(static_cast<Eigen::Index>(times.size()));
      return out;
    }
  } catch (const StepSizeUnderflow&) {
  } catch (const NonFiniteState&) {
  }
  if (fallback) *fallback = true;
  out.values = last_state.transpose().replicate(static_cast<Eigen::Index>(times.size()), 1);
  return out;
}

PmspResult pmsp(const ObservationSet& obs, double t_max, const OdeSystem& system,
                const PmspSettings& settings,
                const std::function<void(const PmspCheckpoint&)>& on_checkpoint) {
  validate(settings, t_max);
  if (obs.size() < 2) throw InvalidArgument("pmsp: need at least 2 observation rows");
  if (obs.times.back() >= t_max + kTimeTol)
    throw InvalidArgument("pmsp: observations extend past T_max");

  const double n_add_f = settings.pred_density * settings.dt_pred;
  const long n_add = std::lround(n_add_f);
  if (std::abs(n_add_f - static_cast<double>(n_add)) > 1e-6 || n_add < 1)
    throw InvalidGrid("pmsp: prediction density times horizon must be a positive integer");

  PmspResult result;
  for (long j = 1; j <= n_add; ++j)
    result.tau_add.push_back(t_max + static_cast<double>(j) / settings.pred_density);
  const double t_pred = t_max + settings.dt_pred;
  const int n_steps = pmsp_step_count(settings.dt_pred, settings.dt_step);
  const DiscretizedGrid in_sample = discretize(obs.times, settings.level);

  std::optional<std::vector<KernelHyper>> phi;
  std::optional<Vector> sigma;
  std::optional<Vector> theta_warm;

  // Step-1 pilot: fits phi and sigma on a one-unit window of the data.
  if (auto w = select_pilot_window(settings.mode, 1, t_max, settings.dt_step, 0.0)) {
    const ObservationSet head = restrict_to(obs, w->first, w->second);
    if (head.size() < 3) throw PilotTooShort("pmsp: fewer than 3 observations in the pilot window");
    SolverSettings ps = settings.solver;
    ps.n_hmc = settings.n_hmc_pilot;
    ps.burn_in_ratio = settings.burn_in_first;
    ps.seed = derive_key(settings.solver.seed, kPilotStream);
    ps.phi.reset();
    ps.sigma.reset();
    ps.x_init.reset();
    ps.theta_init.reset();
    const PosteriorSamples pilot = magi_solver(head, discretize(head.times, settings.level), system, ps);
    phi = pilot.phi;
    sigma = pilot.n_draws() > 0 ? pilot.sigma_mean() : pilot.sigma;
    theta_warm = pilot.n_draws() > 0 ? pilot.theta_mean() : pilot.start.theta;
  }

  std::optional<PmspCheckpoint> prev;
  for (int step = 1; step <= n_steps; ++step) {
    const double t_end = std::min(t_max + step * settings.dt_step, t_pred);
    const std::vector<double> add = upto(result.tau_add, t_end);
    const ObservationSet ext = append_missing(obs, add);
    std::vector<double> tau_inf = in_sample.tau_inf;
    tau_inf.insert(tau_inf.end(), add.begin(), add.end());
    const DiscretizedGrid grid = make_grid(ext.times, tau_inf);

    const long n_hmc = pmsp_hmc_budget(step, t_end, t_pred, settings.n_hmc_init, settings.n_hmc_peak);
    SolverSettings ss = settings.solver;
    ss.n_hmc = n_hmc;
    ss.burn_in_ratio = step == 1 ? settings.burn_in_first : settings.burn_in_later;
    ss.seed = derive_key(settings.solver.seed, kStepStream + static_cast<std::uint64_t>(step));
    ss.x_init.reset();
    ss.theta_init.reset();
    if (settings.mode == PilotMode::NP) {
      ss.phi.reset();
      ss.sigma.reset();
    } else {
      ss.phi = phi;
      ss.sigma = sigma;
    }

    bool fallback = false;
    Matrix x_init;
    Vector theta_init;
    if (prev) {
      // Exogenous warm start: the previous final draw in-sample, forward
      // integration from its last state beyond.
      const Eigen::Index n_prev = prev->last_x.rows();
      const std::vector<double> fresh(tau_inf.begin() + n_prev, tau_inf.end());
      const Vector last_state = prev->last_x.bottomRows(1).transpose();
      const Trajectory tail =
          ewsi_out_of_sample(system, last_state, prev->last_theta, prev->grid.back(), fresh, &fallback);
      x_init.resize(static_cast<Eigen::Index>(tau_inf.size()), system.dim());
      x_init.topRows(n_prev) = prev->last_x;
      x_init.bottomRows(tail.values.rows()) = tail.values;
      theta_init = prev->last_theta;
      ss.x_init = x_init;
      ss.theta_init = theta_init;

      // Online pilots refit phi on the newest window of the previous draw,
      // treated as noiseless, with sigma frozen.
      if (auto w = select_pilot_window(settings.mode, step, t_max, settings.dt_step, prev->grid.back())) {
        ObservationSet window;
        window.meta = obs.meta;
        std::vector<Eigen::Index> rows;
        for (std::size_t i = 0; i < prev->grid.size(); ++i)
          if (prev->grid[i] >= w->first - kTimeTol && prev->grid[i] <= w->second + kTimeTol)
            rows.push_back(static_cast<Eigen::Index>(i));
        window.values.resize(static_cast<Eigen::Index>(rows.size()), system.dim());
        for (std::size_t k = 0; k < rows.size(); ++k) {
          window.times.push_back(prev->grid[static_cast<std::size_t>(rows[k])]);
          window.values.row(static_cast<Eigen::Index>(k)) = prev->last_x.row(rows[k]);
        }
        SolverSettings rs = settings.solver;
        rs.n_hmc = settings.n_hmc_repilot;
        rs.burn_in_ratio = settings.burn_in_first;
        rs.seed = derive_key(settings.solver.seed, kRepilotStream + static_cast<std::uint64_t>(step));
        rs.phi.reset();
        rs.sigma = sigma;
        rs.x_init.reset();
        rs.theta_init = prev->last_theta;
        const PosteriorSamples re = magi_solver(window, make_grid(window.times, window.times), system, rs);
        phi = re.phi;
        ss.phi = phi;
      }
    } else if (theta_warm) {
      ss.theta_init = theta_warm;
    }

    PosteriorSamples ps = magi_solver(ext, grid, system, ss);
    PmspCheckpoint cp = make_checkpoint(step, t_end, ps, n_hmc, ss.burn_in_ratio);
    cp.x_init = x_init;
    cp.theta_init = theta_init;
    cp.ewsi_fallback = fallback;
    if (on_checkpoint) on_checkpoint(cp);
    result.checkpoints.push_back(cp);
    prev = std::move(cp);
    if (step == n_steps) result.final = std::move(ps);
  }
  return result;
}

}  // namespace magidyn
