#include "magidyn/magi_solver.hpp"

#include <cmath>
#include <limits>

#include "magidyn/errors.hpp"
#include "magidyn/gp_fit.hpp"
#include "magidyn/hmc.hpp"
#include "magidyn/rng.hpp"

namespace magidyn {

namespace {

constexpr std::uint64_t kSolverStream = 0x4D414749;  // "MAGI"

void check_inputs(const ObservationSet& obs, const DiscretizedGrid& grid, const OdeSystem& sys,
                  const SolverSettings& s) {
  if (obs.values.cols() != sys.dim())
    throw InvalidArgument("magi_solver: observation width differs from the system dimension");
  if (obs.times.size() != grid.tau_obs.size() || obs.values.rows() != obs.size())
    throw InvalidArgument("magi_solver: observations do not match the grid");
  for (std::size_t j = 0; j < obs.times.size(); ++j)
    if (std::abs(obs.times[j] - grid.tau_obs[j]) > 1e-9)
      throw InvalidArgument("magi_solver: observation times differ from grid.tau_obs");
  if (grid.obs_index.size() != grid.tau_obs.size())
    throw InvalidArgument("magi_solver: grid has no observation index");
  if (s.phi && !s.sigma)
    throw InvalidArgument("magi_solver: exogenous phi requires exogenous sigma");
  if (s.phi && static_cast<int>(s.phi->size()) != sys.dim())
    throw InvalidArgument("magi_solver: need one phi per component");
  if (s.sigma && (s.sigma->size() != sys.dim() || !(s.sigma->array() > 0.0).all() ||
                  !s.sigma->allFinite()))
    throw InvalidArgument("magi_solver: sigma must hold one positive value per component");
  const auto n = static_cast<Eigen::Index>(grid.tau_inf.size());
  if (s.x_init && (s.x_init->rows() != n || s.x_init->cols() != sys.dim()))
    throw InvalidArgument("magi_solver: x_init has the wrong shape");
  if (s.theta_init && s.theta_init->size() != sys.n_params())
    throw InvalidArgument("magi_solver: theta_init has the wrong size");
  if (s.n_hmc < 1) throw InvalidArgument("magi_solver: n_hmc must be >= 1");
}

// Damped Gauss-Newton (Levenberg-Marquardt) ascent of the log posterior.
int optimize_start(const MagiModel& model, Vector& z, int max_iter) {
  Vector g;
  double f = -log_posterior_flat(model, z, &g);
  if (!std::isfinite(f)) return 0;
  g = -g;
  double lambda = 1e-3;
  int it = 0;
  for (; it < max_iter; ++it) {
    const Matrix H = gauss_newton_hessian(model, z);
    const Vector hd = H.diagonal().cwiseMax(1e-12 * H.diagonal().maxCoeff());
    bool accepted = false;
    double f_new = f;
    Vector z_new;
    while (lambda < 1e12) {
      Matrix A = H;
      A.diagonal() += lambda * hd;
      Eigen::LLT<Matrix> llt(A);
      if (llt.info() != Eigen::Success) {
        lambda *= 10.0;
        continue;
      }
      z_new = z - llt.solve(g);
      Vector g_new;
      f_new = -log_posterior_flat(model, z_new, &g_new);
      if (std::isfinite(f_new) && f_new < f) {
        g = -g_new;
        accepted = true;
        lambda = std::max(lambda / 5.0, 1e-10);
        break;
      }
      lambda *= 5.0;
    }
    if (!accepted) break;
    const double gain = f - f_new;
    z = z_new;
    f = f_new;
    if (gain < 1e-10 * (1.0 + std::abs(f))) {
      ++it;
      break;
    }
  }
  return it;
}

MassMatrix choose_mass(const MagiModel& model, const Vector& z, Preconditioner pc) {
  if (pc == Preconditioner::Identity) return MassMatrix::identity(z.size());
  Matrix H = gauss_newton_hessian(model, z);
  const double scale = H.diagonal().maxCoeff();
  if (pc == Preconditioner::Diagonal)
    return MassMatrix::diagonal(H.diagonal().cwiseMax(1e-12 * scale));
  for (double ridge : {0.0, 1e-12, 1e-10, 1e-8, 1e-6}) {
    Matrix M = H;
    M.diagonal().array() += ridge * scale;
    try {
      return MassMatrix::dense(M);
    } catch (const NotPositiveDefinite&) {
    }
  }
  return MassMatrix::diagonal(H.diagonal().cwiseMax(1e-12 * scale));
}

}  // namespace

Matrix interpolate_observations(const ObservationSet& obs, const DiscretizedGrid& grid,
                                const Vector& fallback) {
  const auto n = static_cast<Eigen::Index>(grid.tau_inf.size());
  const int d = obs.dim();
  Matrix X(n, d);
  for (int i = 0; i < d; ++i) {
    std::vector<double> ts, vs;
    for (Eigen::Index j = 0; j < obs.size(); ++j) {
      if (is_missing(obs.values(j, i))) continue;
      ts.push_back(grid.tau_inf[static_cast<std::size_t>(grid.obs_index[static_cast<std::size_t>(j)])]);
      vs.push_back(obs.values(j, i));
    }
    if (ts.empty()) {
      X.col(i).setConstant(fallback[i]);
      continue;
    }
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < n; ++r) {
      const double t = grid.tau_inf[static_cast<std::size_t>(r)];
      if (t <= ts.front()) {
        X(r, i) = vs.front();
      } else if (t >= ts.back()) {
        X(r, i) = vs.back();
      } else {
        while (ts[k + 1] < t) ++k;
        const double w = (t - ts[k]) / (ts[k + 1] - ts[k]);
        X(r, i) = (1.0 - w) * vs[k] + w * vs[k + 1];
      }
    }
  }
  return X;
}

MagiModel build_model(const ObservationSet& obs, const DiscretizedGrid& grid,
                      const OdeSystem& sys, const SolverSettings& s,
                      std::vector<KernelHyper>* phi_out, Vector* sigma_out) {
  check_inputs(obs, grid, sys, s);
  const int d = sys.dim();
  MagiModel model;
  model.system = &sys;
  model.grid = grid;
  model.y = obs.values;
  model.prior = s.prior ? *s.prior : ThetaPrior::uniform(sys.n_params());
  if (model.prior.lower.size() != sys.n_params() || model.prior.upper.size() != sys.n_params())
    throw InvalidArgument("magi_solver: prior has the wrong dimension");
  model.mu = Vector::Zero(d);
  for (int i = 0; i < d; ++i) {
    double sum = 0.0;
    long cnt = 0;
    for (Eigen::Index j = 0; j < obs.size(); ++j)
      if (!is_missing(obs.values(j, i))) {
        sum += obs.values(j, i);
        ++cnt;
      }
    if (cnt > 0) model.mu[i] = sum / static_cast<double>(cnt);
  }

  std::vector<KernelHyper> phi(static_cast<std::size_t>(d));
  Vector sigma(d);
  for (int i = 0; i < d; ++i) {
    if (s.phi) {
      phi[static_cast<std::size_t>(i)] = (*s.phi)[static_cast<std::size_t>(i)];
      sigma[i] = (*s.sigma)[i];
      continue;
    }
    const Vector yi = obs.values.col(i);
    GpFit fit = s.sigma ? fit_phi(yi, obs.times, (*s.sigma)[i]) : fit_phi_sigma(yi, obs.times);
    phi[static_cast<std::size_t>(i)] = fit.hyper;
    sigma[i] = fit.sigma;
  }
  for (int i = 0; i < d; ++i)
    model.bundles.push_back(build_bundle(grid.tau_inf, phi[static_cast<std::size_t>(i)]));
  model.sample_sigma = !s.sigma.has_value();
  model.sigma_fixed = sigma;
  if (phi_out) *phi_out = phi;
  if (sigma_out) *sigma_out = sigma;
  return model;
}

PosteriorSamples magi_solver(const ObservationSet& obs, const DiscretizedGrid& grid,
                             const OdeSystem& sys, const SolverSettings& s) {
  PosteriorSamples out;
  MagiModel model = build_model(obs, grid, sys, s, &out.phi, &out.sigma);
  const int d = sys.dim(), p = sys.n_params();
  const Eigen::Index n = model.n_times();

  MagiState start;
  start.X = s.x_init ? *s.x_init : interpolate_observations(obs, grid, model.mu);
  start.theta = s.theta_init ? *s.theta_init : model.prior.median();
  if (model.sample_sigma)
    start.log_sigma = out.sigma.array().log().cwiseMax(kLogSigmaMin + 1e-9).cwiseMin(kLogSigmaMax - 1e-9);
  Vector z = flatten(start);
  if (!std::isfinite(log_posterior_flat(model, z, nullptr)))
    throw InvalidArgument("magi_solver: log posterior is not finite at the start point");

  if (s.optimize_start) {
    // Noise levels stay at their fitted values here: the joint density grows
    // without bound as a noise level shrinks toward its lower limit with X
    // interpolating the data, so a mode search must not move them.
    MagiModel fixed = model;
    fixed.sample_sigma = false;
    fixed.sigma_fixed = model.sample_sigma ? Vector(start.log_sigma.array().exp()) : model.sigma_fixed;
    const Eigen::Index nz = fixed.flat_size();
    Vector zf = z.head(nz);
    out.optimizer_iterations = optimize_start(fixed, zf, s.max_optimizer_iterations);
    z.head(nz) = zf;
  }

  HmcSettings hs;
  hs.n_steps = s.n_hmc;
  hs.burn_in_ratio = s.burn_in_ratio;
  hs.leapfrog_steps = s.leapfrog_steps;
  hs.step_size = s.initial_step_size;
  hs.target_accept = s.target_accept;
  hs.seed = derive_key(s.seed, kSolverStream);
  hs.mass = choose_mass(model, z, s.preconditioner);

  LogDensityWithGrad target = [&model](const Vector& x, Vector* g) {
    return log_posterior_flat(model, x, g);
  };
  ChainOutput chain = hmc_sample(target, z, hs);

  const long kept = chain.samples.rows();
  out.grid = grid;
  out.d = d;
  out.p = p;
  out.x_draws = chain.samples.leftCols(n * d);
  out.theta_draws = chain.samples.middleCols(n * d, p);
  if (model.sample_sigma)
    out.sigma_draws = chain.samples.rightCols(d).array().exp();
  else
    out.sigma_draws = out.sigma.transpose().replicate(kept, 1);
  out.logp = chain.sample_logp;
  out.sigma_sampled = model.sample_sigma;
  out.mu = model.mu;
  out.accept_rate = chain.accept_rate;
  out.burn_in_accept_rate = chain.burn_in_accept_rate;
  out.step_size = chain.final_step_size;
  out.divergences = chain.divergences;
  out.n_hmc = s.n_hmc;
  for (const KernelBundle& b : model.bundles) {
    out.jitter_C.push_back(b.jitter_ratio_C);
    out.jitter_K.push_back(b.jitter_ratio_K);
  }
  out.start = unflatten(model, z);
  return out;
}

Matrix PosteriorSamples::x_draw(long k) const {
  if (k < 0 || k >= n_draws()) throw InvalidArgument("x_draw: index out of range");
  const Vector row = x_draws.row(k).transpose();
  return Eigen::Map<const Matrix>(row.data(), n_times(), d);
}

Matrix PosteriorSamples::x_mean() const {
  if (n_draws() == 0) throw InvalidArgument("posterior has no draws");
  const Vector mean = x_draws.colwise().mean().transpose();
  return Eigen::Map<const Matrix>(mean.data(), n_times(), d);
}

Vector PosteriorSamples::theta_mean() const {
  if (n_draws() == 0) throw InvalidArgument("posterior has no draws");
  return theta_draws.colwise().mean().transpose();
}

Vector PosteriorSamples::sigma_mean() const {
  if (n_draws() == 0) throw InvalidArgument("posterior has no draws");
  return sigma_draws.colwise().mean().transpose();
}

MagiState PosteriorSamples::last_state() const {
  MagiState s;
  s.X = x_draw(n_draws() - 1);
  s.theta = theta_draws.bottomRows(1).transpose();
  if (sigma_sampled) s.log_sigma = sigma_draws.bottomRows(1).transpose().array().log();
  return s;
}

}  // namespace magidyn
