#include "magidyn/hmc.hpp"

#include <cmath>
#include <limits>

#include "magidyn/errors.hpp"
#include "magidyn/rng.hpp"

namespace magidyn {

namespace {

constexpr std::uint64_t kChainStream = 0x484D43;  // "HMC"

// Dual averaging constants (Hoffman & Gelman 2014).
constexpr double kGamma = 0.05;
constexpr double kT0 = 10.0;
constexpr double kKappa = 0.75;

// Leapfrog over a combined oracle; returns log p at the end point and leaves
// its gradient in g. g must hold the gradient at q on entry.
double leapfrog_combined(Vector& q, Vector& p, Vector& g, double eps, int L,
                         const LogDensityWithGrad& target, const MassMatrix& mass) {
  double lp = 0.0;
  for (int l = 0; l < L; ++l) {
    p.noalias() += 0.5 * eps * g;
    q.noalias() += eps * mass.apply_inverse(p);
    lp = target(q, &g);
    p.noalias() += 0.5 * eps * g;
    if (!q.allFinite() || !p.allFinite() || !g.allFinite())
      throw NonFiniteState("leapfrog: non-finite state");
  }
  return lp;
}

}  // namespace

MassMatrix MassMatrix::identity(Eigen::Index dim) { return diagonal(Vector::Ones(dim)); }

MassMatrix MassMatrix::diagonal(const Vector& diag) {
  if (diag.size() == 0 || !diag.allFinite() || (diag.array() <= 0.0).any())
    throw InvalidArgument("mass diagonal must be finite and > 0");
  MassMatrix m;
  m.diag_ = diag;
  return m;
}

MassMatrix MassMatrix::dense(const Matrix& M) {
  Eigen::LLT<Matrix> llt(0.5 * (M + M.transpose()));
  if (llt.info() != Eigen::Success) throw NotPositiveDefinite("dense mass matrix does not factor");
  MassMatrix m;
  m.dense_ = true;
  m.chol_ = llt.matrixL();
  m.diag_ = M.diagonal();
  return m;
}

Vector MassMatrix::apply_inverse(const Vector& p) const {
  if (!dense_) return p.cwiseQuotient(diag_);
  Vector x = chol_.triangularView<Eigen::Lower>().solve(p);
  chol_.transpose().triangularView<Eigen::Upper>().solveInPlace(x);
  return x;
}

double MassMatrix::kinetic(const Vector& p) const {
  if (!dense_) return 0.5 * p.cwiseAbs2().cwiseQuotient(diag_).sum();
  const Vector w = chol_.triangularView<Eigen::Lower>().solve(p);
  return 0.5 * w.squaredNorm();
}

Vector MassMatrix::scale_normal(const Vector& z) const {
  if (!dense_) return z.cwiseProduct(diag_.cwiseSqrt());
  return chol_.triangularView<Eigen::Lower>() * z;
}

long kept_count(long n_steps, double burn_in_ratio) {
  const long burn = static_cast<long>(std::ceil(burn_in_ratio * static_cast<double>(n_steps) - 1e-9));
  return n_steps - std::max(0L, burn);
}

void leapfrog(Vector& q, Vector& p, double eps, int L, const GradLogDensity& grad,
              const MassMatrix& mass) {
  const MassMatrix m = mass.dim() == 0 ? MassMatrix::identity(q.size()) : mass;
  Vector g = grad(q);
  if (!g.allFinite()) throw NonFiniteState("leapfrog: non-finite gradient");
  for (int l = 0; l < L; ++l) {
    p.noalias() += 0.5 * eps * g;
    q.noalias() += eps * m.apply_inverse(p);
    g = grad(q);
    p.noalias() += 0.5 * eps * g;
    if (!q.allFinite() || !p.allFinite() || !g.allFinite())
      throw NonFiniteState("leapfrog: non-finite state");
  }
}

ChainOutput hmc_sample(const LogDensity& logp, const GradLogDensity& grad, const Vector& init,
                       const HmcSettings& settings) {
  LogDensityWithGrad target = [&](const Vector& x, Vector* g) {
    if (g) *g = grad(x);
    return logp(x);
  };
  return hmc_sample(target, init, settings);
}

ChainOutput hmc_sample(const LogDensityWithGrad& target, const Vector& init,
                       const HmcSettings& s) {
  if (s.n_steps < 1) throw InvalidArgument("hmc: n_steps must be >= 1");
  if (!(s.burn_in_ratio >= 0.0 && s.burn_in_ratio < 1.0))
    throw InvalidArgument("hmc: burn_in_ratio must lie in [0, 1)");
  if (s.leapfrog_steps < 1) throw InvalidArgument("hmc: leapfrog_steps must be >= 1");
  if (!(s.step_size > 0.0) || !std::isfinite(s.step_size))
    throw InvalidArgument("hmc: step size must be > 0");
  if (!(s.target_accept > 0.0 && s.target_accept < 1.0))
    throw InvalidArgument("hmc: target_accept must lie in (0, 1)");
  if (!(s.step_jitter >= 0.0 && s.step_jitter < 1.0))
    throw InvalidArgument("hmc: step_jitter must lie in [0, 1)");
  const Eigen::Index dim = init.size();
  const MassMatrix mass = s.mass.dim() == 0 ? MassMatrix::identity(dim) : s.mass;
  if (mass.dim() != dim) throw InvalidArgument("hmc: mass matrix has wrong dimension");

  Vector q = init;
  Vector g(dim);
  double lp = target(q, &g);
  if (!std::isfinite(lp) || !g.allFinite())
    throw InvalidArgument("hmc: log density or gradient not finite at the initial point");

  const long n_kept = kept_count(s.n_steps, s.burn_in_ratio);
  const long n_burn = s.n_steps - n_kept;

  ChainOutput out;
  out.n_burn_in = n_burn;
  out.samples.resize(n_kept, dim);
  out.sample_logp.resize(n_kept);

  CounterRng rng(derive_key(s.seed, kChainStream));
  double eps = s.step_size;
  const double mu = std::log(10.0 * s.step_size);
  double h_bar = 0.0, log_eps_bar = 0.0;
  double acc_burn = 0.0, acc_main = 0.0;
  long row = 0;

  auto record = [&](long state_index) {
    if (state_index >= n_burn) {
      out.samples.row(row) = q.transpose();
      out.sample_logp[row] = lp;
      ++row;
    }
  };
  record(0);

  Vector qn(dim), pn(dim), gn(dim), z(dim);
  for (long it = 1; it < s.n_steps; ++it) {
    for (Eigen::Index k = 0; k < dim; ++k) z[k] = rng.normal();
    const Vector p0 = mass.scale_normal(z);
    const double h0 = -lp + mass.kinetic(p0);
    // No draw when jitter is off, so the stream matches the unjittered chain.
    const double eps_it = s.step_jitter > 0.0 ? eps * (1.0 + s.step_jitter * (2.0 * rng.uniform() - 1.0)) : eps;
    qn = q;
    pn = p0;
    gn = g;
    double accept_prob = 0.0;
    double lpn = -std::numeric_limits<double>::infinity();
    bool divergent = false;
    try {
      lpn = leapfrog_combined(qn, pn, gn, eps_it, s.leapfrog_steps, target, mass);
      const double h1 = -lpn + mass.kinetic(pn);
      if (!std::isfinite(h1)) {
        divergent = true;
      } else {
        accept_prob = std::min(1.0, std::exp(h0 - h1));
      }
    } catch (const NonFiniteState&) {
      divergent = true;
    }
    if (divergent) ++out.divergences;
    const double u = rng.uniform();
    const bool accepted = !divergent && u < accept_prob;
    if (accepted) {
      q.swap(qn);
      g.swap(gn);
      lp = lpn;
    }

    const bool in_burn = it < n_burn;
    if (in_burn) {
      acc_burn += accepted ? 1.0 : 0.0;
      if (s.adapt_step_size) {
        const double m = static_cast<double>(it);
        h_bar = (1.0 - 1.0 / (m + kT0)) * h_bar + (s.target_accept - accept_prob) / (m + kT0);
        const double log_eps = mu - std::sqrt(m) / kGamma * h_bar;
        const double w = std::pow(m, -kKappa);
        log_eps_bar = w * log_eps + (1.0 - w) * log_eps_bar;
        eps = std::exp(log_eps);
        if (it + 1 == n_burn) eps = std::exp(log_eps_bar);
      }
    } else {
      acc_main += accepted ? 1.0 : 0.0;
    }
    record(it);
  }

  const long n_burn_transitions = std::max(0L, n_burn - 1);
  const long n_main_transitions = (s.n_steps - 1) - n_burn_transitions;
  out.burn_in_accept_rate = n_burn_transitions > 0 ? acc_burn / n_burn_transitions : 0.0;
  out.accept_rate = n_main_transitions > 0 ? acc_main / n_main_transitions : out.burn_in_accept_rate;
  out.final_step_size = eps;
  return out;
}

}  // namespace magidyn
