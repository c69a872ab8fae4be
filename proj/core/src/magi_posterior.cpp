#include "magidyn/magi_posterior.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "magidyn/errors.hpp"
#include "magidyn/testbed.hpp"

namespace magidyn {

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Vector time_vector(const MagiModel& m) {
  return Eigen::Map<const Vector>(m.grid.tau_inf.data(), m.n_times());
}

Vector sigma_of(const MagiModel& m, const MagiState& s) {
  return m.sample_sigma ? Vector(s.log_sigma.array().exp()) : m.sigma_fixed;
}

void check_shapes(const MagiModel& m, const MagiState& s) {
  if (!m.system) throw InvalidArgument("magi model has no ODE system");
  if (s.X.rows() != m.n_times() || s.X.cols() != m.dim())
    throw InvalidArgument("magi state X has the wrong shape");
  if (s.theta.size() != m.n_params()) throw InvalidArgument("magi state theta has the wrong size");
  if (m.sample_sigma && s.log_sigma.size() != m.dim())
    throw InvalidArgument("magi state log sigma has the wrong size");
  if (static_cast<int>(m.bundles.size()) != m.dim())
    throw InvalidArgument("magi model needs one kernel bundle per component");
}

// Shared pieces of value and gradient.
struct Workspace {
  Matrix Xc;  // centered X
  Matrix F;   // f at every grid row
  Matrix R;   // f - m Xc per component
  Matrix V;   // K^-1 R per component
  Matrix P;   // C^-1 Xc per component
};

}  // namespace

ThetaPrior ThetaPrior::uniform(int p, double lo, double hi) {
  if (!(lo < hi)) throw InvalidArgument("ThetaPrior: lower bound must be below upper bound");
  return {Vector::Constant(p, lo), Vector::Constant(p, hi)};
}

bool ThetaPrior::contains(const Vector& theta) const {
  return (theta.array() >= lower.array()).all() && (theta.array() <= upper.array()).all();
}

Eigen::Index MagiModel::flat_size() const {
  return n_times() * dim() + n_params() + (sample_sigma ? dim() : 0);
}

Vector flatten(const MagiState& s) {
  Vector v(s.X.size() + s.theta.size() + s.log_sigma.size());
  v.head(s.X.size()) = Eigen::Map<const Vector>(s.X.data(), s.X.size());
  v.segment(s.X.size(), s.theta.size()) = s.theta;
  v.tail(s.log_sigma.size()) = s.log_sigma;
  return v;
}

MagiState unflatten(const MagiModel& m, const Vector& flat) {
  if (flat.size() != m.flat_size()) throw InvalidArgument("unflatten: wrong length");
  MagiState s;
  const Eigen::Index nx = m.n_times() * m.dim();
  s.X = Eigen::Map<const Matrix>(flat.data(), m.n_times(), m.dim());
  s.theta = flat.segment(nx, m.n_params());
  if (m.sample_sigma) s.log_sigma = flat.tail(m.dim());
  return s;
}

static double evaluate(const MagiModel& m, const MagiState& s, PosteriorTerms* terms,
                       Vector* grad) {
  check_shapes(m, s);
  const int d = m.dim();
  const Eigen::Index n = m.n_times();
  const Vector t = time_vector(m);
  const Vector sigma = sigma_of(m, s);

  PosteriorTerms pt;
  pt.theta_prior = m.prior.contains(s.theta) ? 0.0 : kNegInf;
  if (m.sample_sigma &&
      ((s.log_sigma.array() < kLogSigmaMin).any() || (s.log_sigma.array() > kLogSigmaMax).any()))
    pt.sigma_prior = kNegInf;

  Workspace w;
  w.Xc = s.X.rowwise() - m.mu.transpose();
  m.system->f_rows(s.X, t, s.theta, w.F);
  w.R.resize(n, d);
  w.V.resize(n, d);
  w.P.resize(n, d);
  Vector grad_log_sigma = Vector::Zero(d);
  Matrix gX = Matrix::Zero(n, d);

  for (int i = 0; i < d; ++i) {
    const KernelBundle& b = m.bundles[static_cast<std::size_t>(i)];
    w.P.col(i).noalias() = b.C_inv * w.Xc.col(i);
    pt.gp_prior += -0.5 * w.Xc.col(i).dot(w.P.col(i)) - 0.5 * b.logdet_C - 0.5 * n * kLog2Pi;

    w.R.col(i) = w.F.col(i);
    w.R.col(i).noalias() -= b.m * w.Xc.col(i);
    w.V.col(i).noalias() = b.K_inv * w.R.col(i);
    pt.manifold += -0.5 * w.R.col(i).dot(w.V.col(i)) - 0.5 * b.logdet_K - 0.5 * n * kLog2Pi;

    double ss = 0.0;
    long nobs = 0;
    for (std::size_t j = 0; j < m.grid.obs_index.size(); ++j) {
      const double yv = m.y(static_cast<Eigen::Index>(j), i);
      if (is_missing(yv)) continue;
      const Eigen::Index r = m.grid.obs_index[j];
      const double e = s.X(r, i) - yv;
      ss += e * e;
      ++nobs;
      if (grad) gX(r, i) -= e / (sigma[i] * sigma[i]);
    }
    pt.observation += -static_cast<double>(nobs) * std::log(sigma[i]) -
                      0.5 * ss / (sigma[i] * sigma[i]) - 0.5 * static_cast<double>(nobs) * kLog2Pi;
    if (grad && m.sample_sigma) grad_log_sigma[i] = -static_cast<double>(nobs) + ss / (sigma[i] * sigma[i]);
  }
  if (terms) *terms = pt;
  if (grad) {
    Matrix gF;
    Vector gtheta;
    m.system->vjp_rows(s.X, t, s.theta, w.V, gF, gtheta);
    gX -= w.P;
    gX -= gF;
    for (int i = 0; i < d; ++i)
      gX.col(i).noalias() += m.bundles[static_cast<std::size_t>(i)].m.transpose() * w.V.col(i);
    grad->resize(m.flat_size());
    grad->head(n * d) = Eigen::Map<const Vector>(gX.data(), n * d);
    grad->segment(n * d, m.n_params()) = -gtheta;
    if (m.sample_sigma) grad->tail(d) = grad_log_sigma;
  }
  return pt.total();
}

PosteriorTerms posterior_terms(const MagiModel& model, const MagiState& state) {
  PosteriorTerms t;
  evaluate(model, state, &t, nullptr);
  return t;
}

double log_posterior(const MagiModel& model, const MagiState& state) {
  return evaluate(model, state, nullptr, nullptr);
}

Vector grad_log_posterior(const MagiModel& model, const MagiState& state) {
  Vector g;
  evaluate(model, state, nullptr, &g);
  return g;
}

double log_posterior_flat(const MagiModel& model, const Vector& flat, Vector* grad) {
  return evaluate(model, unflatten(model, flat), nullptr, grad);
}

Matrix gauss_newton_hessian(const MagiModel& m, const Vector& flat) {
  const MagiState s = unflatten(m, flat);
  check_shapes(m, s);
  const int d = m.dim(), p = m.n_params();
  const Eigen::Index n = m.n_times();
  const Eigen::Index nx = n * d;
  const Eigen::Index nz = nx + p;  // the (X, theta) block
  const Vector sigma = sigma_of(m, s);
  const Vector t = time_vector(m);

  Matrix H = Matrix::Zero(m.flat_size(), m.flat_size());

  // GP prior and observation terms.
  for (int i = 0; i < d; ++i) {
    const KernelBundle& b = m.bundles[static_cast<std::size_t>(i)];
    H.block(i * n, i * n, n, n) += b.C_inv;
    long nobs = 0;
    for (std::size_t j = 0; j < m.grid.obs_index.size(); ++j) {
      if (is_missing(m.y(static_cast<Eigen::Index>(j), i))) continue;
      const Eigen::Index r = m.grid.obs_index[j];
      H(i * n + r, i * n + r) += 1.0 / (sigma[i] * sigma[i]);
      ++nobs;
    }
    if (m.sample_sigma) H(nz + i, nz + i) += 2.0 * static_cast<double>(std::max(nobs, 1L));
  }

  // Manifold term: residual r_i = f_i(X, theta) - m_i (x_i - mu_i), whitened by K_i.
  std::vector<Matrix> Jx(static_cast<std::size_t>(n)), Jt(static_cast<std::size_t>(n));
  for (Eigen::Index r = 0; r < n; ++r) {
    const Vector x = s.X.row(r).transpose();
    Jx[static_cast<std::size_t>(r)] = m.system->grad_x(x, t[r], s.theta);
    Jt[static_cast<std::size_t>(r)] = m.system->grad_theta(x, t[r], s.theta);
  }
  Matrix A(n, nz);
  for (int i = 0; i < d; ++i) {
    const KernelBundle& b = m.bundles[static_cast<std::size_t>(i)];
    A.setZero();
    A.block(0, i * n, n, n) = -b.m;
    for (Eigen::Index r = 0; r < n; ++r) {
      const Matrix& jx = Jx[static_cast<std::size_t>(r)];
      const Matrix& jt = Jt[static_cast<std::size_t>(r)];
      for (int j = 0; j < d; ++j) A(r, j * n + r) += jx(i, j);
      for (int k = 0; k < p; ++k) A(r, nx + k) = jt(i, k);
    }
    b.K_chol.triangularView<Eigen::Lower>().solveInPlace(A);
    H.topLeftCorner(nz, nz).selfadjointView<Eigen::Lower>().rankUpdate(A.transpose());
  }
  H.topLeftCorner(nz, nz).triangularView<Eigen::StrictlyUpper>() =
      H.topLeftCorner(nz, nz).transpose();
  return H;
}

double manifold_discrepancy(const MagiModel& m, const MagiState& s) {
  check_shapes(m, s);
  Matrix F;
  m.system->f_rows(s.X, time_vector(m), s.theta, F);
  const Matrix Xc = s.X.rowwise() - m.mu.transpose();
  double worst = 0.0;
  for (int i = 0; i < m.dim(); ++i) {
    const Vector r = F.col(i) - m.bundles[static_cast<std::size_t>(i)].m * Xc.col(i);
    worst = std::max(worst, r.cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace magidyn
