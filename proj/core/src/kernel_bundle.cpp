#include "magidyn/kernel_bundle.hpp"

#include <cmath>
#include <limits>

#include "magidyn/errors.hpp"

namespace magidyn {

namespace {

bool evenly_spaced(const std::vector<double>& t) {
  if (t.size() < 3) return true;
  const double h = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
  for (std::size_t i = 1; i < t.size(); ++i)
    if (std::abs((t[i] - t[i - 1]) - h) > 1e-9 * std::abs(h)) return false;
  return true;
}

// Calls fn(i, j, lag) for the lower triangle including the diagonal; on an
// even grid the value for each lag is computed once and copied.
template <class Eval, class Store>
void fill_by_lag(const std::vector<double>& t, Eval eval, Store store) {
  const auto n = static_cast<Eigen::Index>(t.size());
  if (evenly_spaced(t)) {
    const double h = n > 1 ? (t.back() - t.front()) / static_cast<double>(n - 1) : 0.0;
    for (Eigen::Index lag = 0; lag < n; ++lag) {
      const auto v = eval(static_cast<double>(lag) * h);
      for (Eigen::Index j = 0; j + lag < n; ++j) store(j + lag, j, v);
    }
  } else {
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j <= i; ++j) store(i, j, eval(t[i] - t[j]));
  }
}

void check_grid(const std::vector<double>& grid) {
  if (grid.size() < 2) throw InvalidGrid("kernel grid needs at least 2 points");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw InvalidGrid("kernel grid must be strictly increasing");
}

}  // namespace

Matrix JitteredCholesky::inverse() const {
  const auto n = L.rows();
  Matrix inv = Matrix::Identity(n, n);
  L.triangularView<Eigen::Lower>().solveInPlace(inv);
  L.transpose().triangularView<Eigen::Upper>().solveInPlace(inv);
  return 0.5 * (inv + inv.transpose());
}

Vector JitteredCholesky::solve(const Vector& b) const {
  Vector x = L.triangularView<Eigen::Lower>().solve(b);
  L.transpose().triangularView<Eigen::Upper>().solveInPlace(x);
  return x;
}

JitteredCholesky jittered_cholesky(const Matrix& A) {
  const auto n = A.rows();
  if (n == 0 || A.cols() != n) throw InvalidArgument("jittered_cholesky: need a square matrix");
  const double maxdiag = A.diagonal().maxCoeff();
  if (!(maxdiag > 0.0) || !A.allFinite())
    throw NotPositiveDefinite("matrix has no positive diagonal or is not finite");
  const double floor = static_cast<double>(n) * std::numeric_limits<double>::epsilon();
  for (double rung : kJitterLadder) {
    const double jitter = rung * maxdiag;
    Matrix Aj = A;
    Aj.diagonal().array() += jitter;
    Eigen::LLT<Matrix> llt(Aj);
    if (llt.info() != Eigen::Success) continue;
    Matrix L = llt.matrixL();
    const auto diag = L.diagonal().array();
    if (!diag.allFinite() || (diag.square() <= floor * (maxdiag + jitter)).any()) continue;
    JitteredCholesky out;
    out.logdet = 2.0 * diag.log().sum();
    out.L = std::move(L);
    out.jitter = jitter;
    out.jitter_ratio = rung;
    return out;
  }
  throw NotPositiveDefinite("jitter ladder exhausted (largest rung 1e-6 * max diag)");
}

Matrix matern_cov(const std::vector<double>& t, const KernelHyper& h) {
  validate(h);
  const auto n = static_cast<Eigen::Index>(t.size());
  Matrix C(n, n);
  fill_by_lag(t, [&](double d) { return matern_k(d, h); },
              [&](Eigen::Index i, Eigen::Index j, double v) { C(i, j) = C(j, i) = v; });
  return C;
}

KernelBundle build_bundle(const std::vector<double>& grid, const KernelHyper& h) {
  check_grid(grid);
  validate(h);
  const auto n = static_cast<Eigen::Index>(grid.size());
  KernelBundle b;
  b.grid = grid;
  b.hyper = h;
  b.C.resize(n, n);
  b.dC.resize(n, n);
  b.ddC.resize(n, n);
  fill_by_lag(grid, [&](double d) { return matern_derivatives(d, h); },
              [&](Eigen::Index i, Eigen::Index j, const MaternDerivs& v) {
                // lag t_i - t_j >= 0 for the lower triangle; dk/ds is odd in the lag
                b.C(i, j) = b.C(j, i) = v.value;
                b.dC(i, j) = v.d_ds;
                b.dC(j, i) = -v.d_ds;
                b.ddC(i, j) = b.ddC(j, i) = v.d2_dsdt;
              });

  JitteredCholesky fc = jittered_cholesky(b.C);
  b.C_inv = fc.inverse();
  b.C_chol = std::move(fc.L);
  b.jitter_C = fc.jitter;
  b.jitter_ratio_C = fc.jitter_ratio;
  b.logdet_C = fc.logdet;

  b.m = b.dC * b.C_inv;
  b.K = b.ddC - b.m * b.dC.transpose();
  b.K = 0.5 * (b.K + b.K.transpose());

  JitteredCholesky fk = jittered_cholesky(b.K);
  b.K_inv = fk.inverse();
  b.K_chol = std::move(fk.L);
  b.jitter_K = fk.jitter;
  b.jitter_ratio_K = fk.jitter_ratio;
  b.logdet_K = fk.logdet;
  return b;
}

}  // namespace magidyn
