#pragma once

#include <array>
#include <vector>

#include "magidyn/matern.hpp"
#include "magidyn/types.hpp"

namespace magidyn {

// Multiples of max(diag) tried in order until a factorization succeeds.
inline constexpr std::array<double, 5> kJitterLadder = {0.0, 1e-12, 1e-10, 1e-8, 1e-6};

// Cholesky factor of A + jitter*I for the smallest rung of kJitterLadder that
// factors. A rung counts as factored only if every pivot exceeds
// n * machine-epsilon * max(diag), so a factor that exists only through
// rounding is rejected and the next rung is tried.
struct JitteredCholesky {
  Matrix L;                   // lower triangular
  double jitter = 0.0;        // absolute amount added to the diagonal
  double jitter_ratio = 0.0;  // the ladder rung used (jitter / max diag)
  double logdet = 0.0;        // log det(A + jitter*I)

  Matrix inverse() const;
  Vector solve(const Vector& b) const;
};

// Throws NotPositiveDefinite when the ladder is exhausted.
JitteredCholesky jittered_cholesky(const Matrix& A);

// Kernel blocks of one component on an inference grid.
//   C   (i,j) = k(t_i, t_j)
//   dC  (i,j) = dk/ds (t_i, t_j)         covariance of X'(t_i) with X(t_j)
//   ddC (i,j) = d2k/dsdt (t_i, t_j)      covariance of X'(t_i) with X'(t_j)
//   m         = dC * C^-1                conditional mean map of X' given X
//   K         = ddC - m * dC^T           conditional covariance of X' given X
struct KernelBundle {
  std::vector<double> grid;
  KernelHyper hyper;
  Matrix C, dC, ddC;
  Matrix C_inv, C_chol;  // inverse and lower factor of C + jitter
  Matrix m;
  Matrix K;
  Matrix K_inv, K_chol;  // inverse and lower factor of K + jitter
  double jitter_C = 0.0, jitter_K = 0.0;            // absolute
  double jitter_ratio_C = 0.0, jitter_ratio_K = 0.0;  // ladder rungs
  double logdet_C = 0.0, logdet_K = 0.0;

  // The larger of the two rungs, as a single reproducibility record.
  double jitter_used() const { return std::max(jitter_ratio_C, jitter_ratio_K); }
  Eigen::Index size() const { return static_cast<Eigen::Index>(grid.size()); }
};

// Throws InvalidGrid unless the grid is strictly increasing with >= 2 points,
// InvalidArgument for bad hyperparameters, NotPositiveDefinite when either
// factorization exhausts the jitter ladder.
KernelBundle build_bundle(const std::vector<double>& grid, const KernelHyper& h);

// Value-only covariance matrix k(t_i, t_j); evenly spaced grids evaluate each
// lag once.
Matrix matern_cov(const std::vector<double>& times, const KernelHyper& h);

}  // namespace magidyn
