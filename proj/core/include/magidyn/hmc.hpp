#pragma once

#include <cstdint>
#include <functional>

#include "magidyn/types.hpp"

namespace magidyn {

using LogDensity = std::function<double(const Vector&)>;
using GradLogDensity = std::function<Vector(const Vector&)>;
// Returns log p(x) and, when grad is non-null, writes its gradient.
using LogDensityWithGrad = std::function<double(const Vector& x, Vector* grad)>;

// Mass matrix for the kinetic energy 1/2 p^T M^-1 p. Either diagonal or
// dense (through its Cholesky factor). Default is the identity.
class MassMatrix {
 public:
  MassMatrix() = default;
  static MassMatrix identity(Eigen::Index dim);
  static MassMatrix diagonal(const Vector& diag);
  // Throws NotPositiveDefinite when M does not factor.
  static MassMatrix dense(const Matrix& M);

  bool is_dense() const { return dense_; }
  Eigen::Index dim() const { return dense_ ? chol_.rows() : diag_.size(); }
  const Vector& diag() const { return diag_; }

  Vector apply_inverse(const Vector& p) const;  // M^-1 p
  double kinetic(const Vector& p) const;        // 1/2 p^T M^-1 p
  Vector scale_normal(const Vector& z) const;   // a draw from N(0, M) given z ~ N(0, I)

 private:
  bool dense_ = false;
  Vector diag_;
  Matrix chol_;  // lower factor of the dense mass
};

struct HmcSettings {
  long n_steps = 16001;        // chain length N, initial state included
  double burn_in_ratio = 0.5;  // the first ceil(ratio * N) states are discarded
  int leapfrog_steps = 20;
  double step_size = 0.01;     // initial step size
  MassMatrix mass;             // empty means identity
  double target_accept = 0.75;
  bool adapt_step_size = true;  // dual averaging, burn-in only
  // Each trajectory uses eps * (1 + j*(2u - 1)), u uniform. A nonzero j
  // breaks up trajectories whose length nearly matches a period of the
  // target, which otherwise mix slowly. Must lie in [0, 1).
  double step_jitter = 0.0;
  std::uint64_t seed = 0;
};

struct ChainOutput {
  Matrix samples;       // kept states, one per row
  Vector sample_logp;   // log density of each kept state
  double accept_rate = 0.0;          // over post-burn-in transitions
  double burn_in_accept_rate = 0.0;  // over burn-in transitions
  double final_step_size = 0.0;
  long divergences = 0;  // proposals with a non-finite Hamiltonian
  long n_burn_in = 0;    // discarded states
};

// Number of states kept from a chain of n_steps: n_steps - ceil(ratio * n_steps).
long kept_count(long n_steps, double burn_in_ratio);

// One leapfrog trajectory of L steps. Writes the end point into q and p.
// Throws NonFiniteState if any intermediate is non-finite.
void leapfrog(Vector& q, Vector& p, double eps, int L, const GradLogDensity& grad,
              const MassMatrix& mass);

// Hamiltonian Monte Carlo with Metropolis correction. Divergent proposals are
// counted and rejected, never thrown. Throws InvalidArgument for bad settings
// or a non-finite log density at the initial point.
ChainOutput hmc_sample(const LogDensity& logp, const GradLogDensity& grad, const Vector& init,
                       const HmcSettings& settings);
ChainOutput hmc_sample(const LogDensityWithGrad& target, const Vector& init,
                       const HmcSettings& settings);

}  // namespace magidyn
