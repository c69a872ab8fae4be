#pragma once

#include <string>

#include "magidyn/types.hpp"

namespace magidyn {

// Lorenz parameters. Vector form is always ordered (beta, rho, sigma).
struct Theta {
  double beta = 0.0;
  double rho = 0.0;
  double sigma = 0.0;

  Vector to_vector() const;
  static Theta from_vector(const Vector& v);
  bool operator==(const Theta&) const = default;
};

using State3 = Eigen::Vector3d;

// A first-order system dx/dt = f(x, t, theta) with analytic Jacobians.
//
// The batch methods take one state per row. The defaults loop over the
// per-point evaluators; concrete systems may override them for speed.
class OdeSystem {
 public:
  virtual ~OdeSystem() = default;

  virtual int dim() const = 0;
  virtual int n_params() const = 0;
  virtual std::string name() const = 0;

  virtual Vector f(const Vector& x, double t, const Vector& theta) const = 0;
  // d x d, entry (i, j) = df_i/dx_j
  virtual Matrix grad_x(const Vector& x, double t, const Vector& theta) const = 0;
  // d x p, entry (i, k) = df_i/dtheta_k
  virtual Matrix grad_theta(const Vector& x, double t, const Vector& theta) const = 0;

  // out(r, :) = f(X(r, :), t[r], theta)
  virtual void f_rows(const Matrix& X, const Vector& t, const Vector& theta,
                      Matrix& out) const;

  // Vector-Jacobian products summed over rows, given weights W (one row per
  // time point):
  //   gx(r, j)   = sum_i W(r, i) * df_i/dx_j at row r
  //   gtheta(k) = sum_r sum_i W(r, i) * df_i/dtheta_k at row r
  virtual void vjp_rows(const Matrix& X, const Vector& t, const Vector& theta,
                        const Matrix& W, Matrix& gx, Vector& gtheta) const;
};

State3 lorenz_f(const State3& s, const Theta& th);
Eigen::Matrix3d lorenz_grad_x(const State3& s, const Theta& th);
Eigen::Matrix3d lorenz_grad_theta(const State3& s, const Theta& th);

// Critical rho above which the two non-origin fixed points lose stability:
// sigma (sigma + beta + 3) / (sigma - beta - 1).
// Throws DegenerateDenominator when sigma - beta - 1 == 0.
double rho_critical(double beta, double sigma);

class LorenzSystem final : public OdeSystem {
 public:
  int dim() const override { return 3; }
  int n_params() const override { return 3; }
  std::string name() const override { return "lorenz"; }

  Vector f(const Vector& x, double t, const Vector& theta) const override;
  Matrix grad_x(const Vector& x, double t, const Vector& theta) const override;
  Matrix grad_theta(const Vector& x, double t, const Vector& theta) const override;

  void f_rows(const Matrix& X, const Vector& t, const Vector& theta,
              Matrix& out) const override;
  void vjp_rows(const Matrix& X, const Vector& t, const Vector& theta,
                const Matrix& W, Matrix& gx, Vector& gtheta) const override;
};

}  // namespace magidyn
