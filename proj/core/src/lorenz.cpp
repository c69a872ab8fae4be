#include "magidyn/errors.hpp"
#include "magidyn/ode.hpp"

namespace magidyn {

Vector Theta::to_vector() const { return Vector{{beta, rho, sigma}}; }

Theta Theta::from_vector(const Vector& v) {
  if (v.size() != 3) throw InvalidArgument("Theta::from_vector expects 3 entries");
  return Theta{v[0], v[1], v[2]};
}

void OdeSystem::f_rows(const Matrix& X, const Vector& t, const Vector& theta,
                       Matrix& out) const {
  out.resize(X.rows(), X.cols());
  for (Eigen::Index r = 0; r < X.rows(); ++r)
    out.row(r) = f(X.row(r).transpose(), t[r], theta).transpose();
}

void OdeSystem::vjp_rows(const Matrix& X, const Vector& t, const Vector& theta,
                         const Matrix& W, Matrix& gx, Vector& gtheta) const {
  gx.resize(X.rows(), X.cols());
  gtheta = Vector::Zero(n_params());
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    const Vector x = X.row(r).transpose();
    const Vector w = W.row(r).transpose();
    gx.row(r) = (grad_x(x, t[r], theta).transpose() * w).transpose();
    gtheta += grad_theta(x, t[r], theta).transpose() * w;
  }
}

State3 lorenz_f(const State3& s, const Theta& th) {
  return State3{th.sigma * (s.y() - s.x()), s.x() * (th.rho - s.z()) - s.y(),
                s.x() * s.y() - th.beta * s.z()};
}

Eigen::Matrix3d lorenz_grad_x(const State3& s, const Theta& th) {
  Eigen::Matrix3d J;
  J << -th.sigma, th.sigma, 0.0,
       th.rho - s.z(), -1.0, -s.x(),
       s.y(), s.x(), -th.beta;
  return J;
}

Eigen::Matrix3d lorenz_grad_theta(const State3& s, const Theta&) {
  Eigen::Matrix3d J;
  J << 0.0, 0.0, s.y() - s.x(),
       0.0, s.x(), 0.0,
       -s.z(), 0.0, 0.0;
  return J;
}

double rho_critical(double beta, double sigma) {
  const double den = sigma - beta - 1.0;
  if (den == 0.0)
    throw DegenerateDenominator("rho_critical: sigma - beta - 1 is zero");
  return sigma * (sigma + beta + 3.0) / den;
}

Vector LorenzSystem::f(const Vector& x, double, const Vector& theta) const {
  return lorenz_f(State3(x), Theta::from_vector(theta));
}

Matrix LorenzSystem::grad_x(const Vector& x, double, const Vector& theta) const {
  return lorenz_grad_x(State3(x), Theta::from_vector(theta));
}

Matrix LorenzSystem::grad_theta(const Vector& x, double, const Vector& theta) const {
  return lorenz_grad_theta(State3(x), Theta::from_vector(theta));
}

void LorenzSystem::f_rows(const Matrix& X, const Vector&, const Vector& theta,
                          Matrix& out) const {
  const double beta = theta[0], rho = theta[1], sigma = theta[2];
  const auto x = X.col(0).array(), y = X.col(1).array(), z = X.col(2).array();
  out.resize(X.rows(), 3);
  out.col(0) = (sigma * (y - x)).matrix();
  out.col(1) = (x * (rho - z) - y).matrix();
  out.col(2) = (x * y - beta * z).matrix();
}

void LorenzSystem::vjp_rows(const Matrix& X, const Vector&, const Vector& theta,
                            const Matrix& W, Matrix& gx, Vector& gtheta) const {
  const double beta = theta[0], rho = theta[1], sigma = theta[2];
  const auto x = X.col(0).array(), y = X.col(1).array(), z = X.col(2).array();
  const auto w0 = W.col(0).array(), w1 = W.col(1).array(), w2 = W.col(2).array();
  gx.resize(X.rows(), 3);
  gx.col(0) = (-sigma * w0 + (rho - z) * w1 + y * w2).matrix();
  gx.col(1) = (sigma * w0 - w1 + x * w2).matrix();
  gx.col(2) = (-x * w1 - beta * w2).matrix();
  gtheta.resize(3);
  gtheta[0] = -(z * w2).sum();
  gtheta[1] = (x * w1).sum();
  gtheta[2] = ((y - x) * w0).sum();
}

}  // namespace magidyn
