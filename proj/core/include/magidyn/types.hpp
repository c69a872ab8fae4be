#pragma once

#include <vector>

#include <Eigen/Dense>

namespace magidyn {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Noise-free states on a time grid: values.row(i) is the state at times[i].
struct Trajectory {
  std::vector<double> times;
  Matrix values;
};

}  // namespace magidyn
