#pragma once

#include <Eigen/Dense>

namespace ldec {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

}  // namespace ldec
