#pragma once

#include <Eigen/Dense>

namespace hierrec {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

}  // namespace hierrec
