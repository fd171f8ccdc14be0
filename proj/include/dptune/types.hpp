#pragma once

#include <Eigen/Dense>

namespace dptune {

template <typename Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatXd = MatX<double>;
using VecXd = VecX<double>;
using VecXi = VecX<int>;

}  // namespace dptune
