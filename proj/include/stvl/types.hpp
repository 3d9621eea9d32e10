#pragma once

#include <Eigen/Core>

namespace stvl {

// Dense types used across the library. Samples and ensembles are stored one
// draw per row, so an N x d matrix holds N points of R^d.
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Vector = VectorX<double>;
using Matrix = MatrixX<double>;

}  // namespace stvl
