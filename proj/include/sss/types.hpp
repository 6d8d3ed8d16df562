#ifndef SSS_TYPES_HPP
#define SSS_TYPES_HPP

#include <Eigen/Dense>

namespace sss {

using Index = Eigen::Index;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

}  // namespace sss

#endif  // SSS_TYPES_HPP
