#ifndef SSS_METRICS_HPP
#define SSS_METRICS_HPP

// Norm-ratio sparsity measure and the log surrogate
//
//   f(x) = -sum_i log x_i^2 + log ||x||_2^2
//
// together with its gradient and Hessian. All functions accept any Eigen
// vector expression and return values in its scalar type, so the same code
// runs in double for production and in long double for tight checks.

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "sss/errors.hpp"
#include "sss/types.hpp"

namespace sss {

template <typename Scalar>
struct HessianMatrix {
  Matrix<Scalar> entries;
  Scalar s2{0};  // sum of squared entries of the evaluation point

  Index size() const { return entries.rows(); }
};

namespace detail {

template <typename Derived>
void require_signal(const Eigen::MatrixBase<Derived>& x, const char* op) {
  if (x.size() < 1) throw ShapeError(std::string(op) + ": empty signal");
  if (!x.allFinite()) throw DomainError(std::string(op) + ": non-finite entry");
}

template <typename Derived>
void require_no_zeros(const Eigen::MatrixBase<Derived>& x, const char* op) {
  require_signal(x, op);
  for (Index i = 0; i < x.size(); ++i) {
    if (x(i) == typename Derived::Scalar(0)) {
      throw UndefinedAtZeroError(std::string(op) + ": undefined at zero entry " +
                                 std::to_string(i));
    }
  }
}

}  // namespace detail

/// ||x||_1^2 / ||x||_2^2. Lies in [1, ||x||_0] and is invariant to scaling.
template <typename Derived>
typename Derived::Scalar sparsity_ratio(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  detail::require_signal(x, "sparsity_ratio");
  const Scalar l1 = x.template lpNorm<1>();
  if (l1 == Scalar(0)) throw DomainError("sparsity_ratio: all-zero signal");
  // Normalise by the largest magnitude first so the squares cannot overflow.
  const Scalar peak = x.template lpNorm<Eigen::Infinity>();
  const Scalar l1n = l1 / peak;
  return l1n * l1n / (x / peak).squaredNorm();
}

template <typename Derived>
typename Derived::Scalar surrogate_cost(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  using std::log;
  detail::require_no_zeros(x, "surrogate_cost");
  Scalar log_sum{0};
  for (Index i = 0; i < x.size(); ++i) log_sum += log(x(i) * x(i));
  return -log_sum + log(x.squaredNorm());
}

/// Component i is -2/x_i + 2 x_i / S2.
template <typename Derived>
Vector<typename Derived::Scalar> surrogate_gradient(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  detail::require_no_zeros(x, "surrogate_gradient");
  const Scalar s2 = x.squaredNorm();
  return (Scalar(-2) * x.array().inverse() + Scalar(2) * x.array() / s2).matrix();
}

/// Analytic Hessian of the surrogate:
///   h_ii = 2 (S2 - x_i^2)(2 x_i^2 + S2) / (x_i^2 S2^2)
///   h_ij = -4 x_i x_j / S2^2
/// Positive definite on the open positive orthant for n >= 2; h_11 = 0 when n = 1.
template <typename Derived>
HessianMatrix<typename Derived::Scalar> surrogate_hessian(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  detail::require_no_zeros(x, "surrogate_hessian");
  const Vector<Scalar> v = x;
  HessianMatrix<Scalar> h;
  h.s2 = v.squaredNorm();
  const Scalar s2sq = h.s2 * h.s2;
  const Vector<Scalar> w = (Scalar(-4) / s2sq) * v;
  h.entries.resize(v.size(), v.size());
  for (Index j = 0; j < v.size(); ++j)
    for (Index i = j + 1; i < v.size(); ++i) h.entries(i, j) = h.entries(j, i) = w(i) * v(j);
  for (Index i = 0; i < v.size(); ++i) {
    const Scalar xi2 = v(i) * v(i);
    h.entries(i, i) = Scalar(2) * (h.s2 - xi2) * (Scalar(2) * xi2 + h.s2) / (xi2 * s2sq);
  }
  return h;
}

template <typename Scalar, typename Derived>
Scalar quadratic_form(const HessianMatrix<Scalar>& h, const Eigen::MatrixBase<Derived>& y) {
  if (y.size() != h.size()) {
    throw ShapeError("quadratic_form: direction has length " + std::to_string(y.size()) +
                     ", Hessian is " + std::to_string(h.size()) + "x" +
                     std::to_string(h.size()));
  }
  const Vector<Scalar> v = y.template cast<Scalar>();
  return v.dot(h.entries * v);
}

}  // namespace sss

#endif  // SSS_METRICS_HPP
