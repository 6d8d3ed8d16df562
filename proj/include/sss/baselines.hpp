#ifndef SSS_BASELINES_HPP
#define SSS_BASELINES_HPP

// Reference recovery methods used for comparison runs.

#include <Eigen/Dense>

#include "sss/solver.hpp"

namespace sss {

struct CosampConfig {
  Index k = 0;  // caller-supplied sparsity estimate
  int max_iterations = 100;
  double residual_tolerance = 1e-6;

  void validate(Index n) const;
};

struct CosampResult {
  Eigen::VectorXd x;
  int iterations = 0;  // accepted iterations
  double residual = 0;
  bool undersampled = false;  // 2k > m, outside the usual recovery regime
};

/// Compressive sampling matching pursuit: identify the 2k largest proxy
/// entries, merge with the current support, least-squares fit, prune to k.
/// An iteration that would increase the residual is rejected and ends the run.
CosampResult cosamp(const Problem& problem, const CosampConfig& config);

/// Minimum-norm least-squares solution of A x = b.
Eigen::VectorXd least_squares(const Eigen::MatrixXd& A, const Eigen::VectorXd& b);

}  // namespace sss

#endif  // SSS_BASELINES_HPP
