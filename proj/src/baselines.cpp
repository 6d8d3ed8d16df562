#include "sss/baselines.hpp"

#include <algorithm>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

namespace sss {

namespace {

// Indices of the `count` largest |v| entries; ties go to the lower index.
std::vector<Index> largest_indices(const Eigen::VectorXd& v, Index count) {
  std::vector<Index> idx(static_cast<std::size_t>(v.size()));
  std::iota(idx.begin(), idx.end(), Index{0});
  count = std::min<Index>(count, v.size());
  std::partial_sort(idx.begin(), idx.begin() + count, idx.end(), [&v](Index a, Index b) {
    const double fa = std::abs(v(a)), fb = std::abs(v(b));
    return fa > fb || (fa == fb && a < b);
  });
  idx.resize(static_cast<std::size_t>(count));
  return idx;
}

}  // namespace

void CosampConfig::validate(Index n) const {
  if (k < 0) throw ArgumentError("cosamp: k must be >= 0");
  if (k > n) {
    throw ArgumentError("cosamp: k = " + std::to_string(k) + " exceeds signal length " +
                        std::to_string(n));
  }
  if (max_iterations < 0) throw ArgumentError("cosamp: max_iterations must be >= 0");
  if (!(residual_tolerance >= 0)) throw ArgumentError("cosamp: residual_tolerance must be >= 0");
}

Eigen::VectorXd least_squares(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  if (b.size() != A.rows()) throw ShapeError("least_squares: b length does not match A");
  if (A.cols() == 0) return Eigen::VectorXd(0);
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
  return cod.solve(b);
}

CosampResult cosamp(const Problem& problem, const CosampConfig& config) {
  problem.validate();
  const Index n = problem.cols();
  config.validate(n);

  CosampResult out;
  out.x = Eigen::VectorXd::Zero(n);
  out.residual = problem.b.norm();
  if (config.k == 0) return out;

  if (2 * config.k > problem.rows()) {
    out.undersampled = true;
    std::clog << "cosamp: warning: 2k = " << 2 * config.k << " exceeds m = " << problem.rows()
              << "\n";
  }

  Eigen::VectorXd r = problem.b;
  std::vector<Index> support;
  for (int t = 0; t < config.max_iterations && out.residual > config.residual_tolerance; ++t) {
    const Eigen::VectorXd proxy = problem.A.transpose() * r;
    std::vector<Index> merged = largest_indices(proxy, 2 * config.k);
    merged.insert(merged.end(), support.begin(), support.end());
    std::sort(merged.begin(), merged.end());
    merged.erase(std::unique(merged.begin(), merged.end()), merged.end());

    const Eigen::VectorXd fit = least_squares(problem.A(Eigen::all, merged), problem.b);
    Eigen::VectorXd spread = Eigen::VectorXd::Zero(n);
    spread(merged) = fit;

    std::vector<Index> pruned = largest_indices(spread, config.k);
    Eigen::VectorXd candidate = Eigen::VectorXd::Zero(n);
    candidate(pruned) = spread(pruned);
    const Eigen::VectorXd r_next = problem.b - problem.A * candidate;
    const double res_next = r_next.norm();
    if (res_next > out.residual) break;

    out.x = std::move(candidate);
    out.residual = res_next;
    out.iterations = t + 1;
    r = r_next;
    std::sort(pruned.begin(), pruned.end());
    support = std::move(pruned);
  }
  return out;
}

}  // namespace sss
