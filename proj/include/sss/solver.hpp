#ifndef SSS_SOLVER_HPP
#define SSS_SOLVER_HPP

// Solve-Select-Scale sparse recovery.
//
// Each iteration of the continuation loop over the coupling weight eta
//   SOLVE   x   = (A^T A + 2 eta I)^{-1} (A^T b + 2 eta c)
//   SELECT  rho = clamp(round(1 + c^T A^T (A x - b) / 2), 1, n)
//   SCALE   c   = top-rho magnitudes of x, rescaled, with permutation and
//                 signs of x restored; every other entry is zero
// and then grows eta by the factor (1 + epsilon).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sss/errors.hpp"
#include "sss/metrics.hpp"
#include "sss/types.hpp"

namespace sss {

enum class ScaleMode { per_component, hypersphere };
enum class StopRule { eta_schedule, residual_below_sigma };
enum class StopReason { eta_schedule, residual_below_sigma, max_iterations };

inline const char* to_string(ScaleMode m) {
  return m == ScaleMode::per_component ? "per-component" : "hypersphere";
}
inline const char* to_string(StopRule s) {
  return s == StopRule::eta_schedule ? "schedule" : "sigma";
}
inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::eta_schedule: return "eta_schedule";
    case StopReason::residual_below_sigma: return "residual_below_sigma";
    case StopReason::max_iterations: return "max_iterations";
  }
  return "unknown";
}

/// A measurement instance A x = b, optionally with the generating signal and
/// the noise level used to build it.
template <typename Scalar>
struct BasicProblem {
  Matrix<Scalar> A;
  Vector<Scalar> b;
  std::optional<Vector<Scalar>> truth;
  std::optional<Scalar> noise_variance;

  Index rows() const { return A.rows(); }
  Index cols() const { return A.cols(); }

  void validate() const {
    if (A.rows() < 1 || A.cols() < 1) throw ShapeError("problem: empty measurement matrix");
    if (b.size() != A.rows()) {
      throw ShapeError("problem: b has length " + std::to_string(b.size()) + " but A has " +
                       std::to_string(A.rows()) + " rows");
    }
    if (!A.allFinite() || !b.allFinite()) throw DomainError("problem: non-finite entry");
    for (Index j = 0; j < A.cols(); ++j) {
      if ((A.col(j).array() == Scalar(0)).all()) {
        throw DegenerateInputError("problem: column " + std::to_string(j) + " of A is zero");
      }
    }
    if (truth && truth->size() != A.cols()) throw ShapeError("problem: truth length mismatch");
    if (noise_variance && !(*noise_variance >= Scalar(0))) {
      throw ArgumentError("problem: noise variance must be >= 0");
    }
  }

  template <typename Other>
  BasicProblem<Other> cast() const {
    BasicProblem<Other> p;
    p.A = A.template cast<Other>();
    p.b = b.template cast<Other>();
    if (truth) p.truth = truth->template cast<Other>();
    if (noise_variance) p.noise_variance = static_cast<Other>(*noise_variance);
    return p;
  }
};

using Problem = BasicProblem<double>;

struct SolverConfig {
  double eta_start = 1e-4;
  double eta_end = 1e8;
  double epsilon = 0.0186;  // ~1500 iterations between the defaults above
  ScaleMode c_mode = ScaleMode::per_component;
  StopRule stop = StopRule::eta_schedule;
  int max_iterations = 5000;
  double ridge_tolerance = 1e-8;

  /// Number of eta updates needed for the schedule to reach eta_end.
  int scheduled_iterations() const {
    return static_cast<int>(std::ceil(std::log(eta_end / eta_start) / std::log1p(epsilon)));
  }

  void validate() const {
    if (!(eta_start > 0) || !std::isfinite(eta_start)) {
      throw ArgumentError("eta_start must be a finite positive number");
    }
    if (!(eta_end > eta_start) || !std::isfinite(eta_end)) {
      throw ArgumentError("eta_end must be finite and greater than eta_start");
    }
    if (!(epsilon > 0) || !std::isfinite(epsilon)) {
      throw ArgumentError("epsilon must be a finite positive number");
    }
    if (max_iterations < 1) throw ArgumentError("max_iterations must be >= 1");
    if (!(ridge_tolerance > 0)) throw ArgumentError("ridge_tolerance must be positive");
    if (scheduled_iterations() > max_iterations) {
      throw ArgumentError("eta schedule needs " + std::to_string(scheduled_iterations()) +
                          " iterations, more than max_iterations = " +
                          std::to_string(max_iterations));
    }
  }
};

/// Cached spectral decomposition A^T A = L diag(lambda) L^T.
template <typename Scalar>
struct EigenFactorization {
  Matrix<Scalar> eigenvectors;
  Vector<Scalar> eigenvalues;

  Index dimension() const { return eigenvalues.size(); }
};

template <typename Scalar>
EigenFactorization<Scalar> factorize_gram(const Matrix<Scalar>& A) {
  Matrix<Scalar> gram(A.cols(), A.cols());
  gram.setZero();
  gram.template selfadjointView<Eigen::Lower>().rankUpdate(A.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(gram);
  if (eig.info() != Eigen::Success) throw NumericError("eigendecomposition of A^T A failed");
  EigenFactorization<Scalar> f;
  f.eigenvectors = eig.eigenvectors();
  // A^T A is PSD; round-off can push null-space eigenvalues slightly negative.
  f.eigenvalues = eig.eigenvalues().cwiseMax(Scalar(0));
  return f;
}

/// Dense ridge update x = (A^T A + 2 eta I)^{-1} (A^T b + 2 eta c).
template <typename Scalar>
Vector<Scalar> x_update(const BasicProblem<Scalar>& problem, const Vector<Scalar>& c,
                        Scalar eta) {
  if (!(eta > Scalar(0))) throw ArgumentError("x_update: eta must be positive");
  if (c.size() != problem.cols()) throw ShapeError("x_update: c length mismatch");
  const Index n = problem.cols();
  Matrix<Scalar> system = Matrix<Scalar>::Zero(n, n);
  system.template selfadjointView<Eigen::Lower>().rankUpdate(problem.A.transpose());
  system.diagonal().array() += Scalar(2) * eta;
  Vector<Scalar> rhs = problem.A.transpose() * problem.b + Scalar(2) * eta * c;
  Eigen::LLT<Matrix<Scalar>, Eigen::Lower> llt(system);
  if (llt.info() != Eigen::Success) throw NumericError("x_update: Cholesky factorization failed");
  return llt.solve(rhs);
}

/// Same update through the cached eigendecomposition:
/// x = L (Lambda + 2 eta I)^{-1} L^T (A^T b + 2 eta c).
template <typename Scalar>
Vector<Scalar> x_update_fast(const EigenFactorization<Scalar>& f, const Matrix<Scalar>& A,
                             const Vector<Scalar>& b, const Vector<Scalar>& c, Scalar eta) {
  if (!(eta > Scalar(0))) throw ArgumentError("x_update_fast: eta must be positive");
  if (f.dimension() != A.cols() || f.eigenvectors.rows() != A.cols()) {
    throw ShapeError("x_update_fast: factorization does not match A");
  }
  if (b.size() != A.rows() || c.size() != A.cols()) throw ShapeError("x_update_fast: length mismatch");
  const Vector<Scalar> rhs = A.transpose() * b + Scalar(2) * eta * c;
  Vector<Scalar> z = f.eigenvectors.transpose() * rhs;
  z.array() /= f.eigenvalues.array() + Scalar(2) * eta;
  return f.eigenvectors * z;
}

/// ||A^T (A x - b) - 2 eta (c - x)||_2, zero when x solves the ridge system exactly.
template <typename Scalar>
Scalar normal_equation_residual(const Matrix<Scalar>& A, const Vector<Scalar>& b,
                                const Vector<Scalar>& x, const Vector<Scalar>& c, Scalar eta) {
  return (A.transpose() * (A * x - b) - Scalar(2) * eta * (c - x)).norm();
}

/// Unrounded support-size estimate 1 + c^T A^T (A x - b) / 2.
template <typename Scalar>
Scalar select_rho_value(const Matrix<Scalar>& A, const Vector<Scalar>& b, const Vector<Scalar>& x,
                        const Vector<Scalar>& c) {
  if (b.size() != A.rows() || x.size() != A.cols() || c.size() != A.cols()) {
    throw ShapeError("select_rho: length mismatch");
  }
  const Vector<Scalar> residual = A * x - b;
  const Scalar value = Scalar(1) + (A * c).dot(residual) / Scalar(2);
  if (!std::isfinite(static_cast<double>(value))) throw NumericError("select_rho: non-finite estimate");
  return value;
}

/// Nearest integer to a support-size estimate, clamped to [1, n].
template <typename Scalar>
Index round_rho(Scalar value, Index n) {
  if (!std::isfinite(static_cast<double>(value))) throw NumericError("select_rho: non-finite estimate");
  using std::round;
  const Scalar r = round(value);
  if (r <= Scalar(1)) return 1;
  if (r >= static_cast<Scalar>(n)) return n;
  return static_cast<Index>(r);
}

template <typename Scalar>
Index select_rho(const Matrix<Scalar>& A, const Vector<Scalar>& b, const Vector<Scalar>& x,
                 const Vector<Scalar>& c, Index n) {
  if (n < 1) throw ArgumentError("select_rho: n must be >= 1");
  return round_rho(select_rho_value(A, b, x, c), n);
}

template <typename Scalar>
struct SortedMagnitudes {
  Vector<Scalar> magnitudes;       // |x| in descending order
  std::vector<Index> permutation;  // permutation[k] = original index of magnitudes[k]
  Vector<Scalar> signs;            // sign(x_i) in original order, 0 for zero entries
};

/// Stable descending sort on |x|; equal magnitudes keep the lower index first.
template <typename Scalar>
SortedMagnitudes<Scalar> sort_magnitudes(const Vector<Scalar>& x) {
  using std::abs;
  SortedMagnitudes<Scalar> s;
  const Index n = x.size();
  s.permutation.resize(static_cast<std::size_t>(n));
  std::iota(s.permutation.begin(), s.permutation.end(), Index{0});
  std::stable_sort(s.permutation.begin(), s.permutation.end(),
                   [&x](Index a, Index b) { return abs(x(a)) > abs(x(b)); });
  s.magnitudes.resize(n);
  s.signs.resize(n);
  for (Index k = 0; k < n; ++k) s.magnitudes(k) = abs(x(s.permutation[static_cast<std::size_t>(k)]));
  for (Index i = 0; i < n; ++i) {
    s.signs(i) = x(i) > Scalar(0) ? Scalar(1) : (x(i) < Scalar(0) ? Scalar(-1) : Scalar(0));
  }
  return s;
}

namespace detail {

template <typename Scalar>
void check_scale_args(const Vector<Scalar>& sorted_x, Index rho, Scalar eta, const char* op) {
  if (rho < 1 || rho > sorted_x.size()) {
    throw ArgumentError(std::string(op) + ": rho = " + std::to_string(rho) +
                        " outside [1, " + std::to_string(sorted_x.size()) + "]");
  }
  if (!(eta > Scalar(0))) throw ArgumentError(std::string(op) + ": eta must be positive");
}

}  // namespace detail

/// Largest entry kept as is; entries 2..rho take the positive root of
/// c (c - x) = 1 / eta; everything past rho is zero.
template <typename Scalar>
Vector<Scalar> scale_c_per_component(const Vector<Scalar>& sorted_x, Index rho, Scalar eta) {
  using std::sqrt;
  detail::check_scale_args(sorted_x, rho, eta, "scale_c_per_component");
  Vector<Scalar> c = Vector<Scalar>::Zero(sorted_x.size());
  c(0) = sorted_x(0);
  const Scalar inv_eta = Scalar(1) / eta;
  for (Index i = 1; i < rho; ++i) {
    const Scalar v = sorted_x(i);
    if (v > Scalar(0)) {
      // x (1 + sqrt(1 + 4 / (eta x^2))) / 2 without forming 1 / x^2
      c(i) = (v + sqrt(v * v + Scalar(4) * inv_eta)) / Scalar(2);
    }
  }
  return c;
}

/// Uniform scaling alpha * x on the top-rho entries, with alpha chosen so the
/// result lies on the sphere ||c - x/2||^2 = (rho - 1)/eta + ||x||^2/4.
template <typename Scalar>
Vector<Scalar> scale_c_hypersphere(const Vector<Scalar>& sorted_x, Index rho, Scalar eta) {
  using std::sqrt;
  detail::check_scale_args(sorted_x, rho, eta, "scale_c_hypersphere");
  const Scalar norm2 = sorted_x.head(rho).squaredNorm();
  if (!(norm2 > Scalar(0))) throw DegenerateInputError("scale_c_hypersphere: zero support norm");
  const Scalar alpha =
      Scalar(0.5) + sqrt(Scalar(0.25) + static_cast<Scalar>(rho - 1) / (eta * norm2));
  Vector<Scalar> c = Vector<Scalar>::Zero(sorted_x.size());
  c.head(rho) = alpha * sorted_x.head(rho);
  return c;
}

/// Undo the magnitude sort and put back sign(x).
template <typename Scalar>
Vector<Scalar> restore_c(const Vector<Scalar>& scaled, const std::vector<Index>& permutation,
                         const Vector<Scalar>& signs) {
  const Index n = scaled.size();
  if (static_cast<Index>(permutation.size()) != n || signs.size() != n) {
    throw ShapeError("restore_c: length mismatch");
  }
  Vector<Scalar> c(n);
  for (Index k = 0; k < n; ++k) {
    const Index i = permutation[static_cast<std::size_t>(k)];
    c(i) = scaled(k) * signs(i);
  }
  return c;
}

/// Full mutable state after an iteration's SCALE step.
template <typename Scalar>
struct IterateState {
  int iteration = 0;
  Scalar eta{0};  // coupling weight used by this iteration
  Index rho = 0;
  Scalar rho_value{0};  // unrounded estimate
  Vector<Scalar> x;
  Vector<Scalar> c;
  Vector<Scalar> sorted_magnitudes;
  Vector<Scalar> scaled;  // c in sorted order, before restore
  std::vector<Index> permutation;
  Vector<Scalar> signs;
};

struct TraceRecord {
  int iteration = 0;
  double eta = 0;
  Index rho = 0;
  double residual = 0;        // ||A x - b||_2 after the SOLVE step
  std::optional<double> cost;  // surrogate over the nonzero entries of c
  double wall_time = 0;        // seconds since solve() started
};

using Trace = std::vector<TraceRecord>;

template <typename Scalar>
struct SolveResult {
  Vector<Scalar> x;
  Vector<Scalar> c;
  Trace trace;
  StopReason stop = StopReason::eta_schedule;
  int iterations = 0;
};

template <typename Scalar>
using IterationObserver = std::function<void(const IterateState<Scalar>&)>;

namespace detail {

template <typename Scalar>
std::optional<double> support_cost(const Vector<Scalar>& c) {
  Vector<Scalar> nz(c.size());
  Index k = 0;
  for (Index i = 0; i < c.size(); ++i) {
    if (c(i) != Scalar(0)) nz(k++) = c(i);
  }
  if (k == 0) return std::nullopt;
  return static_cast<double>(surrogate_cost(nz.head(k)));
}

}  // namespace detail

/// Runs the continuation loop. `factorization` must come from factorize_gram(problem.A).
template <typename Scalar>
SolveResult<Scalar> solve(const BasicProblem<Scalar>& problem,
                          const EigenFactorization<Scalar>& factorization,
                          const SolverConfig& config,
                          const IterationObserver<Scalar>& observer = {}) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();

  problem.validate();
  config.validate();
  const Index n = problem.cols();
  if (factorization.dimension() != n) throw ShapeError("solve: factorization does not match A");

  std::optional<Scalar> sigma2;
  if (config.stop == StopRule::residual_below_sigma) {
    if (!problem.noise_variance) {
      throw ArgumentError("solve: residual stopping rule needs the problem's noise variance");
    }
    sigma2 = *problem.noise_variance;
  }

  const Matrix<Scalar>& A = problem.A;
  const Matrix<Scalar>& L = factorization.eigenvectors;
  const Vector<Scalar> projected_atb = L.transpose() * (A.transpose() * problem.b);

  SolveResult<Scalar> result;
  IterateState<Scalar> state;
  state.c = Vector<Scalar>::Ones(n);
  Scalar eta = static_cast<Scalar>(config.eta_start);
  const Scalar eta_end = static_cast<Scalar>(config.eta_end);
  const Scalar growth = Scalar(1) + static_cast<Scalar>(config.epsilon);
  bool c_dense = true;

  Vector<Scalar> z(n), residual(problem.rows()), ac(problem.rows());
  result.stop = StopReason::eta_schedule;

  while (eta < eta_end) {
    if (state.iteration >= config.max_iterations) {
      result.stop = StopReason::max_iterations;
      break;
    }

    // SOLVE. L^T c only touches the rows of L on the support of c.
    if (c_dense) {
      z.noalias() = L.transpose() * state.c;
    } else {
      z.setZero();
      for (Index i = 0; i < n; ++i) {
        if (state.c(i) != Scalar(0)) z.noalias() += state.c(i) * L.row(i).transpose();
      }
    }
    z = (projected_atb + Scalar(2) * eta * z).cwiseQuotient(
        (factorization.eigenvalues.array() + Scalar(2) * eta).matrix());
    state.x.noalias() = L * z;

    // SELECT
    residual.noalias() = A * state.x;
    residual -= problem.b;
    ac.setZero();
    for (Index i = 0; i < n; ++i) {
      if (state.c(i) != Scalar(0)) ac.noalias() += state.c(i) * A.col(i);
    }
    state.rho_value = Scalar(1) + ac.dot(residual) / Scalar(2);
    state.rho = round_rho(state.rho_value, n);

    // SCALE
    auto sorted = sort_magnitudes(state.x);
    state.scaled = config.c_mode == ScaleMode::per_component
                       ? scale_c_per_component(sorted.magnitudes, state.rho, eta)
                       : scale_c_hypersphere(sorted.magnitudes, state.rho, eta);
    state.c = restore_c(state.scaled, sorted.permutation, sorted.signs);
    state.sorted_magnitudes = std::move(sorted.magnitudes);
    state.permutation = std::move(sorted.permutation);
    state.signs = std::move(sorted.signs);
    state.eta = eta;
    c_dense = false;

    if (!state.x.allFinite() || !state.c.allFinite()) {
      throw NumericError("solve: non-finite iterate at iteration " + std::to_string(state.iteration));
    }

    const Scalar residual_sq = residual.squaredNorm();
    TraceRecord rec;
    rec.iteration = state.iteration;
    rec.eta = static_cast<double>(eta);
    rec.rho = state.rho;
    rec.residual = static_cast<double>(std::sqrt(static_cast<double>(residual_sq)));
    rec.cost = detail::support_cost(state.c);
    rec.wall_time = std::chrono::duration<double>(Clock::now() - start).count();
    result.trace.push_back(rec);

    if (observer) observer(state);
    ++state.iteration;

    if (sigma2 && residual_sq < *sigma2) {
      result.stop = StopReason::residual_below_sigma;
      break;
    }
    eta *= growth;
  }

  result.iterations = state.iteration;
  result.x = std::move(state.x);
  result.c = std::move(state.c);
  if (result.iterations == 0) result.x = Vector<Scalar>::Zero(n);
  return result;
}

template <typename Scalar>
SolveResult<Scalar> solve(const BasicProblem<Scalar>& problem, const SolverConfig& config,
                          const IterationObserver<Scalar>& observer = {}) {
  problem.validate();
  config.validate();
  return solve(problem, factorize_gram(problem.A), config, observer);
}

}  // namespace sss

#endif  // SSS_SOLVER_HPP
