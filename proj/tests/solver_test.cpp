#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sss/harness.hpp"
#include "sss/solver.hpp"

namespace sss {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

Problem random_problem(std::mt19937_64& rng, Index m, Index n) {
  Problem p;
  p.A = oracle::random_gaussian(rng, m, n) / std::sqrt(static_cast<double>(m));
  p.b = oracle::random_vector(rng, m, -1, 1);
  return p;
}

TEST(XUpdate, IdentityClosedForm) {
  std::mt19937_64 rng(1);
  Problem p;
  p.A = MatrixXd::Identity(5, 5);
  p.b = oracle::random_vector(rng, 5, -1, 1);
  const VectorXd c = oracle::random_vector(rng, 5, -1, 1);
  const double eta = 0.7;
  const VectorXd expected = (p.b + 2 * eta * c) / (1 + 2 * eta);
  EXPECT_LT(oracle::rel_diff(x_update(p, c, eta), expected), 1e-14);

  const auto f = factorize_gram(p.A);
  EXPECT_TRUE(f.eigenvalues.isApprox(VectorXd::Ones(5), 1e-14));
  EXPECT_LT(oracle::rel_diff(x_update_fast(f, p.A, p.b, c, eta), expected), 1e-14);
}

TEST(XUpdate, LeastSquaresSolutionIsFixedPoint) {
  std::mt19937_64 rng(2);
  const Problem p = random_problem(rng, 10, 6);
  const VectorXd x_ls = oracle::normal_equations(p.A, p.b);
  for (double eta : {1e-3, 0.5, 10.0, 1e4}) {
    EXPECT_LT(oracle::rel_diff(x_update(p, x_ls, eta), x_ls), 1e-10) << "eta=" << eta;
  }
}

TEST(XUpdate, MatchesEliminationOracle) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    const Problem p = random_problem(rng, 6, 10);
    const VectorXd c = oracle::random_vector(rng, 10, -1, 1);
    const VectorXd expected = oracle::ridge_update(p.A, p.b, c, 0.5);
    EXPECT_LT(oracle::rel_diff(x_update(p, c, 0.5), expected), 1e-8);
  }
}

TEST(XUpdate, NormalEquationsAndSubproblemDescent) {
  std::mt19937_64 rng(4);
  const SolverConfig cfg;
  for (int t = 0; t < 30; ++t) {
    const Problem p = random_problem(rng, 8, 15);
    const VectorXd c = oracle::random_vector(rng, 15, -1, 1);
    const VectorXd prev = oracle::random_vector(rng, 15, -1, 1);
    const double eta = std::pow(10.0, -3 + t % 7);
    const VectorXd x = x_update(p, c, eta);
    const double bound = cfg.ridge_tolerance * (1 + (p.A.transpose() * p.b).norm());
    EXPECT_LE(normal_equation_residual(p.A, p.b, x, c, eta), bound * std::max(1.0, eta));
    auto objective = [&](const VectorXd& v) {
      return 0.5 * (p.A * v - p.b).squaredNorm() + eta * (c - v).squaredNorm();
    };
    EXPECT_LE(objective(x), objective(prev));
  }
}

TEST(XUpdate, RejectsNonPositiveEta) {
  Problem p;
  p.A = MatrixXd::Identity(2, 2);
  p.b = VectorXd::Ones(2);
  EXPECT_THROW(x_update(p, VectorXd(VectorXd::Ones(2)), 0.0), ArgumentError);
}

TEST(Factorization, ReconstructsGramAndIsNonnegative) {
  std::mt19937_64 rng(5);
  const Problem p = random_problem(rng, 7, 12);
  const auto f = factorize_gram(p.A);
  const MatrixXd gram = p.A.transpose() * p.A;
  const MatrixXd rebuilt = f.eigenvectors * f.eigenvalues.asDiagonal() * f.eigenvectors.transpose();
  EXPECT_LE((rebuilt - gram).norm(), 1e-8 * gram.norm());
  EXPECT_GE(f.eigenvalues.minCoeff(), 0.0);
  EXPECT_LE((f.eigenvectors.transpose() * f.eigenvectors - MatrixXd::Identity(12, 12)).norm(), 1e-10);
}

TEST(XUpdateFast, AgreesWithDenseUpdateAcrossEta) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 10; ++t) {
    const Problem p = random_problem(rng, 8, 12);
    const auto f = factorize_gram(p.A);
    const VectorXd c = oracle::random_vector(rng, 12, -1, 1);
    for (double eta : {1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3}) {
      EXPECT_LT(oracle::rel_diff(x_update_fast(f, p.A, p.b, c, eta), x_update(p, c, eta)), 1e-8)
          << "eta=" << eta;
    }
  }
}

TEST(XUpdateFast, StaleFactorizationIsShapeError) {
  std::mt19937_64 rng(7);
  const Problem small = random_problem(rng, 4, 6);
  const Problem big = random_problem(rng, 4, 7);
  const auto f = factorize_gram(small.A);
  EXPECT_THROW(x_update_fast(f, big.A, big.b, VectorXd(VectorXd::Ones(7)), 1.0), ShapeError);
}

TEST(SelectRho, ExactFitGivesOne) {
  const MatrixXd A = MatrixXd::Identity(4, 4);
  VectorXd b(4);
  b << 0.5, -1, 0, 2;
  EXPECT_EQ(select_rho(A, b, b, VectorXd(VectorXd::Ones(4)), 4), 1);
}

TEST(SelectRho, ClampsToN) {
  // 1 + c (x - b) / 2 = 1 + (2998 - 0) / 2 = 1500
  const MatrixXd A = MatrixXd::Ones(1, 1);
  const VectorXd b = VectorXd::Zero(1), c = VectorXd::Ones(1), x = VectorXd::Constant(1, 2998.0);
  EXPECT_DOUBLE_EQ(select_rho_value(A, b, x, c), 1500.0);
  EXPECT_EQ(select_rho(A, b, x, c, 1000), 1000);
}

TEST(SelectRho, ClampsNegativeToOne) {
  const MatrixXd A = MatrixXd::Ones(1, 1);
  const VectorXd b = VectorXd::Zero(1), c = VectorXd::Ones(1), x = VectorXd::Constant(1, -50.0);
  EXPECT_EQ(select_rho(A, b, x, c, 10), 1);
}

TEST(SelectRho, RoundsToNearest) {
  EXPECT_EQ(round_rho(3.49, 10), 3);
  EXPECT_EQ(round_rho(3.5, 10), 4);
  EXPECT_THROW(round_rho(std::nan(""), 10), NumericError);
}

TEST(SelectRho, MatchesMultiplierIdentity) {
  // With x from the ridge update, c^T A^T (Ax - b) / 2 = eta c^T (c - x).
  std::mt19937_64 rng(8);
  for (int t = 0; t < 50; ++t) {
    const Problem p = random_problem(rng, 10, 16);
    const VectorXd c = oracle::random_vector(rng, 16, -1, 1);
    const double eta = std::pow(10.0, -2 + t % 5);
    const VectorXd x = x_update(p, c, eta);
    const double direct = 1 + eta * c.dot(c - x);
    const double value = select_rho_value(p.A, p.b, x, c);
    EXPECT_NEAR(value, direct, 1e-6 * std::max(1.0, std::abs(direct)));
    EXPECT_EQ(select_rho(p.A, p.b, x, c, 16), round_rho(direct, 16));
  }
}

TEST(SortMagnitudes, Example) {
  VectorXd x(3);
  x << -3, 1, 2;
  const auto s = sort_magnitudes(x);
  EXPECT_EQ(s.magnitudes, (VectorXd(3) << 3, 2, 1).finished());
  EXPECT_EQ(s.signs, (VectorXd(3) << -1, 1, 1).finished());
  EXPECT_EQ(s.permutation, (std::vector<Index>{0, 2, 1}));
}

TEST(SortMagnitudes, SortedInputIsIdentity) {
  VectorXd x(4);
  x << 4, 3, 2, 1;
  EXPECT_EQ(sort_magnitudes(x).permutation, (std::vector<Index>{0, 1, 2, 3}));
}

TEST(SortMagnitudes, TiesKeepLowerIndexFirst) {
  VectorXd x(5);
  x << 1, -2, 2, 0, -1;
  EXPECT_EQ(sort_magnitudes(x).permutation, (std::vector<Index>{1, 2, 0, 4, 3}));
  EXPECT_EQ(sort_magnitudes(x).signs(3), 0.0);
}

TEST(SortMagnitudes, RoundTripIsBitExact) {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 100; ++t) {
    VectorXd x = oracle::random_vector(rng, 1 + t % 25, -5, 5);
    if (t % 4 == 0) x(0) = 0;
    const auto s = sort_magnitudes(x);
    VectorXd back(x.size());
    for (Index k = 0; k < x.size(); ++k) {
      const Index i = s.permutation[static_cast<std::size_t>(k)];
      back(i) = s.magnitudes(k) * s.signs(i);
    }
    for (Index i = 0; i < x.size(); ++i) EXPECT_EQ(back(i), x(i));
    EXPECT_TRUE(std::is_sorted(s.magnitudes.data(), s.magnitudes.data() + s.magnitudes.size(),
                               std::greater<>()));
  }
}

TEST(ScalePerComponent, LeadingEntryIsUnchanged) {
  VectorXd xs(3);
  xs << 0.9, 0.5, 0.1;
  for (double eta : {1e-4, 1.0, 1e6}) EXPECT_EQ(scale_c_per_component(xs, 3, eta)(0), 0.9);
}

TEST(ScalePerComponent, LargeEtaLimit) {
  VectorXd xs(4);
  xs << 0.9, 0.5, 0.1, 0.05;
  const VectorXd c = scale_c_per_component(xs, 3, 1e30);
  EXPECT_NEAR(c(1), 0.5, 1e-15);
  EXPECT_NEAR(c(2), 0.1, 1e-15);
  EXPECT_EQ(c(3), 0.0);
}

TEST(ScalePerComponent, EtaFourUnitMagnitude) {
  // Positive root of c (c - 1) = 1/4, checked by substitution: (1 + sqrt 2) / 2.
  const double root = 1.2071067811865475;
  EXPECT_NEAR(root * (root - 1), 0.25, 1e-15);
  VectorXd xs(2);
  xs << 2, 1;
  EXPECT_NEAR(scale_c_per_component(xs, 2, 4.0)(1), root, 1e-15);
}

TEST(ScalePerComponent, QuadraticIdentityAndZeros) {
  std::mt19937_64 rng(10);
  for (int t = 0; t < 50; ++t) {
    VectorXd xs = oracle::random_vector(rng, 12, 0.01, 1.0);
    std::sort(xs.data(), xs.data() + xs.size(), std::greater<>());
    xs(11) = 0;
    const double eta = std::pow(10.0, -4 + t % 9);
    const VectorXd c = scale_c_per_component(xs, 12, eta);
    for (Index i = 1; i < 11; ++i) EXPECT_NEAR(c(i) * (c(i) - xs(i)) * eta, 1.0, 1e-8);
    EXPECT_EQ(c(11), 0.0);
  }
}

TEST(ScalePerComponent, RhoOutOfRange) {
  const VectorXd xs = VectorXd::Ones(3);
  EXPECT_THROW(scale_c_per_component(xs, 0, 1.0), ArgumentError);
  EXPECT_THROW(scale_c_per_component(xs, 4, 1.0), ArgumentError);
  EXPECT_THROW(scale_c_hypersphere(xs, 4, 1.0), ArgumentError);
}

TEST(ScaleHypersphere, RhoOneKeepsLeader) {
  VectorXd xs(3);
  xs << 0.8, 0.3, 0.2;
  const VectorXd c = scale_c_hypersphere(xs, 1, 3.0);
  EXPECT_DOUBLE_EQ(c(0), 0.8);
  EXPECT_EQ(c(1), 0.0);
}

TEST(ScaleHypersphere, LargeEtaLimit) {
  VectorXd xs(3);
  xs << 0.8, 0.3, 0.2;
  EXPECT_LT(oracle::rel_diff(scale_c_hypersphere(xs, 3, 1e30), xs), 1e-14);
}

TEST(ScaleHypersphere, ThreeOnesOnSphere) {
  const VectorXd xs = VectorXd::Ones(3);
  const VectorXd c = scale_c_hypersphere(xs, 3, 1.0);
  const double alpha = 1.4574271077563381;  // 1/2 + sqrt(1/4 + 2/3)
  EXPECT_NEAR(c(0), alpha, 1e-15);
  // ||c - x/2||^2 = (rho - 1)/eta + ||x||^2/4
  EXPECT_NEAR((c - xs / 2).squaredNorm(), 2.0 + 0.75, 1e-8 * 2.75);
}

TEST(ScaleHypersphere, SphereEquationOnRandomInputs) {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 50; ++t) {
    VectorXd xs = oracle::random_vector(rng, 10, 0.01, 1.0);
    std::sort(xs.data(), xs.data() + xs.size(), std::greater<>());
    const Index rho = 1 + t % 10;
    const double eta = std::pow(10.0, -3 + t % 7);
    const VectorXd c = scale_c_hypersphere(xs, rho, eta);
    const double lhs = (c.head(rho) - xs.head(rho) / 2).squaredNorm();
    const double rhs = static_cast<double>(rho - 1) / eta + xs.head(rho).squaredNorm() / 4;
    EXPECT_NEAR(lhs, rhs, 1e-8 * rhs);
    EXPECT_TRUE(c.tail(10 - rho).isZero(0));
  }
}

TEST(ScaleHypersphere, ZeroSupportIsDegenerate) {
  EXPECT_THROW(scale_c_hypersphere(VectorXd(VectorXd::Zero(3)), 2, 1.0), DegenerateInputError);
}

TEST(RestoreC, IdentityIsUnchanged) {
  VectorXd v(3);
  v << 3, 2, 1;
  EXPECT_EQ(restore_c(v, {0, 1, 2}, VectorXd(VectorXd::Ones(3))), v);
}

TEST(RestoreC, SignPattern) {
  VectorXd x(2);
  x << -2, 3;
  const auto s = sort_magnitudes(x);
  const VectorXd c = restore_c(scale_c_per_component(s.magnitudes, 2, 1.0), s.permutation, s.signs);
  EXPECT_LE(c(0), 0.0);
  EXPECT_GE(c(1), 0.0);
}

TEST(RestoreC, LengthMismatch) {
  EXPECT_THROW(restore_c(VectorXd(VectorXd::Ones(3)), {0, 1}, VectorXd(VectorXd::Ones(3))), ShapeError);
}

TEST(RestoreC, PermutationConsistency) {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 100; ++t) {
    const VectorXd x = oracle::random_vector(rng, 15, -1, 1);
    const double eta = std::pow(10.0, -2 + t % 6);
    const Index rho = 1 + t % 15;
    const auto s = sort_magnitudes(x);
    const VectorXd scaled = t % 2 ? scale_c_per_component(s.magnitudes, rho, eta)
                                  : scale_c_hypersphere(s.magnitudes, rho, eta);
    const VectorXd c = restore_c(scaled, s.permutation, s.signs);
    for (Index k = 0; k < 15; ++k) {
      EXPECT_EQ(std::abs(c(s.permutation[static_cast<std::size_t>(k)])), scaled(k));
    }
    EXPECT_TRUE((x.array() * c.array() >= 0).all());
  }
}

TEST(SolverConfig, Validation) {
  SolverConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(cfg.scheduled_iterations(), 1500);
  cfg.eta_start = 0;
  EXPECT_THROW(cfg.validate(), ArgumentError);
  cfg = SolverConfig{};
  cfg.eta_end = cfg.eta_start;
  EXPECT_THROW(cfg.validate(), ArgumentError);
  cfg = SolverConfig{};
  cfg.max_iterations = 100;  // schedule needs 1500
  EXPECT_THROW(cfg.validate(), ArgumentError);
}

TEST(Problem, Validation) {
  Problem p;
  p.A = MatrixXd::Identity(3, 3);
  p.b = VectorXd::Ones(2);
  EXPECT_THROW(p.validate(), ShapeError);
  p.b = VectorXd::Ones(3);
  p.A(1, 1) = 0;
  EXPECT_THROW(p.validate(), DegenerateInputError);
}

TEST(Solve, SigmaRuleNeedsNoiseVariance) {
  Problem p;
  p.A = MatrixXd::Identity(3, 3);
  p.b = VectorXd::Ones(3);
  SolverConfig cfg;
  cfg.stop = StopRule::residual_below_sigma;
  EXPECT_THROW(solve(p, cfg), ArgumentError);
}

// Per-iteration invariants on a small random instance: the SCALE step keeps
// exactly rho entries on the rho largest |x|, with matching signs and order.
class SolveInvariants : public ::testing::TestWithParam<ScaleMode> {};

TEST_P(SolveInvariants, EveryIteration) {
  GeneratorSpec spec{40, 4, 25, 0.0, 77, 0.5, 1.0};
  const Problem p = generate_problem(spec);
  SolverConfig cfg;
  cfg.c_mode = GetParam();
  cfg.epsilon = 0.05;
  int iterations = 0;
  const auto f = factorize_gram(p.A);
  const auto result = solve<double>(p, f, cfg, [&](const IterateState<double>& s) {
    ++iterations;
    EXPECT_GE(s.rho, 1);
    EXPECT_LE(s.rho, 40);
    Index nonzero = 0;
    for (Index k = 0; k < 40; ++k) {
      const Index i = s.permutation[static_cast<std::size_t>(k)];
      if (k < s.rho && s.sorted_magnitudes(k) > 0) {
        EXPECT_NE(s.c(i), 0.0);
        ++nonzero;
      } else {
        EXPECT_EQ(s.c(i), 0.0);
      }
      EXPECT_GE(s.x(i) * s.c(i), 0.0);
      if (k > 0 && k < s.rho) {
        EXPECT_LE(std::abs(s.c(i)), std::abs(s.c(s.permutation[static_cast<std::size_t>(k - 1)])));
      }
    }
    EXPECT_LE(nonzero, s.rho);
  });
  EXPECT_EQ(iterations, result.iterations);
  EXPECT_EQ(static_cast<int>(result.trace.size()), result.iterations);
  for (std::size_t i = 0; i < result.trace.size(); ++i) EXPECT_EQ(result.trace[i].iteration, static_cast<int>(i));
}

INSTANTIATE_TEST_SUITE_P(Modes, SolveInvariants,
                         ::testing::Values(ScaleMode::per_component, ScaleMode::hypersphere));

TEST(Solve, RhoMatchesSelectRhoOnFreshIterate) {
  GeneratorSpec spec{30, 3, 20, 0.0, 5, 0.5, 1.0};
  const Problem p = generate_problem(spec);
  SolverConfig cfg;
  cfg.epsilon = 0.2;
  VectorXd prev_c = VectorXd::Ones(30);
  solve<double>(p, cfg, [&](const IterateState<double>& s) {
    EXPECT_EQ(s.rho, select_rho(p.A, p.b, s.x, prev_c, 30));
    prev_c = s.c;
  });
}

TEST(Solve, ScheduleLengthAndTrace) {
  GeneratorSpec spec{30, 3, 20, 0.0, 5, 0.5, 1.0};
  const Problem p = generate_problem(spec);
  const SolverConfig cfg;
  const auto r = solve(p, cfg);
  EXPECT_EQ(r.iterations, 1500);
  EXPECT_EQ(r.stop, StopReason::eta_schedule);
  EXPECT_NEAR(r.trace.front().eta, 1e-4, 1e-18);
  EXPECT_LT(r.trace.back().eta, 1e8);
  for (std::size_t i = 1; i < r.trace.size(); ++i) {
    EXPECT_GE(r.trace[i].wall_time, r.trace[i - 1].wall_time);
    EXPECT_NEAR(r.trace[i].eta / r.trace[i - 1].eta, 1.0186, 1e-12);
  }
}

TEST(Solve, ShortScheduleRunsToCompletion) {
  GeneratorSpec spec{30, 3, 20, 0.0, 5, 0.5, 1.0};
  const Problem p = generate_problem(spec);
  SolverConfig cfg;
  cfg.eta_end = 1e-3;
  cfg.epsilon = 0.5;
  const auto r = solve(p, cfg);
  EXPECT_EQ(r.stop, StopReason::eta_schedule);
  EXPECT_EQ(r.iterations, cfg.scheduled_iterations());
}

TEST(Solve, ResidualRuleHaltsBelowSigma) {
  GeneratorSpec spec{60, 4, 30, 0.01, 9, 0.5, 1.0};
  const Problem p = generate_problem(spec);
  SolverConfig cfg;
  cfg.stop = StopRule::residual_below_sigma;
  const auto r = solve(p, cfg);
  ASSERT_EQ(r.stop, StopReason::residual_below_sigma);
  const double final_sq = r.trace.back().residual * r.trace.back().residual;
  EXPECT_LT(final_sq, 0.01);
}

TEST(Solve, LongDoubleMatchesDouble) {
  GeneratorSpec spec{20, 3, 12, 0.0, 4, 0.5, 1.0};
  const Problem p = generate_problem(spec);
  SolverConfig cfg;
  cfg.epsilon = 0.3;
  const auto rd = solve(p, cfg);
  const auto rl = solve(p.cast<long double>(), cfg);
  ASSERT_EQ(rd.iterations, rl.iterations);
  for (std::size_t i = 0; i < rd.trace.size(); ++i) EXPECT_EQ(rd.trace[i].rho, rl.trace[i].rho);
  EXPECT_LT(oracle::rel_diff(rl.c.cast<double>(), rd.c), 1e-6);
}

}  // namespace
}  // namespace sss
