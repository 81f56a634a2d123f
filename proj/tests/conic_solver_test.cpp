#include "issc/conic_solver.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

using namespace issc;
using namespace issc::conic;

namespace {

CMat random_hermitian(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  CMat a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = cdouble(g(rng), g(rng));
  return 0.5 * (a + a.adjoint());
}

Affine trace_of(std::size_t block, int n) { return Affine{{{block, CMat::Identity(n, n)}}, 0.0}; }

double rel_err(double a, double b) { return std::abs(a - b) / (1.0 + std::abs(b)); }

// Water-filling: maximize Σ ln(1 + g_i x_i), Σ x_i ≤ p, found by bisection on the level.
double water_filling(const std::vector<double>& g, double p) {
  double lo = 0.0, hi = p + 1.0 / *std::min_element(g.begin(), g.end());
  for (int it = 0; it < 200; ++it) {
    const double nu = 0.5 * (lo + hi);
    double used = 0.0;
    for (double gi : g) used += std::max(0.0, nu - 1.0 / gi);
    (used > p ? hi : lo) = nu;
  }
  double v = 0.0;
  for (double gi : g) v += std::log(1.0 + gi * std::max(0.0, lo - 1.0 / gi));
  return v;
}

}  // namespace

TEST(ConicSolver, MatchedLogObjective) {
  CVec h(2);
  h << cdouble(1.0, 0.0), cdouble(0.3, -0.4);
  const CMat hh = h * h.adjoint();
  const double p = 2.0;
  Problem pb;
  pb.block_sizes = {2};
  pb.log_terms.push_back({1.0, Affine{{{0, hh}}, 1.0}});
  pb.affine_ineqs.push_back({"power", trace_of(0, 2), p});
  const auto sol = solve(pb);
  ASSERT_EQ(sol.status, Status::optimal) << sol.message;
  EXPECT_NEAR(sol.objective, std::log(p * h.squaredNorm() + 1.0), 1e-6);
}

TEST(ConicSolver, TraceBoundLinearObjectiveHitsTopEigenvalue) {
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 5; ++rep) {
    const int n = 3 + rep % 3;
    const CMat c = random_hermitian(n, rng);
    Problem pb;
    pb.block_sizes = {n};
    pb.linear_objective.push_back({0, c});
    pb.affine_ineqs.push_back({"power", trace_of(0, n), 2.0});
    const auto sol = solve(pb);
    ASSERT_EQ(sol.status, Status::optimal) << sol.message;
    const double lmax = Eigen::SelfAdjointEigenSolver<CMat>(c).eigenvalues().maxCoeff();
    EXPECT_LT(rel_err(sol.objective, 2.0 * std::max(lmax, 0.0)), 1e-5);
  }
}

TEST(ConicSolver, WaterFillingOracle) {
  const std::vector<double> g{4.0, 1.0, 0.25, 2.5};
  for (double p : {0.3, 1.0, 5.0}) {
    Problem pb;
    pb.block_sizes = {1, 1, 1, 1};
    Affine total;
    for (std::size_t i = 0; i < 4; ++i) {
      pb.log_terms.push_back({1.0, Affine{{{i, CMat::Constant(1, 1, g[i])}}, 1.0}});
      total.terms.push_back({i, CMat::Identity(1, 1)});
    }
    pb.affine_ineqs.push_back({"power", total, p});
    const auto sol = solve(pb);
    ASSERT_EQ(sol.status, Status::optimal) << sol.message;
    EXPECT_LT(rel_err(sol.objective, water_filling(g, p)), 1e-5) << "p=" << p;
  }
}

TEST(ConicSolver, LogInequalityMinimumPower) {
  // min tr X s.t. ln(h^H X h) ≥ ln γ  →  γ / ‖h‖².
  CVec h(3);
  h << cdouble(0.5, 0.1), cdouble(-0.2, 0.7), cdouble(0.3, 0.0);
  const double gamma = 3.0;
  Problem pb;
  pb.block_sizes = {3};
  pb.linear_objective.push_back({0, -CMat::Identity(3, 3)});
  pb.log_ineqs.push_back({"qos", 1.0, Affine{{{0, h * h.adjoint()}}, 0.0}, Affine{}, std::log(gamma)});
  pb.affine_ineqs.push_back({"power", trace_of(0, 3), 100.0});
  const auto sol = solve(pb);
  ASSERT_EQ(sol.status, Status::optimal) << sol.message;
  EXPECT_LT(rel_err(sol.objective, -gamma / h.squaredNorm()), 1e-5);
  EXPECT_LT(max_violation(pb, sol.block_values), 1e-6);
}

TEST(ConicSolver, FrobeniusBallClosedForm) {
  // max ⟨C, X⟩ over ‖X − c0·I‖_F ≤ r: X = c0·I + r·C/‖C‖, PSD since c0 > r.
  std::mt19937_64 rng(7);
  const int n = 4;
  const CMat c = random_hermitian(n, rng);
  const double c0 = 5.0, r = 1.5;
  Problem pb;
  pb.block_sizes = {n};
  pb.linear_objective.push_back({0, c});
  pb.frob_ball = FrobBall{"ball", {1.0}, c0 * CMat::Identity(n, n), r * r};
  const auto sol = solve(pb);
  ASSERT_EQ(sol.status, Status::optimal) << sol.message;
  const double expect = c0 * c.trace().real() + r * c.norm();
  EXPECT_LT(rel_err(sol.objective, expect), 1e-5);
  const CMat x = c0 * CMat::Identity(n, n) + r * c / c.norm();
  EXPECT_LT((sol.block_values[0] - x).norm(), 1e-2);
}

TEST(ConicSolver, ContradictoryBoundsAreInfeasible) {
  Problem pb;
  pb.block_sizes = {2};
  pb.linear_objective.push_back({0, CMat::Identity(2, 2)});
  pb.affine_ineqs.push_back({"upper", trace_of(0, 2), 1.0});
  Affine neg{{{0, -CMat::Identity(2, 2)}}, 0.0};
  pb.affine_ineqs.push_back({"lower", neg, -2.0});
  EXPECT_THROW(strict_feasible_start(pb), InfeasibleError);
  const auto sol = solve(pb);
  EXPECT_EQ(sol.status, Status::infeasible);
  EXPECT_FALSE(sol.binding_constraint.empty());
}

TEST(ConicSolver, StrictStartHasPositiveSlacks) {
  Problem pb;
  pb.block_sizes = {3, 2};
  pb.affine_ineqs.push_back({"power", Affine{{{0, CMat::Identity(3, 3)}, {1, CMat::Identity(2, 2)}}, 0.0}, 1e-3});
  const auto x = strict_feasible_start(pb);
  ASSERT_EQ(x.size(), 2u);
  for (const auto& s : constraint_slacks(pb, x)) EXPECT_GT(s.slack, 0.0) << s.name;
  EXPECT_GT(min_eigenvalue(x[0]), 0.0);
  EXPECT_GT(min_eigenvalue(x[1]), 0.0);
}

TEST(ConicSolver, CertifyAcceptsOptimumAndRejectsInterior) {
  std::mt19937_64 rng(3);
  const CMat c = random_hermitian(3, rng);
  Problem pb;
  pb.block_sizes = {3};
  pb.linear_objective.push_back({0, c});
  pb.log_terms.push_back({1.0, Affine{{{0, CMat::Identity(3, 3)}}, 0.5}});
  pb.affine_ineqs.push_back({"power", trace_of(0, 3), 1.0});
  const auto sol = solve(pb);
  ASSERT_EQ(sol.status, Status::optimal) << sol.message;
  EXPECT_TRUE(certify(pb, sol.block_values, 1e-4).passed);
  const std::vector<CMat> interior{0.05 * CMat::Identity(3, 3)};
  EXPECT_FALSE(certify(pb, interior, 1e-4).passed);
}

TEST(ConicSolver, BlockOrderDoesNotMatter) {
  std::mt19937_64 rng(12);
  const CMat c0 = random_hermitian(2, rng), c1 = random_hermitian(3, rng);
  auto build = [&](bool swap) {
    const std::size_t b0 = swap ? 1 : 0, b1 = swap ? 0 : 1;
    Problem pb;
    pb.block_sizes = swap ? std::vector<int>{3, 2} : std::vector<int>{2, 3};
    pb.linear_objective.push_back({b0, c0});
    pb.linear_objective.push_back({b1, c1});
    pb.log_terms.push_back({1.0, Affine{{{b0, CMat::Identity(2, 2)}, {b1, CMat::Identity(3, 3)}}, 0.1}});
    pb.affine_ineqs.push_back({"power", Affine{{{b0, CMat::Identity(2, 2)}, {b1, CMat::Identity(3, 3)}}, 0.0}, 2.0});
    return solve(pb);
  };
  const auto a = build(false), b = build(true);
  ASSERT_EQ(a.status, Status::optimal);
  ASSERT_EQ(b.status, Status::optimal);
  EXPECT_LT(rel_err(a.objective, b.objective), 1e-6);
}

TEST(ConicSolver, StageObjectivesIncreaseAndTraceIsWritten) {
  std::mt19937_64 rng(5);
  Problem pb;
  pb.block_sizes = {4};
  pb.linear_objective.push_back({0, random_hermitian(4, rng)});
  pb.affine_ineqs.push_back({"power", trace_of(0, 4), 3.0});
  Settings st;
  st.record_trace = true;
  int observed = 0;
  st.observer = [&](const Problem&, const Solution& s) {
    ++observed;
    EXPECT_EQ(s.status, Status::optimal);
  };
  const auto sol = solve(pb, st);
  ASSERT_EQ(sol.status, Status::optimal);
  EXPECT_EQ(observed, 1);
  ASSERT_GE(sol.stage_objectives.size(), 2u);
  for (std::size_t i = 1; i < sol.stage_objectives.size(); ++i)
    EXPECT_GE(sol.stage_objectives[i], sol.stage_objectives[i - 1] - 1e-9 * (1.0 + std::abs(sol.objective)));
  EXPECT_LE(sol.kkt_residual, st.tol);
  ASSERT_FALSE(sol.trace.empty());
  std::ostringstream os;
  write_trace_csv(os, sol);
  const std::string text = os.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "stage,newton_step,mu,merit,objective,min_eigenvalue,max_violation");
  EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), sol.trace.size() + 1);
}

TEST(ConicSolver, IterationCapReportsMaxIter) {
  std::mt19937_64 rng(2);
  Problem pb;
  pb.block_sizes = {4};
  pb.linear_objective.push_back({0, random_hermitian(4, rng)});
  pb.affine_ineqs.push_back({"power", trace_of(0, 4), 3.0});
  Settings st;
  st.max_iter = 2;
  EXPECT_EQ(solve(pb, st).status, Status::max_iter);
}

TEST(ConicSolver, ValidateRejectsMalformedProblems) {
  Problem pb;
  pb.block_sizes = {2};
  CMat bad = CMat::Identity(2, 2);
  bad(0, 1) = cdouble(1.0, 0.0);
  pb.linear_objective.push_back({0, bad});
  EXPECT_THROW(pb.validate(), DomainError);
  Problem wrong_size;
  wrong_size.block_sizes = {2};
  wrong_size.linear_objective.push_back({0, CMat::Identity(3, 3)});
  EXPECT_THROW(wrong_size.validate(), DomainError);
  Problem wrong_block;
  wrong_block.block_sizes = {2};
  wrong_block.linear_objective.push_back({4, CMat::Identity(2, 2)});
  EXPECT_THROW(wrong_block.validate(), DomainError);
}
