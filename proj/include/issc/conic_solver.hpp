#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "issc/linalg.hpp"

// Primal log-barrier interior-point solver for the convex family
//
//   maximize    Σ_b ⟨L_b, X_b⟩ + Σ_t w_t ln(a_t(X))
//   subject to  a_i(X) ≤ bound_i                          (affine)
//               w_j ln(a_j(X)) + d_j(X) ≥ bound_j         (concave "log" form)
//               ‖Σ_b s_b X_b − C‖_F² ≤ r²                 (Frobenius ball)
//               X_b Hermitian PSD
//
// where every a(·), d(·) is affine: Σ_b ⟨C_b, X_b⟩ + offset with Hermitian
// C_b and ⟨A, B⟩ = Re tr(A^H B). Hermitian blocks are parameterized by their
// real diagonal and the real/imaginary parts of the strict upper triangle.
// Newton systems are formed in coordinates X_b = L_b U_b L_b^H around the
// current iterate (L_b the Cholesky factor), which keeps the log-det part of
// the Hessian equal to the identity metric.

namespace issc::conic {

/// Coefficient matrix attached to one block.
struct BlockTerm {
  std::size_t block = 0;
  CMat coeff;
};

/// Affine functional Σ ⟨coeff, X_block⟩ + offset. Blocks not listed contribute 0.
struct Affine {
  std::vector<BlockTerm> terms;
  double offset = 0.0;
};

/// weight · ln(arg(X)), weight > 0.
struct LogTerm {
  double weight = 1.0;
  Affine arg;
};

/// expr(X) ≤ bound.
struct AffineIneq {
  std::string name;
  Affine expr;
  double bound = 0.0;
};

/// weight·ln(log_arg(X)) + linear(X) ≥ bound.
struct LogIneq {
  std::string name;
  double weight = 1.0;
  Affine log_arg;
  Affine linear;
  double bound = 0.0;
};

/// ‖Σ_b block_weights[b]·X_b − center‖_F² ≤ radius2. A zero weight leaves the
/// block out; all participating blocks must share the center's size.
struct FrobBall {
  std::string name = "frobenius_ball";
  std::vector<double> block_weights;
  CMat center;
  double radius2 = 1.0;
};

struct Problem {
  std::vector<int> block_sizes;
  std::vector<BlockTerm> linear_objective;
  std::vector<LogTerm> log_terms;
  std::vector<AffineIneq> affine_ineqs;
  std::vector<LogIneq> log_ineqs;
  std::optional<FrobBall> frob_ball;
  /// Point near which strict_feasible_start looks first. Need not be feasible.
  std::vector<CMat> start_hint;

  std::size_t n_blocks() const { return block_sizes.size(); }
  /// Hermitian coefficients, consistent sizes; throws DomainError otherwise.
  void validate() const;
};

enum class Status { optimal, infeasible, max_iter };

const char* to_string(Status s);

struct TraceRecord {
  int stage = 0;         // −1 for phase-1 iterations
  int newton_step = 0;   // global step counter
  double mu = 0.0;
  double merit = 0.0;    // objective + μ·(Σ ln det + Σ ln slack)
  double objective = 0.0;
  double min_eigenvalue = 0.0;
  double max_violation = 0.0;
};

struct Solution {
  std::vector<CMat> block_values;
  double objective = 0.0;
  /// Relative duality-gap bound ν·μ / (1 + |objective|) of the last centered stage.
  double kkt_residual = 0.0;
  Status status = Status::max_iter;
  int newton_steps = 0;
  std::string message;
  /// Tightest constraint when status is infeasible.
  std::string binding_constraint;
  /// Objective at the end of each barrier stage (central-path values).
  std::vector<double> stage_objectives;
  std::vector<TraceRecord> trace;
};

struct Settings {
  double tol = 1e-6;
  int max_iter = 200;
  double mu0 = 1.0;
  /// Barrier parameter divisor between stages. Problems with hundreds of
  /// constraints center faster with a small factor.
  double mu_factor = 10.0;
  bool record_trace = false;
  /// Called with every finished solve, infeasible ones included.
  std::function<void(const Problem&, const Solution&)> observer;
};

double evaluate(const Affine& a, std::span<const CMat> blocks);
double objective_value(const Problem& problem, std::span<const CMat> blocks);

struct ConstraintStatus {
  std::string name;
  double slack = 0.0;  // positive when satisfied
  double scale = 1.0;  // max(1, |bound|)
};

/// Slack of every scalar constraint (ball included) at `blocks`.
std::vector<ConstraintStatus> constraint_slacks(const Problem& problem, std::span<const CMat> blocks);

/// Largest scaled violation max(0, −slack/scale), also covering PSD blocks
/// through −λ_min / max(1, tr).
double max_violation(const Problem& problem, std::span<const CMat> blocks);

/// Strictly feasible PD blocks (every constraint slack positive). Tries the
/// start hint, then scaled identities, then a phase-1 barrier problem that
/// maximizes the minimum normalized slack. Throws InfeasibleError naming the
/// tightest constraint when no strictly feasible point exists.
std::vector<CMat> strict_feasible_start(const Problem& problem, const Settings& settings = {});

Solution solve(const Problem& problem, const Settings& settings = {});

struct CertificateReport {
  bool passed = false;
  double max_gain = 0.0;       // best objective improvement found
  double allowed_gain = 0.0;   // tol·(1 + |objective|)
  double max_violation = 0.0;
  int directions = 0;
};

/// First-order optimality probe: walks `n_directions` deterministic
/// directions (objective gradient, its mixtures with random Hermitian
/// perturbations, and pure random ones) as far as feasibility allows and
/// records the largest objective gain.
CertificateReport certify(const Problem& problem, std::span<const CMat> blocks, double tol,
                          int n_directions = 64, std::uint64_t seed = 0x5eed);

/// stage,newton_step,mu,merit,objective,min_eigenvalue,max_violation
void write_trace_csv(std::ostream& os, const Solution& solution);

}  // namespace issc::conic
