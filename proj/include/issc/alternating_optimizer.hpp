#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "issc/array_channel.hpp"
#include "issc/conic_solver.hpp"
#include "issc/secrecy_metrics.hpp"

namespace issc {

struct OptimizerOptions {
  double tol_beams = 1e-3;    // relative Frobenius change closing the inner beamforming loop (W and R)
  double tol_lambda = 1e-4;
  double outer_tol = 1e-4;    // relative change of the true objective
  int max_outer = 50;
  int max_inner = 20;
  int randomization_draws = 100;
  double rank_one_ratio_tol = 1e-4;
  bool fix_rho = false;       // benchmark: ρ_k = 1, extraction ratio never updated
  bool rebalance_power = true;  // after step 3, see rebalance_power()
  std::uint64_t seed = 0;     // Gaussian randomization draws
  conic::Settings solver;

  void validate() const;
};

/// Iterate of the alternating scheme. b_points/c_points are the expansion
/// points B_k^i and C_k^i = 1 + λ_k of the current surrogate.
struct OptimizerState {
  std::vector<double> rhos;
  std::vector<double> lambdas;
  BeamformerSet beams;
  std::vector<double> b_points;
  std::vector<double> c_points;
  std::vector<double> objective_history;  // true unclamped objective after every outer iteration
  int outer_iter = 0;
  int inner_solves = 0;
};

/// Per-outer-iteration trace row.
struct IterationRecord {
  int iteration = 0;
  double objective = 0.0;
  std::vector<double> ssr;  // unclamped, per user
  std::vector<double> rhos;
  double comp_mw = 0.0;
  double cands_mw = 0.0;
  int inner_solves = 0;
};

struct OptimizerResult {
  OptimizerState state;           // SDR beams after the last outer iteration
  BeamformerSet rank_one_beams;   // after Gaussian randomization
  RateReport report;              // computed from rank_one_beams
  double randomization_ratio = 1.0;
  bool converged = false;
  std::vector<IterationRecord> trace;
};

/// A_k = h_k^H(Σ_j W_j + Σ_l R_l)h_k + σ_c², B_k = A_k − h_k^H W_k h_k.
double signal_plus_interference(const Scenario& scenario, const BeamformerSet& beams, std::size_t k);
double interference(const Scenario& scenario, const BeamformerSet& beams, std::size_t k);

/// Σ_k (1/ρ_k)(log2 A_k − log2 B_k − log2(1 + λ_k)) at the state's beams.
double true_objective(const OptimizerState& state, const Scenario& scenario);

/// Σ_k (1/ρ_k)[log2 A_k − log2 B_k^i − (B_k − B_k^i)/(B_k^i ln 2) − log2 C_k^i − (C_k − C_k^i)/(C_k^i ln 2)].
double surrogate_objective(const OptimizerState& state, const Scenario& scenario);

/// Convex beamforming subproblem at fixed ρ, λ and expansion points B^i.
/// Blocks are W_1..W_K followed by one aggregate sensing block R = Σ_l R_l;
/// only the sum enters the problem, and the returned beams split it as R/L.
conic::Problem beamforming_problem(const OptimizerState& state, const Scenario& scenario, const CMat& ref_cov);

/// Whether `beams` satisfies every constraint of the beamforming subproblem
/// at `state` within `tol` (scaled as in conic::max_violation).
bool beamforming_feasible(const OptimizerState& state, const Scenario& scenario, const CMat& ref_cov,
                          const BeamformerSet& beams, double tol = 1e-6);

/// Solve-and-relinearize loop. Each accepted solve never lowers the true
/// objective; stops when W and R move less than tol_beams (relative).
/// Throws InfeasibleError when the subproblem has no strictly feasible point.
BeamformerSet step1_beamforming(OptimizerState& state, const Scenario& scenario, const CMat& ref_cov,
                                const OptimizerOptions& options);

/// λ_k = max_l Γ_{l|k}.
std::vector<double> step2_lambda(const OptimizerState& state, const Scenario& scenario);

/// Extraction ratios maximizing Σ s_k/ρ_k over the BLEU/QoS box and the
/// computation-power budget P_t − P_c&s, with s_k the unclamped rate gap.
std::vector<double> step3_rho(const OptimizerState& state, const Scenario& scenario);

/// Step 1 spends the whole budget left by the computation power, which leaves
/// step 3 nothing to compress with. This re-solves the beamforming subproblem
/// with the power bound lowered by fractions of √(Nξ) (the most the mismatch
/// bound lets tr S drop), follows each with steps 2 and 3, and keeps the best
/// point whose true objective beats the current one. Returns whether the
/// state changed.
bool rebalance_power(OptimizerState& state, const Scenario& scenario, const CMat& ref_cov,
                     const OptimizerOptions& options);

/// Feasible starting iterate at ρ = 1 (see README for the construction).
OptimizerState initial_state(const Scenario& scenario, const CMat& ref_cov, const OptimizerOptions& options);

struct RandomizationResult {
  BeamformerSet beams;
  double ratio = 1.0;      // true objective at the rank-one beams over the SDR value
  bool from_draws = false; // false when the matched candidate won
};

/// Rank-one recovery of the W_k. Candidates w_k satisfy w_k w_k^H ⪯ W_k and
/// the sensing beams absorb Σ_k (W_k − w_k w_k^H), so power, mismatch and
/// every A_k are unchanged. The matched candidate W_k h_k / sqrt(h_k^H W_k h_k)
/// keeps each B_k as well; the Gaussian draws W_k^{1/2} z are scaled to the
/// largest multiple allowed. Candidates are kept when feasible for the
/// beamforming subproblem at `state` and ranked by the true objective.
RandomizationResult gaussian_randomization(const OptimizerState& state, const Scenario& scenario,
                                           const CMat& ref_cov, int draws, const OptimizerOptions& options);

OptimizerResult run(const Scenario& scenario, const CMat& ref_cov, const OptimizerOptions& options = {});

/// iteration,objective,ssr_<k>...,rho_<k>...,comp_mw,cands_mw,inner_solves
void write_iteration_csv(std::ostream& os, const std::vector<IterationRecord>& trace);

}  // namespace issc
