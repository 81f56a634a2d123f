#pragma once

#include <iosfwd>
#include <vector>

#include "issc/array_channel.hpp"
#include "issc/conic_solver.hpp"

namespace issc {

struct SensingConfig {
  double sidelobe_margin_deg = 5.0;  // half-width excluded around each target
  double grid_step_deg = 1.0;
  double crosscorr_tol_rel = 1e-6;   // ε = crosscorr_tol_rel · P_t

  void validate() const;
};

struct ReferenceDesign {
  CMat cov;                               // R_d
  double t = 0.0;                         // achieved mainlobe-to-sidelobe margin, mW
  std::vector<double> sidelobe_angles;    // Ω, radians
  double crosscorr_tol = 0.0;             // ε used, mW
  conic::Status status = conic::Status::max_iter;
  int newton_steps = 0;
  double kkt_residual = 0.0;
};

/// Sidelobe region Ω: grid angles at least the margin away from every target.
std::vector<double> sidelobe_region(const Scenario& scenario, const SensingConfig& config);

/// Canonical form of the sensing-only beampattern design. Blocks: R_d (N×N)
/// and a 1×1 block τ = t + P_t·N, so τ ≥ 0 never binds.
conic::Problem reference_problem(const Scenario& scenario, const SensingConfig& config);

/// Maximizes the worst mainlobe-to-sidelobe gap subject to the power budget
/// and the (tolerance-banded) zero cross-correlation between target beams.
/// Throws InfeasibleError for unresolvable geometry or solver failure.
ReferenceDesign design_reference_cov(const Scenario& scenario, const SensingConfig& config = {});

/// ‖R_d − (Σ W_k + Σ R_l)‖_F².
double mismatch(const CMat& ref_cov, const BeamformerSet& beams);

/// Writes a complex matrix as CSV, each row holding re,im pairs per column.
void write_complex_csv(std::ostream& os, const CMat& m);
CMat read_complex_csv(std::istream& is);

}  // namespace issc
