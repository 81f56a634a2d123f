#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "issc/linalg.hpp"
#include "issc/semantic_metrics.hpp"

namespace issc {

/// Uniform linear array. Only the spacing-to-wavelength ratio d/λ matters.
struct ArrayGeometry {
  int n_antennas = 18;
  double spacing_ratio = 0.5;

  void validate() const;
};

enum class ChannelModel {
  los,       // h_k = sqrt(g_k)·a(θ_k)
  rayleigh,  // h_k = sqrt(g_k)·CN(0, I), drawn from the scenario seed
};

/// Complete experiment description. Powers and noise are in mW; angles in
/// radians.
struct Scenario {
  ArrayGeometry geometry;
  std::vector<double> cu_angles;
  std::vector<double> target_angles;
  std::vector<double> cu_gains;            // power gains
  std::vector<double> target_gains_alpha;  // downlink amplitude coefficients
  std::vector<double> target_gains_beta;   // echo amplitude coefficients
  double sigma2_c = 1e-6;
  double sigma2_r = 1e-6;
  double power_budget_mw = 100.0;
  double qos_floor = 1.0;        // ς, bits/s/Hz
  double mismatch_budget = 5.0;  // ξ, mW²
  double comp_coeff = 10.0;      // F, mW per nat
  std::vector<SemanticProfile> semantic_profiles;
  std::uint64_t seed = 0;
  ChannelModel channel_model = ChannelModel::los;

  std::size_t n_users() const { return cu_angles.size(); }
  std::size_t n_targets() const { return target_angles.size(); }
  int n_antennas() const { return geometry.n_antennas; }

  /// Throws DomainError on any violated invariant.
  void validate() const;
};

/// Communication beams W_k and sensing beams R_l (mW scale).
struct BeamformerSet {
  std::vector<CMat> w_mats;
  std::vector<CMat> r_mats;

  /// Hermitian within 1e-10 relative and min eigenvalue ≥ −1e-8·trace.
  void validate() const;
  BeamformerSet scaled(double factor) const;
  CMat sensing_sum() const;
  CMat comm_sum() const;
  double total_power() const;
};

CVec steering_vector(const ArrayGeometry& geometry, double angle);
CVec cu_channel(const Scenario& scenario, std::size_t k);
CVec target_channel(const Scenario& scenario, std::size_t l);
CMat transmit_covariance(const BeamformerSet& beams);

/// p(φ) = a^H(φ)·cov·a(φ) for every angle in `angles`.
std::vector<double> beampattern(const ArrayGeometry& geometry, const CMat& cov,
                                std::span<const double> angles);

/// 181-point grid, −90° to 90° in 1° steps, in radians.
std::vector<double> default_angle_grid();

}  // namespace issc
