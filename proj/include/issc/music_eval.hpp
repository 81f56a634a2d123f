#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "issc/array_channel.hpp"

namespace issc {

struct MusicResult {
  std::vector<double> grid_deg;
  std::vector<double> pseudospectrum_db;
  std::vector<double> peak_angles_deg;  // local maxima above median + 10 dB, ascending
  std::vector<double> peak_errors_deg;  // per true angle, distance to the nearest of the n_targets largest peaks
};

/// N×T echo snapshots. Each column is Σ_l β_l a(θ_l)a^H(θ_l)x(t) + n(t), with
/// x(t) = Σ_k W_k^{1/2}c_k(t) + Σ_l R_l^{1/2}z_l(t) for i.i.d. CN(0, I)
/// symbols and n(t) ~ CN(0, σ_r² I). Deterministic given the seed.
CMat simulate_echoes(const Scenario& scenario, const BeamformerSet& beams, int snapshots, std::uint64_t seed);

/// MUSIC pseudospectrum 1/(a^H E_n E_n^H a) on a grid from −90° to 90°, with
/// E_n the N − n_targets weakest eigenvectors of the sample covariance.
/// `true_angles_rad` is optional and only fills peak_errors_deg.
MusicResult music_spectrum(const ArrayGeometry& geometry, const CMat& echoes, std::size_t n_targets,
                           double grid_step_deg = 0.5, std::span<const double> true_angles_rad = {});

/// The `count` highest peaks of `result`, ascending by angle.
std::vector<double> largest_peaks(const MusicResult& result, std::size_t count);

/// angle_deg,spectrum_db
void write_music_csv(std::ostream& os, const MusicResult& result);

}  // namespace issc
