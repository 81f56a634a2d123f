#include "issc/music_eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

namespace issc {

namespace {

CMat psd_sqrt(const CMat& m) {
  Eigen::SelfAdjointEigenSolver<CMat> es(hermitian_part(m));
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
         es.eigenvectors().adjoint();
}

double peak_value(const MusicResult& r, double angle) {
  const auto it = std::lower_bound(r.grid_deg.begin(), r.grid_deg.end(), angle - 1e-9);
  return r.pseudospectrum_db[static_cast<std::size_t>(it - r.grid_deg.begin())];
}

}  // namespace

CMat simulate_echoes(const Scenario& sc, const BeamformerSet& beams, int snapshots, std::uint64_t seed) {
  const int n = sc.n_antennas();
  if (snapshots < n) throw DomainError("simulate_echoes: need at least as many snapshots as antennas");
  if (beams.r_mats.size() != sc.n_targets()) throw DomainError("simulate_echoes: one sensing beam per target");
  if (sc.target_gains_beta.size() != sc.n_targets()) throw DomainError("simulate_echoes: one echo gain per target");

  std::vector<CMat> factors;
  for (const auto& w : beams.w_mats) factors.push_back(psd_sqrt(w));
  for (const auto& r : beams.r_mats) factors.push_back(psd_sqrt(r));
  CMat echo_op = CMat::Zero(n, n);
  for (std::size_t l = 0; l < sc.n_targets(); ++l) {
    const CVec a = steering_vector(sc.geometry, sc.target_angles[l]);
    echo_op += sc.target_gains_beta[l] * (a * a.adjoint());
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, std::sqrt(0.5));
  std::normal_distribution<double> noise(0.0, std::sqrt(0.5 * sc.sigma2_r));
  auto draw = [&](std::normal_distribution<double>& d) {
    CVec v(n);
    for (int i = 0; i < n; ++i) v(i) = cdouble(d(rng), d(rng));
    return v;
  };

  CMat y(n, snapshots);
  for (int t = 0; t < snapshots; ++t) {
    CVec x = CVec::Zero(n);
    for (const auto& f : factors) x += f * draw(unit);
    y.col(t) = echo_op * x + draw(noise);
  }
  return y;
}

MusicResult music_spectrum(const ArrayGeometry& geometry, const CMat& echoes, std::size_t n_targets,
                           double grid_step_deg, std::span<const double> true_angles_rad) {
  geometry.validate();
  const int n = geometry.n_antennas;
  if (echoes.rows() != n) throw DomainError("music_spectrum: echo rows differ from the array size");
  if (n_targets == 0 || static_cast<int>(n_targets) >= n)
    throw DomainError("music_spectrum: need 0 < n_targets < N");
  if (!(grid_step_deg > 0.0 && grid_step_deg <= 180.0)) throw DomainError("music_spectrum: bad grid step");

  const CMat cov = echoes * echoes.adjoint() / static_cast<double>(echoes.cols());
  Eigen::SelfAdjointEigenSolver<CMat> es(hermitian_part(cov));
  const RVec ev = es.eigenvalues();
  const double top = ev(n - 1);
  const double weakest_signal = ev(n - static_cast<int>(n_targets));
  if (!(top > 0.0) || !(weakest_signal > 1e-12 * top)) {
    std::ostringstream os;
    os << "music_spectrum: insufficient excitation, sample covariance has fewer than " << n_targets
       << " significant eigenvalues";
    throw DomainError(os.str());
  }
  const CMat noise_basis = es.eigenvectors().leftCols(n - static_cast<int>(n_targets));

  MusicResult r;
  const int steps = static_cast<int>(std::floor(180.0 / grid_step_deg + 1e-9));
  for (int i = 0; i <= steps; ++i) {
    const double deg = -90.0 + i * grid_step_deg;
    const CVec a = steering_vector(geometry, deg_to_rad(deg));
    const double proj = (noise_basis.adjoint() * a).squaredNorm();
    r.grid_deg.push_back(deg);
    r.pseudospectrum_db.push_back(-10.0 * std::log10(std::max(proj, 1e-300)));
  }

  std::vector<double> sorted = r.pseudospectrum_db;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const double threshold = sorted[sorted.size() / 2] + 10.0;
  const auto& p = r.pseudospectrum_db;
  for (std::size_t i = 1; i + 1 < p.size(); ++i)
    if (p[i] > p[i - 1] && p[i] >= p[i + 1] && p[i] > threshold) r.peak_angles_deg.push_back(r.grid_deg[i]);

  const std::vector<double> best = largest_peaks(r, n_targets);
  for (double truth : true_angles_rad) {
    double e = std::numeric_limits<double>::infinity();
    for (double pk : best) e = std::min(e, std::abs(pk - rad_to_deg(truth)));
    r.peak_errors_deg.push_back(e);
  }
  return r;
}

std::vector<double> largest_peaks(const MusicResult& result, std::size_t count) {
  std::vector<double> peaks = result.peak_angles_deg;
  std::stable_sort(peaks.begin(), peaks.end(),
                   [&](double a, double b) { return peak_value(result, a) > peak_value(result, b); });
  if (peaks.size() > count) peaks.resize(count);
  std::sort(peaks.begin(), peaks.end());
  return peaks;
}

void write_music_csv(std::ostream& os, const MusicResult& result) {
  os << "angle_deg,spectrum_db\n";
  std::ostringstream line;
  line.precision(17);
  for (std::size_t i = 0; i < result.grid_deg.size(); ++i) {
    line.str("");
    line << result.grid_deg[i] << ',' << result.pseudospectrum_db[i];
    os << line.str() << '\n';
  }
}

}  // namespace issc
