#include "issc/array_channel.hpp"

#include <random>
#include <sstream>
#include <string>

namespace issc {

namespace {

bool angle_in_range(double angle) { return std::abs(angle) <= kPi / 2.0 + 1e-12; }

void check_matrix(const CMat& m, int n, const std::string& what) {
  if (m.rows() != n || m.cols() != n) throw DomainError(what + ": wrong dimensions");
  if (!is_hermitian(m, 1e-10)) throw DomainError(what + ": not Hermitian");
  const double tr = std::max(0.0, trace_real(m));
  if (min_eigenvalue(m) < -1e-8 * std::max(tr, 1e-300))
    throw DomainError(what + ": not positive semidefinite");
}

}  // namespace

void ArrayGeometry::validate() const {
  if (n_antennas < 2) throw DomainError("array geometry: at least two antennas required");
  if (!(spacing_ratio > 0.0)) throw DomainError("array geometry: spacing ratio must be positive");
}

void Scenario::validate() const {
  geometry.validate();
  const std::size_t k = n_users();
  const std::size_t l = n_targets();
  if (k == 0) throw DomainError("scenario: at least one communication user required");
  if (l == 0) throw DomainError("scenario: at least one target required");
  for (double a : cu_angles)
    if (!angle_in_range(a)) throw DomainError("scenario: user angle outside [-pi/2, pi/2]");
  for (double a : target_angles)
    if (!angle_in_range(a)) throw DomainError("scenario: target angle outside [-pi/2, pi/2]");
  if (cu_gains.size() != k) throw DomainError("scenario: cu_gains length differs from user count");
  if (target_gains_alpha.size() != l || target_gains_beta.size() != l)
    throw DomainError("scenario: target gain lists differ from target count");
  if (semantic_profiles.size() != k)
    throw DomainError("scenario: one semantic profile per user required");
  auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  for (double g : cu_gains)
    if (!positive(g)) throw DomainError("scenario: user gains must be positive");
  for (double g : target_gains_alpha)
    if (!positive(g)) throw DomainError("scenario: target alpha gains must be positive");
  for (double g : target_gains_beta)
    if (!positive(g)) throw DomainError("scenario: target beta gains must be positive");
  if (!positive(sigma2_c) || !positive(sigma2_r)) throw DomainError("scenario: noise powers must be positive");
  if (!positive(power_budget_mw)) throw DomainError("scenario: power budget must be positive");
  if (!positive(qos_floor)) throw DomainError("scenario: QoS floor must be positive");
  if (!positive(mismatch_budget)) throw DomainError("scenario: mismatch budget must be positive");
  if (!positive(comp_coeff)) throw DomainError("scenario: computation coefficient must be positive");
  for (const auto& p : semantic_profiles) p.validate();
}

void BeamformerSet::validate() const {
  if (w_mats.empty() && r_mats.empty()) return;
  const int n = static_cast<int>(w_mats.empty() ? r_mats.front().rows() : w_mats.front().rows());
  for (std::size_t k = 0; k < w_mats.size(); ++k) check_matrix(w_mats[k], n, "W_" + std::to_string(k));
  for (std::size_t l = 0; l < r_mats.size(); ++l) check_matrix(r_mats[l], n, "R_" + std::to_string(l));
}

BeamformerSet BeamformerSet::scaled(double factor) const {
  BeamformerSet out = *this;
  for (auto& w : out.w_mats) w *= factor;
  for (auto& r : out.r_mats) r *= factor;
  return out;
}

CMat BeamformerSet::sensing_sum() const {
  const auto n = r_mats.empty() ? w_mats.front().rows() : r_mats.front().rows();
  CMat acc = CMat::Zero(n, n);
  for (const auto& r : r_mats) acc += r;
  return acc;
}

CMat BeamformerSet::comm_sum() const {
  const auto n = w_mats.empty() ? r_mats.front().rows() : w_mats.front().rows();
  CMat acc = CMat::Zero(n, n);
  for (const auto& w : w_mats) acc += w;
  return acc;
}

double BeamformerSet::total_power() const { return trace_real(transmit_covariance(*this)); }

CVec steering_vector(const ArrayGeometry& geometry, double angle) {
  if (!angle_in_range(angle)) {
    std::ostringstream os;
    os << "steering_vector: angle " << angle << " rad outside [-pi/2, pi/2]";
    throw DomainError(os.str());
  }
  const int n = geometry.n_antennas;
  CVec a(n);
  const double phase_step = 2.0 * kPi * geometry.spacing_ratio * std::sin(angle);
  for (int m = 0; m < n; ++m) a(m) = std::polar(1.0, phase_step * m);
  return a;
}

CVec cu_channel(const Scenario& scenario, std::size_t k) {
  if (k >= scenario.n_users()) throw std::out_of_range("cu_channel: user index out of range");
  const double amp = std::sqrt(scenario.cu_gains[k]);
  if (scenario.channel_model == ChannelModel::los)
    return amp * steering_vector(scenario.geometry, scenario.cu_angles[k]);

  // Independent stream per user, derived from the scenario seed.
  std::seed_seq seq{static_cast<std::uint32_t>(scenario.seed), static_cast<std::uint32_t>(scenario.seed >> 32),
                    static_cast<std::uint32_t>(k), 0x52a7u};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  CVec h(scenario.n_antennas());
  for (int m = 0; m < h.size(); ++m) h(m) = cdouble(normal(rng), normal(rng));
  return amp * h;
}

CVec target_channel(const Scenario& scenario, std::size_t l) {
  if (l >= scenario.n_targets()) throw std::out_of_range("target_channel: target index out of range");
  return scenario.target_gains_alpha[l] * steering_vector(scenario.geometry, scenario.target_angles[l]);
}

CMat transmit_covariance(const BeamformerSet& beams) {
  const auto n = beams.w_mats.empty() ? beams.r_mats.front().rows() : beams.w_mats.front().rows();
  CMat rx = CMat::Zero(n, n);
  for (const auto& w : beams.w_mats) rx += w;
  for (const auto& r : beams.r_mats) rx += r;
  return rx;
}

std::vector<double> beampattern(const ArrayGeometry& geometry, const CMat& cov,
                                std::span<const double> angles) {
  if (cov.rows() != geometry.n_antennas || cov.cols() != geometry.n_antennas)
    throw DomainError("beampattern: covariance dimension differs from the array size");
  if (!is_hermitian(cov, 1e-10)) throw DomainError("beampattern: covariance is not Hermitian");
  std::vector<double> out;
  out.reserve(angles.size());
  for (double phi : angles) {
    const CVec a = steering_vector(geometry, phi);
    out.push_back((a.adjoint() * cov * a)(0, 0).real());
  }
  return out;
}

std::vector<double> default_angle_grid() {
  std::vector<double> grid;
  grid.reserve(181);
  for (int d = -90; d <= 90; ++d) grid.push_back(deg_to_rad(d));
  return grid;
}

}  // namespace issc
