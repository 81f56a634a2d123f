#include "issc/sensing_reference.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace issc {

void SensingConfig::validate() const {
  if (!(sidelobe_margin_deg > 0.0)) throw DomainError("sensing config: sidelobe margin must be positive");
  if (!(grid_step_deg > 0.0 && grid_step_deg <= 180.0)) throw DomainError("sensing config: bad grid step");
  if (!(crosscorr_tol_rel > 0.0)) throw DomainError("sensing config: cross-correlation tolerance must be positive");
}

std::vector<double> sidelobe_region(const Scenario& scenario, const SensingConfig& config) {
  config.validate();
  std::vector<double> omega;
  const int steps = static_cast<int>(std::floor(180.0 / config.grid_step_deg + 1e-9));
  for (int i = 0; i <= steps; ++i) {
    const double deg = -90.0 + i * config.grid_step_deg;
    bool keep = true;
    for (double target : scenario.target_angles)
      if (std::abs(deg - rad_to_deg(target)) < config.sidelobe_margin_deg - 1e-9) keep = false;
    if (keep) omega.push_back(deg_to_rad(deg));
  }
  return omega;
}

conic::Problem reference_problem(const Scenario& scenario, const SensingConfig& config) {
  const int n = scenario.n_antennas();
  const double p_t = scenario.power_budget_mw;
  const double offset = p_t * n;
  const double eps = config.crosscorr_tol_rel * p_t;

  std::vector<CVec> targets;
  for (double th : scenario.target_angles) targets.push_back(steering_vector(scenario.geometry, th));

  conic::Problem pb;
  pb.block_sizes = {n, 1};
  pb.linear_objective.push_back({1, CMat::Ones(1, 1)});
  const CMat tau_coeff = CMat::Ones(1, 1);

  for (double side : sidelobe_region(scenario, config)) {
    const CVec am = steering_vector(scenario.geometry, side);
    const CMat sm = am * am.adjoint();
    for (std::size_t l = 0; l < targets.size(); ++l) {
      conic::AffineIneq c;
      c.name = "sidelobe(target " + std::to_string(l) + ", " + std::to_string(rad_to_deg(side)) + " deg)";
      c.expr.terms = {{0, sm - targets[l] * targets[l].adjoint()}, {1, tau_coeff}};
      c.bound = offset;
      pb.affine_ineqs.push_back(std::move(c));
    }
  }

  for (std::size_t l = 0; l < targets.size(); ++l) {
    for (std::size_t m = l + 1; m < targets.size(); ++m) {
      // a_l^H R a_m = tr(C0^H R) with C0 = a_l a_m^H.
      const CMat c0 = targets[l] * targets[m].adjoint();
      const CMat c_re = 0.5 * (c0 + c0.adjoint());
      const CMat c_im = (c0.adjoint() - c0) / cdouble(0.0, 2.0);
      const std::string tag = "(" + std::to_string(l) + "," + std::to_string(m) + ")";
      pb.affine_ineqs.push_back({"crosscorr_re+" + tag, {{{0, c_re}}, 0.0}, eps});
      pb.affine_ineqs.push_back({"crosscorr_re-" + tag, {{{0, -c_re}}, 0.0}, eps});
      pb.affine_ineqs.push_back({"crosscorr_im+" + tag, {{{0, c_im}}, 0.0}, eps});
      pb.affine_ineqs.push_back({"crosscorr_im-" + tag, {{{0, -c_im}}, 0.0}, eps});
    }
  }
  pb.affine_ineqs.push_back({"power", {{{0, CMat::Identity(n, n)}}, 0.0}, p_t});
  return pb;
}

ReferenceDesign design_reference_cov(const Scenario& scenario, const SensingConfig& config) {
  config.validate();
  scenario.geometry.validate();
  if (scenario.target_angles.empty()) throw DomainError("design_reference_cov: no targets");
  if (!(scenario.power_budget_mw > 0.0)) throw DomainError("design_reference_cov: power budget must be positive");
  const auto& th = scenario.target_angles;
  for (std::size_t i = 0; i < th.size(); ++i)
    for (std::size_t j = i + 1; j < th.size(); ++j)
      if (std::abs(rad_to_deg(th[i] - th[j])) < config.grid_step_deg) {
        std::ostringstream os;
        os << "targets " << i << " and " << j << " are closer than the grid resolution ("
           << config.grid_step_deg << " deg)";
        throw InfeasibleError("target_separation", os.str());
      }

  ReferenceDesign out;
  out.sidelobe_angles = sidelobe_region(scenario, config);
  if (out.sidelobe_angles.empty())
    throw InfeasibleError("sidelobe_region", "every grid angle lies within the margin of some target");
  out.crosscorr_tol = config.crosscorr_tol_rel * scenario.power_budget_mw;

  const conic::Problem pb = reference_problem(scenario, config);
  conic::Settings settings;
  settings.max_iter = 400;
  settings.mu_factor = 2.0;
  const conic::Solution sol = conic::solve(pb, settings);
  if (sol.status == conic::Status::infeasible) throw InfeasibleError("reference_design", sol.message);
  out.cov = sol.block_values[0];
  out.t = sol.block_values[1](0, 0).real() - scenario.power_budget_mw * scenario.n_antennas();
  out.status = sol.status;
  out.newton_steps = sol.newton_steps;
  out.kkt_residual = sol.kkt_residual;
  return out;
}

double mismatch(const CMat& ref_cov, const BeamformerSet& beams) {
  const CMat rx = transmit_covariance(beams);
  if (rx.rows() != ref_cov.rows() || rx.cols() != ref_cov.cols())
    throw DomainError("mismatch: dimension mismatch");
  return (ref_cov - rx).squaredNorm();
}

void write_complex_csv(std::ostream& os, const CMat& m) {
  std::ostringstream line;
  line.precision(17);
  for (int i = 0; i < m.rows(); ++i) {
    line.str("");
    for (int j = 0; j < m.cols(); ++j) {
      if (j) line << ',';
      line << m(i, j).real() << ',' << m(i, j).imag();
    }
    os << line.str() << '\n';
  }
}

CMat read_complex_csv(std::istream& is) {
  std::vector<std::vector<cdouble>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
    if (vals.size() % 2 != 0) throw DomainError("read_complex_csv: odd number of columns");
    std::vector<cdouble> row;
    for (std::size_t j = 0; j < vals.size(); j += 2) row.emplace_back(vals[j], vals[j + 1]);
    rows.push_back(std::move(row));
  }
  CMat m(static_cast<int>(rows.size()), rows.empty() ? 0 : static_cast<int>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != static_cast<std::size_t>(m.cols())) throw DomainError("read_complex_csv: ragged rows");
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
  }
  return m;
}

}  // namespace issc
