#include "issc/secrecy_metrics.hpp"

#include <algorithm>
#include <numeric>

namespace issc {

namespace {

double quad(const CVec& h, const CMat& m) { return (h.adjoint() * m * h)(0, 0).real(); }

}  // namespace

double RateReport::sum_ssr() const { return std::accumulate(ssr.begin(), ssr.end(), 0.0); }

double RateReport::sum_unclamped() const {
  return std::accumulate(ssr_unclamped.begin(), ssr_unclamped.end(), 0.0);
}

double cu_sinr(const Scenario& scenario, const BeamformerSet& beams, std::size_t k) {
  if (k >= beams.w_mats.size()) throw std::out_of_range("cu_sinr: user index out of range");
  const CVec h = cu_channel(scenario, k);
  const double signal = quad(h, beams.w_mats[k]);
  double interference = 0.0;
  for (std::size_t j = 0; j < beams.w_mats.size(); ++j)
    if (j != k) interference += quad(h, beams.w_mats[j]);
  for (const auto& r : beams.r_mats) interference += quad(h, r);
  return std::max(0.0, signal) / (std::max(0.0, interference) + scenario.sigma2_c);
}

double eav_snr(const Scenario& scenario, const BeamformerSet& beams, std::size_t k, std::size_t l) {
  if (k >= beams.w_mats.size()) throw std::out_of_range("eav_snr: user index out of range");
  const CVec h = target_channel(scenario, l);
  const double leak = quad(h, beams.w_mats[k]);
  double noise = scenario.sigma2_r;
  for (const auto& r : beams.r_mats) noise += std::max(0.0, quad(h, r));
  return std::max(0.0, leak) / noise;
}

RateReport worst_case_ssr(const Scenario& scenario, const BeamformerSet& beams,
                          std::span<const double> rhos) {
  const std::size_t users = beams.w_mats.size();
  const std::size_t targets = scenario.n_targets();
  if (rhos.size() != users) throw DomainError("worst_case_ssr: one extraction ratio per user required");
  RateReport rep;
  rep.eav_snr.assign(users, std::vector<double>(targets, 0.0));
  rep.eav_rates.assign(users, std::vector<double>(targets, 0.0));
  for (std::size_t k = 0; k < users; ++k) {
    const double rho = rhos[k];
    const double sinr = cu_sinr(scenario, beams, k);
    rep.per_user_sinr.push_back(sinr);
    rep.semantic_rates.push_back(semantic_rate(rho, sinr));
    double worst = 0.0;
    for (std::size_t l = 0; l < targets; ++l) {
      rep.eav_snr[k][l] = eav_snr(scenario, beams, k, l);
      rep.eav_rates[k][l] = semantic_rate(rho, rep.eav_snr[k][l]);
      worst = std::max(worst, rep.eav_rates[k][l]);
    }
    const double gap = rep.semantic_rates[k] - worst;
    rep.ssr_unclamped.push_back(gap);
    rep.ssr.push_back(std::max(0.0, gap));
  }
  return rep;
}

}  // namespace issc
