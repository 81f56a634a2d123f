#pragma once

#include <span>
#include <vector>

#include "issc/array_channel.hpp"

namespace issc {

struct RateReport {
  std::vector<double> per_user_sinr;            // γ_k
  std::vector<std::vector<double>> eav_snr;     // Γ_{l|k}, indexed [k][l]
  std::vector<double> semantic_rates;           // S_k
  std::vector<std::vector<double>> eav_rates;   // S_{l|k}, indexed [k][l]
  std::vector<double> ssr;                      // worst-case SSR, clamped at 0
  std::vector<double> ssr_unclamped;            // S_k − max_l S_{l|k}

  double sum_ssr() const;
  double sum_unclamped() const;
};

double cu_sinr(const Scenario& scenario, const BeamformerSet& beams, std::size_t k);
double eav_snr(const Scenario& scenario, const BeamformerSet& beams, std::size_t k, std::size_t l);

/// Worst-case semantic secrecy rate of every user against every target.
RateReport worst_case_ssr(const Scenario& scenario, const BeamformerSet& beams,
                          std::span<const double> rhos);

}  // namespace issc
