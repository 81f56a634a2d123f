#include "issc/semantic_metrics.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "issc/linalg.hpp"

namespace issc {

double SemanticProfile::log_precision() const {
  double acc = 0.0;
  for (std::size_t g = 0; g < weights.size(); ++g) acc += weights[g] * std::log(precisions[g]);
  return acc;
}

void SemanticProfile::validate() const {
  if (weights.empty()) throw DomainError("semantic profile: at least one n-gram weight required");
  if (weights.size() != precisions.size())
    throw DomainError("semantic profile: weights and precisions differ in length");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw DomainError("semantic profile: negative n-gram weight");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw DomainError("semantic profile: weights must sum to 1");
  for (double p : precisions) {
    if (!(p > 0.0 && p <= 1.0)) throw DomainError("semantic profile: precision outside (0, 1]");
  }
  if (!(quality_floor > 0.0 && quality_floor <= 1.0))
    throw DomainError("semantic profile: quality floor outside (0, 1]");
  if (std::log(quality_floor) > log_precision()) {
    std::ostringstream os;
    os << "semantic profile infeasible: ln Q = " << std::log(quality_floor)
       << " exceeds sum of weighted log precisions " << log_precision()
       << "; even an uncompressed message cannot reach the quality floor";
    throw DomainError(os.str());
  }
}

SemanticProfile SemanticProfile::uniform(std::size_t n_grams, double precision, double quality_floor) {
  SemanticProfile p;
  p.weights.assign(n_grams, 1.0 / static_cast<double>(n_grams));
  p.precisions.assign(n_grams, precision);
  p.quality_floor = quality_floor;
  return p;
}

double bleu(const SemanticProfile& profile, double rho) {
  if (!(rho > 0.0)) throw DomainError("bleu: extraction ratio must be positive");
  return std::exp(1.0 - 1.0 / rho) * std::exp(profile.log_precision());
}

double rho_lower_bound(const SemanticProfile& profile) {
  profile.validate();
  // ln BLEU = 1 - 1/ρ + Σ w ln p ≥ ln Q
  return 1.0 / (1.0 - std::log(profile.quality_floor) + profile.log_precision());
}

double semantic_rate(double rho, double sinr) {
  if (!(rho > 0.0)) throw DomainError("semantic_rate: extraction ratio must be positive");
  return std::log2(1.0 + sinr) / rho;
}

double computation_power(double coeff_f, std::span<const double> rhos) {
  double total = 0.0;
  for (double rho : rhos) {
    if (!(rho > 0.0)) throw DomainError("computation_power: extraction ratio must be positive");
    total += coeff_f * std::log(1.0 / rho);
  }
  return total;
}

bool power_check(const PowerLedger& ledger) {
  return ledger.comp_mw + ledger.cands_mw <= ledger.budget_mw + 1e-9;
}

}  // namespace issc
