#pragma once

#include <span>
#include <vector>

namespace issc {

/// Per-user BLEU model: n-gram weights, n-gram precisions and the quality
/// floor Q shared by all users.
struct SemanticProfile {
  std::vector<double> weights;     // w_g, non-negative, summing to 1
  std::vector<double> precisions;  // p_g in (0, 1]
  double quality_floor = 0.5;      // Q in (0, 1]

  std::size_t n_grams() const { return weights.size(); }

  /// Σ_g w_g ln p_g.
  double log_precision() const;

  /// Throws DomainError when the weights, precisions or floor are malformed,
  /// or when the floor is unreachable even without compression.
  void validate() const;

  /// G equal weights, every precision set to `precision`.
  static SemanticProfile uniform(std::size_t n_grams, double precision, double quality_floor);
};

struct PowerLedger {
  double comp_mw = 0.0;   // computation power
  double cands_mw = 0.0;  // communication + sensing radiated power
  double budget_mw = 0.0;
};

/// BLEU score as a function of the extraction ratio: e^{1-1/ρ}·exp(Σ w_g ln p_g).
double bleu(const SemanticProfile& profile, double rho);

/// Smallest extraction ratio whose BLEU score still reaches the quality floor.
double rho_lower_bound(const SemanticProfile& profile);

/// Semantic rate (1/ρ)·log2(1 + sinr).
double semantic_rate(double rho, double sinr);

/// Σ_k F·ln(1/ρ_k), in mW.
double computation_power(double coeff_f, std::span<const double> rhos);

/// True iff comp + c&s ≤ budget (+1e-9).
bool power_check(const PowerLedger& ledger);

}  // namespace issc
