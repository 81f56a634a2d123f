#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance binary. Nothing here calls the routine it checks.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "issc/alternating_optimizer.hpp"
#include "issc/semantic_metrics.hpp"
#include "issc/sensing_reference.hpp"

namespace issc::oracle {

// h^H M h by explicit double loop.
inline double quad(const CVec& h, const CMat& m) {
  cdouble acc = 0.0;
  for (int i = 0; i < h.size(); ++i)
    for (int j = 0; j < h.size(); ++j) acc += std::conj(h(i)) * m(i, j) * h(j);
  return acc.real();
}

inline CMat random_psd(int n, std::mt19937_64& rng, double trace) {
  std::normal_distribution<double> g;
  CMat a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = cdouble(g(rng), g(rng));
  CMat m = a * a.adjoint();
  return (trace / m.trace().real()) * m;
}

// Γ_{l|k} from explicit quadratic forms.
inline double eav_snr(const Scenario& sc, const BeamformerSet& b, std::size_t k, std::size_t l) {
  CVec hl = target_channel(sc, l);
  double den = sc.sigma2_r;
  for (const auto& r : b.r_mats) den += quad(hl, r);
  return quad(hl, b.w_mats[k]) / den;
}

// log2(A_k / B_k) from explicit quadratic forms.
inline double cu_rate(const Scenario& sc, const BeamformerSet& b, std::size_t k) {
  CVec h = cu_channel(sc, k);
  double interf = sc.sigma2_c;
  for (std::size_t j = 0; j < b.w_mats.size(); ++j)
    if (j != k) interf += quad(h, b.w_mats[j]);
  for (const auto& r : b.r_mats) interf += quad(h, r);
  return std::log2(1.0 + quad(h, b.w_mats[k]) / interf);
}

// Largest t = min_m p(θ_0) − p(θ_m) over rank-one-plus-isotropic covariances
// P_t (c·v v^H + (1 − c) I / N) with one target. The isotropic part adds the
// same amount to every p(θ), so the search is over unit v with c = 1:
// random-restart pattern search on the unit sphere of C^N.
inline double rank_one_reference_t(const Scenario& sc, const SensingConfig& cfg, int restarts = 60,
                                   std::uint64_t seed = 1) {
  const int n = sc.n_antennas();
  const CVec a0 = steering_vector(sc.geometry, sc.target_angles.at(0));
  std::vector<CVec> side;
  for (double th : sidelobe_region(sc, cfg)) side.push_back(steering_vector(sc.geometry, th));
  auto gap = [&](const CVec& v) {
    double worst = 0.0;
    for (const auto& a : side) worst = std::max(worst, std::norm(a.dot(v)));
    return std::norm(a0.dot(v)) - worst;
  };
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  auto random_unit = [&] {
    CVec v(n);
    for (int i = 0; i < n; ++i) v(i) = cdouble(g(rng), g(rng));
    return CVec(v.normalized());
  };
  double best = -std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    CVec v = random_unit();
    double fv = gap(v);
    double step = 0.3;
    for (int it = 0; it < 20000 && step > 1e-7; ++it) {
      bool improved = false;
      for (int d = 0; d < 3 * n * 2; ++d) {
        CVec y = (v + step * random_unit()).normalized();
        const double fy = gap(y);
        if (fy > fv + 1e-13) {
          v = y;
          fv = fy;
          improved = true;
        }
      }
      if (!improved) step *= 0.7;
    }
    best = std::max(best, fv);
  }
  return sc.power_budget_mw * best;
}

// Exhaustive ρ-grid for one or two users: Σ s_k/ρ_k over the BLEU/QoS box
// and F Σ ln(1/ρ_k) ≤ P_t − tr(beams). Grid points are lb + i·step plus
// the upper end of each box.
inline double rho_grid_objective(const OptimizerState& st, const Scenario& sc, double step = 1e-4) {
  const std::size_t users = sc.n_users();
  std::vector<double> s(users);
  std::vector<std::vector<double>> grid(users);
  for (std::size_t k = 0; k < users; ++k) {
    const double rate = cu_rate(sc, st.beams, k);
    s[k] = rate - std::log2(1.0 + st.lambdas[k]);
    const double lb = rho_lower_bound(sc.semantic_profiles[k]);
    const double ub = std::min(1.0, rate / sc.qos_floor);
    for (double r = lb; r < ub; r += step) grid[k].push_back(r);
    grid[k].push_back(ub);
  }
  const double budget = (sc.power_budget_mw - st.beams.total_power()) / sc.comp_coeff;
  double best = -std::numeric_limits<double>::infinity();
  if (users == 1) {
    for (double r : grid[0])
      if (-std::log(r) <= budget) best = std::max(best, s[0] / r);
    return best;
  }
  std::vector<double> u1, v1;
  for (double r : grid[1]) {
    u1.push_back(-std::log(r));
    v1.push_back(s[1] / r);
  }
  for (double r0 : grid[0]) {
    const double left = budget + std::log(r0);
    const double v0 = s[0] / r0;
    for (std::size_t j = 0; j < u1.size(); ++j)
      if (u1[j] <= left) best = std::max(best, v0 + v1[j]);
  }
  return best;
}

// Σ s_k/ρ_k at given extraction ratios, rates from explicit quadratic forms.
inline double rho_objective(const OptimizerState& st, const Scenario& sc, const std::vector<double>& rhos) {
  double v = 0.0;
  for (std::size_t k = 0; k < sc.n_users(); ++k)
    v += (cu_rate(sc, st.beams, k) - std::log2(1.0 + st.lambdas[k])) / rhos[k];
  return v;
}

// Random feasible profile: weights from a normalized exponential draw,
// precisions in [0.3, 1], floor strictly below the uncompressed score.
inline SemanticProfile random_profile(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> ng(1, 6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int g = ng(rng);
  SemanticProfile p;
  double sum = 0.0;
  for (int i = 0; i < g; ++i) {
    p.weights.push_back(-std::log(1.0 - u(rng)) + 1e-3);
    sum += p.weights.back();
    p.precisions.push_back(0.3 + 0.7 * u(rng));
  }
  for (auto& w : p.weights) w /= sum;
  double lp = 0.0;
  for (int i = 0; i < g; ++i) lp += p.weights[i] * std::log(p.precisions[i]);
  p.quality_floor = std::exp(lp) * (0.05 + 0.95 * u(rng));
  return p;
}

// Desk-scale state: the optimizer's starting beams blended with a random
// PSD draw of equal power. Blending keeps the mismatch moderate; the QoS
// box may still be empty, which callers must skip.
inline OptimizerState random_state(const Scenario& sc, const CMat& ref_cov, std::mt19937_64& rng) {
  OptimizerState st = initial_state(sc, ref_cov, {});
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double mix = 0.4 * u(rng);
  const int n = sc.n_antennas();
  for (auto& w : st.beams.w_mats) w = (1.0 - mix) * w + random_psd(n, rng, mix * w.trace().real());
  for (auto& r : st.beams.r_mats) r = (1.0 - mix) * r + random_psd(n, rng, mix * r.trace().real());
  st.lambdas = step2_lambda(st, sc);
  for (auto& l : st.lambdas) l *= 0.5 + u(rng);
  return st;
}

}  // namespace issc::oracle
