#include "issc/alternating_optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include "issc/semantic_metrics.hpp"
#include "issc/sensing_reference.hpp"

namespace issc {

namespace {

const double kLn2 = std::log(2.0);

double quad(const CVec& h, const CMat& m) { return (h.adjoint() * m * h)(0, 0).real(); }

CMat outer(const CVec& v) { return v * v.adjoint(); }

double rel_change(const std::vector<CMat>& next, const std::vector<CMat>& prev) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < next.size(); ++i) {
    num += (next[i] - prev[i]).squaredNorm();
    den += prev[i].squaredNorm();
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
}

std::vector<double> compute_b_points(const Scenario& sc, const BeamformerSet& beams) {
  std::vector<double> b;
  for (std::size_t k = 0; k < sc.n_users(); ++k) b.push_back(interference(sc, beams, k));
  return b;
}

// Blocks of the beamforming subproblem: W_1..W_K, then Σ_l R_l.
std::vector<CMat> to_blocks(const BeamformerSet& beams) {
  std::vector<CMat> blocks = beams.w_mats;
  blocks.push_back(beams.sensing_sum());
  return blocks;
}

BeamformerSet from_blocks(const std::vector<CMat>& blocks, std::size_t users, std::size_t targets) {
  BeamformerSet beams;
  for (std::size_t k = 0; k < users; ++k) beams.w_mats.push_back(hermitian_part(blocks[k]));
  const CMat r = hermitian_part(blocks[users]) / static_cast<double>(targets);
  beams.r_mats.assign(targets, r);
  return beams;
}

// Component of h orthogonal to every vector in `others` (least squares).
CVec project_out(const CVec& h, const std::vector<CVec>& others) {
  if (others.empty()) return h;
  CMat basis(h.size(), static_cast<Eigen::Index>(others.size()));
  for (std::size_t i = 0; i < others.size(); ++i) basis.col(static_cast<Eigen::Index>(i)) = others[i];
  const CVec coef = basis.colPivHouseholderQr().solve(h);
  return h - basis * coef;
}

void check_state(const OptimizerState& state, const Scenario& sc) {
  const std::size_t k = sc.n_users();
  if (state.rhos.size() != k || state.lambdas.size() != k || state.b_points.size() != k ||
      state.beams.w_mats.size() != k || state.beams.r_mats.size() != sc.n_targets())
    throw DomainError("optimizer state: sizes inconsistent with the scenario");
  for (double r : state.rhos)
    if (!(r > 0.0 && r <= 1.0)) throw DomainError("optimizer state: extraction ratio outside (0, 1]");
  for (double b : state.b_points)
    if (!(b > 0.0)) throw DomainError("optimizer state: expansion point B must be positive");
  for (double l : state.lambdas)
    if (!(l >= 0.0)) throw DomainError("optimizer state: lambda must be non-negative");
}

}  // namespace

void OptimizerOptions::validate() const {
  if (!(tol_beams > 0.0 && tol_lambda > 0.0 && outer_tol > 0.0 && rank_one_ratio_tol > 0.0))
    throw DomainError("optimizer options: tolerances must be positive");
  if (max_outer < 1 || max_inner < 1) throw DomainError("optimizer options: iteration caps must be positive");
  if (randomization_draws < 0) throw DomainError("optimizer options: negative draw count");
}

double signal_plus_interference(const Scenario& sc, const BeamformerSet& beams, std::size_t k) {
  const CVec h = cu_channel(sc, k);
  return quad(h, transmit_covariance(beams)) + sc.sigma2_c;
}

double interference(const Scenario& sc, const BeamformerSet& beams, std::size_t k) {
  const CVec h = cu_channel(sc, k);
  return quad(h, transmit_covariance(beams)) - quad(h, beams.w_mats.at(k)) + sc.sigma2_c;
}

double true_objective(const OptimizerState& state, const Scenario& sc) {
  double f = 0.0;
  for (std::size_t k = 0; k < sc.n_users(); ++k) {
    const double a = signal_plus_interference(sc, state.beams, k);
    const double b = interference(sc, state.beams, k);
    f += (std::log2(a) - std::log2(b) - std::log2(1.0 + state.lambdas[k])) / state.rhos[k];
  }
  return f;
}

double surrogate_objective(const OptimizerState& state, const Scenario& sc) {
  check_state(state, sc);
  if (state.c_points.size() != sc.n_users()) throw DomainError("optimizer state: missing C expansion points");
  double f = 0.0;
  for (std::size_t k = 0; k < sc.n_users(); ++k) {
    const double a = signal_plus_interference(sc, state.beams, k);
    const double b = interference(sc, state.beams, k);
    if (!(a > 0.0) || !(b > 0.0)) throw std::logic_error("surrogate_objective: non-positive A or B");
    const double bi = state.b_points[k];
    const double ci = state.c_points[k];
    const double c = 1.0 + state.lambdas[k];
    f += (std::log2(a) - std::log2(bi) - (b - bi) / (bi * kLn2) - std::log2(ci) - (c - ci) / (ci * kLn2)) /
         state.rhos[k];
  }
  return f;
}

conic::Problem beamforming_problem(const OptimizerState& state, const Scenario& sc, const CMat& ref_cov) {
  check_state(state, sc);
  const std::size_t users = sc.n_users();
  const int n = sc.n_antennas();
  const std::size_t rb = users;  // aggregate sensing block

  std::vector<CMat> hk;
  for (std::size_t k = 0; k < users; ++k) hk.push_back(outer(cu_channel(sc, k)));

  conic::Problem pb;
  pb.block_sizes.assign(users + 1, n);

  // Σ_k (1/ρ_k)[log2 A_k − B_k/(B_k^i ln 2)] up to constants.
  std::vector<CMat> lin(users + 1, CMat::Zero(n, n));
  for (std::size_t k = 0; k < users; ++k) {
    const double wk = 1.0 / (state.rhos[k] * kLn2);
    conic::Affine a{{}, sc.sigma2_c};
    for (std::size_t j = 0; j <= users; ++j) a.terms.push_back({j, hk[k]});
    pb.log_terms.push_back({wk, a});
    const CMat c = hk[k] * (wk / state.b_points[k]);
    for (std::size_t j = 0; j < users; ++j)
      if (j != k) lin[j] -= c;
    lin[rb] -= c;
  }
  for (std::size_t j = 0; j <= users; ++j) pb.linear_objective.push_back({j, lin[j]});

  // ln A_k − B_k/B_k^i ≥ ρ_k ς ln 2 + ln B_k^i − 1.
  for (std::size_t k = 0; k < users; ++k) {
    conic::LogIneq q;
    q.name = "qos(user " + std::to_string(k) + ")";
    q.weight = 1.0;
    q.log_arg.offset = sc.sigma2_c;
    for (std::size_t j = 0; j <= users; ++j) q.log_arg.terms.push_back({j, hk[k]});
    const double bi = state.b_points[k];
    q.linear.offset = -sc.sigma2_c / bi;
    for (std::size_t j = 0; j <= users; ++j)
      if (j != k) q.linear.terms.push_back({j, -hk[k] / bi});
    q.bound = state.rhos[k] * sc.qos_floor * kLn2 + std::log(bi) - 1.0;
    pb.log_ineqs.push_back(std::move(q));
  }

  // (⟨G_l, W_k⟩ − λ_k⟨G_l, R⟩)/σ_r² ≤ λ_k.
  for (std::size_t l = 0; l < sc.n_targets(); ++l) {
    const CMat g = outer(target_channel(sc, l)) / sc.sigma2_r;
    for (std::size_t k = 0; k < users; ++k) {
      conic::AffineIneq e;
      e.name = "eavesdrop(user " + std::to_string(k) + ", target " + std::to_string(l) + ")";
      e.expr.terms = {{k, g}, {rb, -state.lambdas[k] * g}};
      e.bound = state.lambdas[k];
      pb.affine_ineqs.push_back(std::move(e));
    }
  }

  conic::AffineIneq power;
  power.name = "power";
  for (std::size_t j = 0; j <= users; ++j) power.expr.terms.push_back({j, CMat::Identity(n, n)});
  power.bound = sc.power_budget_mw - computation_power(sc.comp_coeff, state.rhos);
  pb.affine_ineqs.push_back(std::move(power));

  conic::FrobBall ball;
  ball.name = "mismatch";
  ball.block_weights.assign(users + 1, 1.0);
  ball.center = ref_cov;
  ball.radius2 = sc.mismatch_budget;
  pb.frob_ball = ball;

  // λ = max_l Γ puts the current beams on an eavesdropper boundary. Moving a
  // sliver of each W_k into R keeps S (power, mismatch, every A_k) and makes
  // those rows strict, which usually spares the solver its phase 1.
  pb.start_hint = to_blocks(state.beams);
  for (double delta = 1e-3; delta >= 1e-9; delta *= 0.1) {
    std::vector<CMat> hint = pb.start_hint;
    for (std::size_t k = 0; k < users; ++k) {
      hint[rb] += delta * hint[k];
      hint[k] *= 1.0 - delta;
    }
    bool strict = true;
    for (const auto& c : conic::constraint_slacks(pb, hint)) strict = strict && c.slack > 0.0;
    if (strict) {
      pb.start_hint = std::move(hint);
      break;
    }
  }
  return pb;
}

bool beamforming_feasible(const OptimizerState& state, const Scenario& sc, const CMat& ref_cov,
                          const BeamformerSet& beams, double tol) {
  const conic::Problem pb = beamforming_problem(state, sc, ref_cov);
  const std::vector<CMat> blocks = to_blocks(beams);
  return conic::max_violation(pb, blocks) <= tol;
}

BeamformerSet step1_beamforming(OptimizerState& state, const Scenario& sc, const CMat& ref_cov,
                                const OptimizerOptions& options) {
  const std::size_t users = sc.n_users();
  for (int inner = 0; inner < options.max_inner; ++inner) {
    const conic::Problem pb = beamforming_problem(state, sc, ref_cov);
    const conic::Solution sol = conic::solve(pb, options.solver);
    ++state.inner_solves;
    if (sol.status == conic::Status::infeasible) throw InfeasibleError(sol.binding_constraint, sol.message);

    OptimizerState next = state;
    next.beams = from_blocks(sol.block_values, users, sc.n_targets());
    // The surrogate lower-bounds the true objective and touches it at the
    // expansion point, so an exact solve cannot lose; a solve that does (by
    // solver tolerance) is discarded and the loop stops.
    if (true_objective(next, sc) < true_objective(state, sc)) break;

    const double dw = rel_change(next.beams.w_mats, state.beams.w_mats);
    const double dr = rel_change({next.beams.sensing_sum()}, {state.beams.sensing_sum()});
    state.beams = std::move(next.beams);
    state.b_points = compute_b_points(sc, state.beams);
    if (dw <= options.tol_beams && dr <= options.tol_beams) break;
  }
  return state.beams;
}

std::vector<double> step2_lambda(const OptimizerState& state, const Scenario& sc) {
  std::vector<double> out;
  for (std::size_t k = 0; k < sc.n_users(); ++k) {
    double m = 0.0;
    for (std::size_t l = 0; l < sc.n_targets(); ++l) m = std::max(m, eav_snr(sc, state.beams, k, l));
    out.push_back(m);
  }
  return out;
}

std::vector<double> step3_rho(const OptimizerState& state, const Scenario& sc) {
  check_state(state, sc);
  const std::size_t users = sc.n_users();
  if (users > 20) throw DomainError("step3_rho: too many users for vertex enumeration");
  std::vector<double> s(users), lo(users), hi(users);
  for (std::size_t k = 0; k < users; ++k) {
    const double rate = std::log2(signal_plus_interference(sc, state.beams, k)) -
                        std::log2(interference(sc, state.beams, k));
    s[k] = rate - std::log2(1.0 + state.lambdas[k]);
    const double lb = rho_lower_bound(sc.semantic_profiles[k]);
    const double ub = std::min(1.0, rate / sc.qos_floor);
    if (!(ub >= lb)) {
      std::ostringstream os;
      os << "rate " << rate << " bits/s/Hz supports extraction ratios only up to " << ub
         << ", below the BLEU lower bound " << lb;
      throw InfeasibleError("qos(user " + std::to_string(k) + ")", os.str());
    }
    // u = ln(1/ρ): larger u means heavier compression.
    lo[k] = std::log(1.0 / ub);
    hi[k] = std::log(1.0 / lb);
  }
  const double budget = (sc.power_budget_mw - state.beams.total_power()) / sc.comp_coeff;
  double base = 0.0;
  for (double v : lo) base += v;
  if (base > budget + 1e-12) {
    std::ostringstream os;
    os << "computation power " << sc.comp_coeff * base << " mW at the least compression exceeds the remaining "
       << sc.comp_coeff * budget << " mW";
    throw InfeasibleError("power", os.str());
  }

  // Σ s_k e^{u_k} is convex in u for s_k > 0, so its maximum over the box cut
  // by Σ u_k ≤ budget sits at a vertex: every such coordinate at a bound but
  // at most one, which then exhausts the budget. Users with s_k ≤ 0 stay at
  // the least compression.
  std::vector<std::size_t> active;
  for (std::size_t k = 0; k < users; ++k)
    if (s[k] > 0.0) active.push_back(k);
  std::vector<double> best = lo;
  double best_val = -std::numeric_limits<double>::infinity();
  auto value = [&](const std::vector<double>& u) {
    double v = 0.0;
    for (std::size_t k = 0; k < users; ++k) v += s[k] * std::exp(u[k]);
    return v;
  };
  const std::size_t combos = std::size_t{1} << active.size();
  std::vector<double> u = lo;
  for (std::size_t mask = 0; mask < combos; ++mask) {
    for (std::size_t i = 0; i < active.size(); ++i) u[active[i]] = (mask >> i) & 1 ? hi[active[i]] : lo[active[i]];
    for (std::size_t f = 0; f <= active.size(); ++f) {
      std::vector<double> cand = u;
      if (f < active.size()) {
        const std::size_t k = active[f];
        double others = 0.0;
        for (std::size_t j = 0; j < users; ++j)
          if (j != k) others += cand[j];
        cand[k] = std::clamp(budget - others, lo[k], hi[k]);
      }
      double total = 0.0;
      for (double v : cand) total += v;
      if (total > budget + 1e-12) continue;
      const double v = value(cand);
      if (v > best_val) {
        best_val = v;
        best = cand;
      }
    }
  }
  std::vector<double> rho(users);
  for (std::size_t k = 0; k < users; ++k)
    rho[k] = std::clamp(std::exp(-best[k]), rho_lower_bound(sc.semantic_profiles[k]), 1.0);
  return rho;
}

OptimizerState initial_state(const Scenario& sc, const CMat& ref_cov, const OptimizerOptions& options) {
  const std::size_t users = sc.n_users();
  const std::size_t targets = sc.n_targets();
  const int n = sc.n_antennas();
  const double p_t = sc.power_budget_mw;
  constexpr double kIsotropic = 1e-3;

  std::vector<CVec> h;
  for (std::size_t k = 0; k < users; ++k) h.push_back(cu_channel(sc, k));
  std::vector<CVec> a;
  for (std::size_t l = 0; l < targets; ++l) a.push_back(steering_vector(sc.geometry, sc.target_angles[l]));
  auto unit = [](CVec v, const CVec& fallback) {
    if (v.norm() < 1e-9 * std::max(fallback.norm(), 1e-300)) v = fallback;
    return CVec(v / v.norm());
  };
  auto zero_forcing = [&](const std::vector<CVec>& chans, const std::vector<CVec>& tgts, std::size_t k) {
    std::vector<CVec> others = tgts;
    for (std::size_t j = 0; j < users; ++j)
      if (j != k) others.push_back(chans[j]);
    return unit(static_cast<int>(others.size()) < n ? project_out(chans[k], others) : chans[k], chans[k]);
  };

  OptimizerState st;
  st.rhos.assign(users, 1.0);
  st.lambdas.assign(users, 0.0);
  st.c_points.assign(users, 1.0);

  // Candidates are ranked by (meets every QoS floor, true objective), with
  // the worst QoS margin standing in for the objective when they do not.
  const double sinr_floor = std::exp2(sc.qos_floor) - 1.0;
  struct Score {
    bool feasible = false;
    double value = -std::numeric_limits<double>::infinity();
    bool operator>(const Score& o) const { return feasible != o.feasible ? feasible : value > o.value; }
  };
  auto evaluate_candidate = [&](const BeamformerSet& b) {
    Score sc_out;
    if (!(b.total_power() < p_t) || !(mismatch(ref_cov, b) < sc.mismatch_budget)) return sc_out;
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < users; ++k) margin = std::min(margin, cu_sinr(sc, b, k) / sinr_floor - 1.0);
    if (!(margin > 0.0)) {
      sc_out.value = margin;
      return sc_out;
    }
    OptimizerState trial = st;
    trial.beams = b;
    trial.lambdas = step2_lambda(trial, sc);
    sc_out.feasible = true;
    sc_out.value = true_objective(trial, sc);
    return sc_out;
  };
  Score best_score;
  BeamformerSet best;
  auto consider = [&](const BeamformerSet& b) {
    const Score s = evaluate_candidate(b);
    if (s > best_score || best.w_mats.empty()) {
      best_score = s;
      best = b;
    }
    return s;
  };

  // Family 1: zero-forcing communication beams on top of a scaled reference.
  std::vector<CMat> shape;
  for (std::size_t k = 0; k < users; ++k) {
    const CVec v = zero_forcing(h, a, k);
    shape.push_back((outer(v) + kIsotropic * CMat::Identity(n, n)) / (1.0 + kIsotropic * n));
  }
  for (double s_r : {1.0, 0.99, 0.98, 0.95, 0.9, 0.8, 0.7, 0.5, 0.3}) {
    for (int i = 0; i <= 40; ++i) {
      const double p = p_t * std::pow(10.0, -5.0 + 5.0 * i / 40.0);
      BeamformerSet b;
      for (std::size_t k = 0; k < users; ++k) b.w_mats.push_back(p * shape[k]);
      b.r_mats.assign(targets, (s_r / static_cast<double>(targets)) * ref_cov);
      consider(b);
    }
  }

  // Family 2: communication beams carved out of the reference covariance,
  // W_k = β_k R_d^{1/2} x_k x_k^H R_d^{1/2} with x_k between the whitened
  // zero-forcing (t = 0) and matched (t = 1) directions. The remainder of R_d
  // stays with the sensing beams, so the sum tracks R_d.
  Eigen::SelfAdjointEigenSolver<CMat> es(hermitian_part(ref_cov));
  const CMat half = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                    es.eigenvectors().adjoint();
  std::vector<CVec> y, z;
  for (const auto& hk : h) y.push_back(half * hk);
  for (const auto& al : a) z.push_back(half * al);
  const double tr_ref = trace_real(ref_cov);
  if (tr_ref > 0.0) {
    const double eps = 1e-4 * p_t / n;
    const double scale = (p_t * (1.0 - 1e-3) - eps * n * static_cast<double>(users + 1)) / tr_ref;
    std::vector<CVec> zf, mf;
    for (std::size_t k = 0; k < users; ++k) {
      zf.push_back(zero_forcing(y, z, k));
      mf.push_back(unit(y[k], h[k]));
    }
    auto carve = [&](const std::vector<double>& t, const std::vector<double>& beta) {
      BeamformerSet b;
      CMat taken = CMat::Zero(n, n);
      for (std::size_t k = 0; k < users; ++k) {
        const CVec x = unit((1.0 - t[k]) * zf[k] + t[k] * mf[k], mf[k]);
        taken += beta[k] * outer(x);
      }
      if (hermitian_eigenvalues(taken).maxCoeff() > 1.0 - 1e-9) return b;
      for (std::size_t k = 0; k < users; ++k) {
        const CVec x = unit((1.0 - t[k]) * zf[k] + t[k] * mf[k], mf[k]);
        b.w_mats.push_back(scale * beta[k] * (half * outer(x) * half) + eps * CMat::Identity(n, n));
      }
      const CMat r = scale * (half * (CMat::Identity(n, n) - taken) * half) + eps * CMat::Identity(n, n);
      b.r_mats.assign(targets, hermitian_part(r) / static_cast<double>(targets));
      return b;
    };
    const std::vector<double> t_grid{0.0, 0.1, 0.25, 0.4, 0.55, 0.7, 0.85, 1.0};
    const std::vector<double> beta_grid{0.3, 0.45, 0.55, 0.65, 0.75, 0.85, 0.92, 0.97};
    std::vector<double> t(users, 1.0), beta(users, 0.5 / static_cast<double>(users) + 0.2);
    Score current = evaluate_candidate(carve(t, beta));
    for (int sweep = 0; sweep < 3; ++sweep) {
      bool moved = false;
      for (std::size_t k = 0; k < users; ++k) {
        for (double tv : t_grid)
          for (double bv : beta_grid) {
            std::vector<double> t2 = t, b2 = beta;
            t2[k] = tv;
            b2[k] = bv;
            const BeamformerSet cand = carve(t2, b2);
            if (cand.w_mats.empty()) continue;
            const Score s = consider(cand);
            if (s > current) {
              current = s;
              t = t2;
              beta = b2;
              moved = true;
            }
          }
      }
      if (!moved) break;
    }
  }
  if (best.w_mats.empty() || !std::isfinite(best_score.value))
    throw InfeasibleError("initialization", "no candidate start meets the power budget and the mismatch bound");

  st.beams = best;
  st.lambdas = step2_lambda(st, sc);
  for (std::size_t k = 0; k < users; ++k) st.c_points[k] = 1.0 + st.lambdas[k];
  st.b_points = compute_b_points(sc, st.beams);
  if (!best_score.feasible) {
    // No candidate meets the QoS floor; let the beamforming solve (phase 1
    // included) look for a feasible point from the best one.
    const conic::Solution sol = conic::solve(beamforming_problem(st, sc, ref_cov), options.solver);
    if (sol.status == conic::Status::infeasible)
      throw InfeasibleError(sol.binding_constraint, "scenario infeasible at rho = 1: " + sol.message);
    st.beams = from_blocks(sol.block_values, users, targets);
    st.lambdas = step2_lambda(st, sc);
    for (std::size_t k = 0; k < users; ++k) st.c_points[k] = 1.0 + st.lambdas[k];
    st.b_points = compute_b_points(sc, st.beams);
  }
  return st;
}

bool rebalance_power(OptimizerState& state, const Scenario& sc, const CMat& ref_cov, const OptimizerOptions& options) {
  check_state(state, sc);
  const std::size_t users = sc.n_users();
  const std::size_t targets = sc.n_targets();
  // ‖R_d − S‖_F ≤ √ξ caps how far tr S can drop below tr R_d.
  const double reach = std::sqrt(sc.n_antennas() * sc.mismatch_budget);
  double best = true_objective(state, sc);
  OptimizerState best_state;
  for (double frac : {0.1, 0.25, 0.5, 0.75}) {
    conic::Problem pb = beamforming_problem(state, sc, ref_cov);
    for (auto& c : pb.affine_ineqs)
      if (c.name == "power") c.bound -= frac * reach;
    const conic::Solution sol = conic::solve(pb, options.solver);
    if (sol.status == conic::Status::infeasible) continue;
    OptimizerState trial = state;
    trial.beams = from_blocks(sol.block_values, users, targets);
    trial.lambdas = step2_lambda(trial, sc);
    try {
      trial.rhos = step3_rho(trial, sc);
    } catch (const InfeasibleError&) {
      continue;
    }
    const double v = true_objective(trial, sc);
    if (v > best) {
      best = v;
      best_state = std::move(trial);
    }
  }
  if (best_state.rhos.empty()) return false;
  best_state.b_points = compute_b_points(sc, best_state.beams);
  for (std::size_t k = 0; k < users; ++k) best_state.c_points[k] = 1.0 + best_state.lambdas[k];
  state.rhos = best_state.rhos;
  state.lambdas = best_state.lambdas;
  state.beams = best_state.beams;
  state.b_points = best_state.b_points;
  state.c_points = best_state.c_points;
  return true;
}

RandomizationResult gaussian_randomization(const OptimizerState& state, const Scenario& sc, const CMat& ref_cov,
                                           int draws, const OptimizerOptions& options) {
  const std::size_t users = sc.n_users();
  const std::size_t targets = sc.n_targets();
  const int n = sc.n_antennas();
  const double sdr = true_objective(state, sc);
  const CMat sdr_sum = transmit_covariance(state.beams);

  struct Factor {
    CMat sqrt_w;      // W^{1/2}
    CMat range;       // projector onto range(W)
    CVec matched;     // W h / sqrt(h^H W h), the rank-one part of W seen by h
    bool rank_one;
  };
  std::vector<Factor> fac;
  for (std::size_t k = 0; k < users; ++k) {
    const CMat w = hermitian_part(state.beams.w_mats[k]);
    Eigen::SelfAdjointEigenSolver<CMat> es(w);
    const RVec ev = es.eigenvalues().cwiseMax(0.0);
    const double l1 = ev(n - 1);
    const double l2 = n > 1 ? ev(n - 2) : 0.0;
    Factor f;
    f.sqrt_w = es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * es.eigenvectors().adjoint();
    RVec keep = RVec::Zero(n);
    for (int i = 0; i < n; ++i) keep(i) = ev(i) > 1e-12 * l1 ? 1.0 : 0.0;
    f.range = es.eigenvectors() * keep.asDiagonal() * es.eigenvectors().adjoint();
    const CVec h = cu_channel(sc, k);
    const CVec wh = w * h;
    const double g = (h.adjoint() * wh)(0, 0).real();
    f.matched = g > 0.0 ? CVec(wh / std::sqrt(g)) : CVec(std::sqrt(l1) * es.eigenvectors().col(n - 1));
    f.rank_one = l2 <= options.rank_one_ratio_tol * l1;
    fac.push_back(std::move(f));
  }

  // Rank-one W_k = w_k w_k^H with w_k w_k^H ⪯ W̄_k; the sensing beams take
  // the remainder so the transmit covariance is unchanged.
  auto make = [&](const std::vector<CVec>& ws) {
    BeamformerSet b;
    CMat rest = sdr_sum;
    for (const auto& w : ws) {
      b.w_mats.push_back(outer(w));
      rest -= b.w_mats.back();
    }
    b.r_mats.assign(targets, hermitian_part(rest) / static_cast<double>(targets));
    return b;
  };
  auto score = [&](const BeamformerSet& b) {
    OptimizerState s = state;
    s.beams = b;
    return true_objective(s, sc);
  };

  RandomizationResult out;
  double best = -std::numeric_limits<double>::infinity();
  auto consider = [&](const std::vector<CVec>& ws, bool drawn) {
    BeamformerSet cand = make(ws);
    if (!beamforming_feasible(state, sc, ref_cov, cand)) return;
    const double v = score(cand);
    if (v > best) {
      best = v;
      out.beams = std::move(cand);
      out.from_draws = drawn;
    }
  };

  std::vector<CVec> matched;
  for (const auto& f : fac) matched.push_back(f.matched);
  consider(matched, false);

  const bool all_rank_one = std::all_of(fac.begin(), fac.end(), [](const Factor& f) { return f.rank_one; });
  if (!all_rank_one) {
    std::mt19937_64 rng(options.seed ^ 0x9a55a1d0c0ffeeULL);
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    for (int d = 0; d < draws; ++d) {
      std::vector<CVec> ws;
      for (std::size_t k = 0; k < users; ++k) {
        const Factor& f = fac[k];
        if (f.rank_one) {
          ws.push_back(f.matched);
          continue;
        }
        CVec z(n);
        for (int i = 0; i < n; ++i) z(i) = cdouble(normal(rng), normal(rng));
        // w = W^{1/2} z / ‖P z‖ is the largest multiple with w w^H ⪯ W.
        const double len = (f.range * z).norm();
        ws.push_back(len > 0.0 ? CVec(f.sqrt_w * z / len) : f.matched);
      }
      consider(ws, true);
    }
  }
  if (out.beams.w_mats.empty())
    throw InfeasibleError("randomization", "no rank-one candidate satisfies the beamforming constraints");
  out.ratio = sdr > 0.0 ? best / sdr : (best >= sdr ? 1.0 : 0.0);
  return out;
}

OptimizerResult run(const Scenario& sc, const CMat& ref_cov, const OptimizerOptions& options) {
  sc.validate();
  options.validate();
  if (ref_cov.rows() != sc.n_antennas() || ref_cov.cols() != sc.n_antennas())
    throw DomainError("run: reference covariance size differs from the array");

  OptimizerResult res;
  OptimizerState& st = res.state;
  st = initial_state(sc, ref_cov, options);

  auto record = [&](int it) {
    IterationRecord r;
    r.iteration = it;
    r.objective = st.objective_history.back();
    const RateReport rep = worst_case_ssr(sc, st.beams, st.rhos);
    r.ssr = rep.ssr_unclamped;
    r.rhos = st.rhos;
    r.comp_mw = computation_power(sc.comp_coeff, st.rhos);
    r.cands_mw = st.beams.total_power();
    r.inner_solves = st.inner_solves;
    res.trace.push_back(std::move(r));
  };
  st.objective_history.push_back(true_objective(st, sc));
  record(0);

  for (int it = 1; it <= options.max_outer; ++it) {
    try {
      step1_beamforming(st, sc, ref_cov, options);
      st.lambdas = step2_lambda(st, sc);
      for (std::size_t k = 0; k < sc.n_users(); ++k) st.c_points[k] = 1.0 + st.lambdas[k];
      if (!options.fix_rho) {
        st.rhos = step3_rho(st, sc);
        if (options.rebalance_power) rebalance_power(st, sc, ref_cov, options);
      }
    } catch (const InfeasibleError& e) {
      throw InfeasibleError(e.constraint(), "outer iteration " + std::to_string(it) + ": " + e.what());
    }
    st.outer_iter = it;
    const double prev = st.objective_history.back();
    st.objective_history.push_back(true_objective(st, sc));
    record(it);
    if (std::abs(st.objective_history.back() - prev) <= options.outer_tol * std::max(1.0, std::abs(prev))) {
      res.converged = true;
      break;
    }
  }

  const RandomizationResult rnd =
      gaussian_randomization(st, sc, ref_cov, options.randomization_draws, options);
  res.rank_one_beams = rnd.beams;
  res.randomization_ratio = rnd.ratio;
  res.report = worst_case_ssr(sc, res.rank_one_beams, st.rhos);
  return res;
}

void write_iteration_csv(std::ostream& os, const std::vector<IterationRecord>& trace) {
  const std::size_t users = trace.empty() ? 0 : trace.front().ssr.size();
  os << "iteration,objective";
  for (std::size_t k = 0; k < users; ++k) os << ",ssr_" << k;
  for (std::size_t k = 0; k < users; ++k) os << ",rho_" << k;
  os << ",comp_mw,cands_mw,inner_solves\n";
  std::ostringstream line;
  line.precision(17);
  for (const auto& r : trace) {
    line.str("");
    line << r.iteration << ',' << r.objective;
    for (double v : r.ssr) line << ',' << v;
    for (double v : r.rhos) line << ',' << v;
    line << ',' << r.comp_mw << ',' << r.cands_mw << ',' << r.inner_solves;
    os << line.str() << '\n';
  }
}

}  // namespace issc
