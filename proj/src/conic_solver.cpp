#include "issc/conic_solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

namespace issc::conic {

namespace {

constexpr double kCenterTol = 1e-8;  // Newton decrement²/2 at which a stage counts as centered

// Real parameterization of an n×n Hermitian block: n diagonal entries, then
// (re, im) of every strict upper-triangle entry in row-major order. Each
// parameter p owns a basis matrix E_p with at most two nonzeros.
struct Basis {
  struct Term {
    int row;
    int col;
    cdouble coef;
  };
  int n = 0;
  std::vector<std::array<Term, 2>> terms;
  std::vector<int> n_terms;
  std::vector<double> metric;  // ⟨E_p, E_p⟩

  explicit Basis(int size) : n(size) {
    const int count = n * n;
    terms.resize(count);
    n_terms.resize(count);
    metric.resize(count);
    int p = 0;
    for (int i = 0; i < n; ++i, ++p) {
      terms[p][0] = {i, i, 1.0};
      n_terms[p] = 1;
      metric[p] = 1.0;
    }
    const cdouble j(0.0, 1.0);
    for (int r = 0; r < n; ++r) {
      for (int c = r + 1; c < n; ++c) {
        terms[p] = {Term{r, c, 1.0}, Term{c, r, 1.0}};
        n_terms[p] = 2;
        metric[p] = 2.0;
        ++p;
        terms[p] = {Term{r, c, j}, Term{c, r, -j}};
        n_terms[p] = 2;
        metric[p] = 2.0;
        ++p;
      }
    }
  }
};

// Gradient of X ↦ ⟨C, X⟩ in parameter space (C Hermitian).
void add_coeff_gradient(const CMat& c, double scale, double* out) {
  const int n = static_cast<int>(c.rows());
  int p = 0;
  for (int i = 0; i < n; ++i) out[p++] += scale * c(i, i).real();
  for (int r = 0; r < n; ++r) {
    for (int col = r + 1; col < n; ++col) {
      out[p++] += scale * 2.0 * c(r, col).real();
      out[p++] += scale * 2.0 * c(r, col).imag();
    }
  }
}

CMat unpack(const double* v, int n) {
  CMat x(n, n);
  int p = 0;
  for (int i = 0; i < n; ++i) x(i, i) = v[p++];
  for (int r = 0; r < n; ++r) {
    for (int c = r + 1; c < n; ++c) {
      x(r, c) = cdouble(v[p], v[p + 1]);
      x(c, r) = std::conj(x(r, c));
      p += 2;
    }
  }
  return x;
}

void pack(const CMat& x, double* v) {
  const int n = static_cast<int>(x.rows());
  int p = 0;
  for (int i = 0; i < n; ++i) v[p++] = x(i, i).real();
  for (int r = 0; r < n; ++r) {
    for (int c = r + 1; c < n; ++c) {
      v[p++] = x(r, c).real();
      v[p++] = x(r, c).imag();
    }
  }
}

// out(p, q) += scale · Re tr(E_p K E_q K^H) for p in block basis `bp`, q in `bq`.
// With E_p = Σ c e_a e_b^T the trace term is c_p c_q K[b_p][a_q]·conj(K[a_p][b_q]).
// Off-diagonal re/im parameters share their two positions, so the products are
// formed once per position pair.
void add_kron_block(const Basis& bp, const Basis& bq, const CMat& k, double scale, RMat& out, int row0,
                    int col0) {
  const int np = bp.n;
  const int nq = bq.n;
  auto f = [&](int ra, int ca, int rb, int cb) { return k(ca, rb) * std::conj(k(ra, cb)); };
  // Parameter index of the strict upper pair (r, c) (its re part; im follows).
  auto pair_index = [](int n, int r, int c) { return n + 2 * (r * n - r * (r + 1) / 2 + (c - r - 1)); };

  for (int i = 0; i < np; ++i) {
    for (int j = 0; j < nq; ++j) out(row0 + i, col0 + j) += scale * f(i, i, j, j).real();
    for (int r = 0; r < nq; ++r)
      for (int c = r + 1; c < nq; ++c) {
        const cdouble f1 = f(i, i, r, c);
        const cdouble f2 = f(i, i, c, r);
        const int q = col0 + pair_index(nq, r, c);
        out(row0 + i, q) += scale * (f1 + f2).real();
        out(row0 + i, q + 1) += scale * -(f1 - f2).imag();
      }
  }
  for (int r = 0; r < np; ++r)
    for (int c = r + 1; c < np; ++c) {
      const int p = row0 + pair_index(np, r, c);
      for (int j = 0; j < nq; ++j) {
        const cdouble f1 = f(r, c, j, j);
        const cdouble f2 = f(c, r, j, j);
        out(p, col0 + j) += scale * (f1 + f2).real();
        out(p + 1, col0 + j) += scale * -(f1 - f2).imag();
      }
      for (int r2 = 0; r2 < nq; ++r2)
        for (int c2 = r2 + 1; c2 < nq; ++c2) {
          const cdouble f11 = f(r, c, r2, c2);
          const cdouble f12 = f(r, c, c2, r2);
          const cdouble f21 = f(c, r, r2, c2);
          const cdouble f22 = f(c, r, c2, r2);
          const int q = col0 + pair_index(nq, r2, c2);
          out(p, q) += scale * (f11 + f12 + f21 + f22).real();
          out(p, q + 1) += scale * -(f11 - f12 + f21 - f22).imag();
          out(p + 1, q) += scale * -(f11 + f12 - f21 - f22).imag();
          out(p + 1, q + 1) += scale * (-f11 + f12 + f21 - f22).real();
        }
    }
}

bool cholesky_ok(const CMat& x) {
  Eigen::LLT<CMat> llt(x);
  return llt.info() == Eigen::Success;
}

double log_det_pd(const CMat& x) {
  Eigen::LLT<CMat> llt(x);
  if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
  double acc = 0.0;
  for (int i = 0; i < x.rows(); ++i) acc += 2.0 * std::log(std::real(llt.matrixLLT()(i, i)));
  return acc;
}

CMat ball_residual(const FrobBall& ball, std::span<const CMat> blocks) {
  CMat d = -ball.center;
  for (std::size_t b = 0; b < blocks.size(); ++b)
    if (ball.block_weights[b] != 0.0) d += ball.block_weights[b] * blocks[b];
  return d;
}

// One scalar barrier constraint r(X) > 0 as seen by the engine.
enum class Kind { affine, log, ball };

struct ConstraintRef {
  Kind kind;
  std::size_t index;
  std::string name;
};

std::vector<ConstraintRef> list_constraints(const Problem& p) {
  std::vector<ConstraintRef> out;
  for (std::size_t i = 0; i < p.affine_ineqs.size(); ++i)
    out.push_back({Kind::affine, i, p.affine_ineqs[i].name});
  for (std::size_t i = 0; i < p.log_ineqs.size(); ++i) out.push_back({Kind::log, i, p.log_ineqs[i].name});
  if (p.frob_ball) out.push_back({Kind::ball, 0, p.frob_ball->name});
  return out;
}

double raw_slack(const Problem& p, const ConstraintRef& c, std::span<const CMat> x) {
  switch (c.kind) {
    case Kind::affine: {
      const auto& a = p.affine_ineqs[c.index];
      return a.bound - evaluate(a.expr, x);
    }
    case Kind::log: {
      const auto& g = p.log_ineqs[c.index];
      const double arg = evaluate(g.log_arg, x);
      if (!(arg > 0.0)) return -std::numeric_limits<double>::infinity();
      return g.weight * std::log(arg) + evaluate(g.linear, x) - g.bound;
    }
    case Kind::ball: {
      const auto& ball = *p.frob_ball;
      return ball.radius2 - ball_residual(ball, x).squaredNorm();
    }
  }
  return 0.0;
}

double constraint_bound(const Problem& p, const ConstraintRef& c) {
  switch (c.kind) {
    case Kind::affine:
      return p.affine_ineqs[c.index].bound;
    case Kind::log:
      return p.log_ineqs[c.index].bound;
    case Kind::ball:
      return p.frob_ball->radius2;
  }
  return 0.0;
}

// Newton engine on the barrier merit in local coordinates X_b = L_b U L_b^H.
//
// Phase 2 merit:  f/μ + Σ ln det X_b + Σ ln r_i
// Phase 1 merit:  σ/μ + Σ ln det X_b + Σ ln(r_i − scale_i σ) + ln(cap − σ)
class Engine {
 public:
  Engine(const Problem& problem, std::vector<CMat> x) : pb_(problem), x_(std::move(x)), refs_(list_constraints(problem)) {
    offsets_.reserve(pb_.n_blocks());
    int off = 0;
    for (int n : pb_.block_sizes) {
      offsets_.push_back(off);
      off += n * n;
      auto it = bases_.find(n);
      if (it == bases_.end()) bases_.emplace(n, Basis(n));
    }
    n_params_ = off;
  }

  void enable_phase1(std::vector<double> scales, double sigma0, double cap) {
    phase1_ = true;
    scales_ = std::move(scales);
    sigma_ = sigma0;
    cap_ = cap;
  }

  const std::vector<CMat>& x() const { return x_; }
  double sigma() const { return sigma_; }
  std::size_t n_constraints() const { return refs_.size(); }
  const std::vector<ConstraintRef>& refs() const { return refs_; }

  // Gradient norms of every constraint in local coordinates at the current point.
  std::vector<double> constraint_gradient_norms() {
    factorize();
    std::vector<double> out;
    RVec g(n_params_);
    for (const auto& c : refs_) {
      g.setZero();
      constraint_gradient(c, g.data());
      out.push_back(g.norm());
    }
    return out;
  }

  struct StepResult {
    double decrement2 = 0.0;
    double alpha = 0.0;
    bool centered = false;
    bool accepted = false;
  };

  StepResult newton_step(double mu) {
    StepResult res;
    factorize();
    const int n = n_params_ + (phase1_ ? 1 : 0);
    const int sig = n_params_;
    RVec grad = RVec::Zero(n);
    RVec diag(n);                  // metric part of the negated Hessian
    std::vector<RVec> cols;        // rank-one contributions v v^T
    double ball_scale = 0.0;       // multiplier of the ball Gram term

    for (std::size_t b = 0; b < pb_.n_blocks(); ++b) {
      const Basis& basis = bases_.at(pb_.block_sizes[b]);
      const int off = offsets_[b];
      for (int i = 0; i < basis.n; ++i) grad(off + i) += 1.0;
      for (int p = 0; p < basis.n * basis.n; ++p) diag(off + p) = basis.metric[p];
    }

    if (phase1_) {
      grad(sig) += 1.0 / mu;
      const double rc = cap_ - sigma_;
      grad(sig) -= 1.0 / rc;
      diag(sig) = 1.0 / (rc * rc);
    } else {
      for (const auto& t : pb_.linear_objective) add_term_gradient(t, 1.0 / mu, grad.data());
      for (const auto& lt : pb_.log_terms) {
        const double a = evaluate(lt.arg, x_);
        RVec ga = RVec::Zero(n);
        affine_gradient(lt.arg, ga.data());
        grad += (lt.weight / (mu * a)) * ga;
        cols.push_back((std::sqrt(lt.weight / mu) / a) * ga);
      }
    }

    for (std::size_t i = 0; i < refs_.size(); ++i) {
      const auto& c = refs_[i];
      RVec gs = RVec::Zero(n);
      constraint_gradient(c, gs.data());
      double r = raw_slack(pb_, c, x_);
      if (phase1_) {
        r -= scales_[i] * sigma_;
        gs(sig) = -scales_[i];
      }
      grad += gs / r;
      if (c.kind == Kind::log) {
        const auto& g = pb_.log_ineqs[c.index];
        const double a = evaluate(g.log_arg, x_);
        RVec ga = RVec::Zero(n);
        affine_gradient(g.log_arg, ga.data());
        cols.push_back((std::sqrt(g.weight / r) / a) * ga);
      } else if (c.kind == Kind::ball) {
        ball_scale = 2.0 / r;
      }
      cols.push_back(gs / r);
    }

    RMat g(n, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) g.col(static_cast<Eigen::Index>(j)) = cols[j];
    const int ball_dim = ball_scale > 0.0 ? static_cast<int>(pb_.frob_ball->center.rows()) : 0;
    const int rank = static_cast<int>(cols.size()) + ball_dim * ball_dim;

    RVec dir = 2 * rank < n ? solve_low_rank(diag, g, ball_scale, grad) : solve_dense(diag, g, ball_scale, grad);
    res.decrement2 = grad.dot(dir);
    if (!(res.decrement2 >= 0.0) || !std::isfinite(res.decrement2)) {
      res.decrement2 = 0.0;
      res.centered = true;
      return res;
    }
    if (res.decrement2 / 2.0 <= kCenterTol) {
      res.centered = true;
      return res;
    }
    line_search(mu, dir, res);
    return res;
  }

  double objective() const { return objective_value(pb_, x_); }

  // Merit in absolute terms (for tracing): f + μ(Σ ln det + Σ ln r).
  double merit(double mu) const {
    double barrier = 0.0;
    for (const auto& x : x_) barrier += log_det_pd(x);
    for (std::size_t i = 0; i < refs_.size(); ++i) {
      double r = raw_slack(pb_, refs_[i], x_);
      if (phase1_) r -= scales_[i] * sigma_;
      barrier += std::log(r);
    }
    const double f = phase1_ ? sigma_ : objective();
    return f + mu * barrier;
  }

 private:
  void factorize() {
    chol_.resize(x_.size());
    for (std::size_t b = 0; b < x_.size(); ++b) {
      Eigen::LLT<CMat> llt(x_[b]);
      if (llt.info() != Eigen::Success) throw std::runtime_error("conic solver: iterate lost positive definiteness");
      chol_[b] = llt.matrixL();
    }
  }

  void add_term_gradient(const BlockTerm& t, double scale, double* out) const {
    const CMat& l = chol_[t.block];
    add_coeff_gradient(l.adjoint() * t.coeff * l, scale, out + offsets_[t.block]);
  }

  void affine_gradient(const Affine& a, double* out) const {
    for (const auto& t : a.terms) add_term_gradient(t, 1.0, out);
  }

  void constraint_gradient(const ConstraintRef& c, double* out) const {
    switch (c.kind) {
      case Kind::affine:
        for (const auto& t : pb_.affine_ineqs[c.index].expr.terms) add_term_gradient(t, -1.0, out);
        break;
      case Kind::log: {
        const auto& g = pb_.log_ineqs[c.index];
        const double a = evaluate(g.log_arg, x_);
        for (const auto& t : g.log_arg.terms) add_term_gradient(t, g.weight / a, out);
        for (const auto& t : g.linear.terms) add_term_gradient(t, 1.0, out);
        break;
      }
      case Kind::ball: {
        const auto& ball = *pb_.frob_ball;
        const CMat d = ball_residual(ball, x_);
        for (std::size_t b = 0; b < x_.size(); ++b) {
          const double w = ball.block_weights[b];
          if (w == 0.0) continue;
          const CMat& l = chol_[b];
          add_coeff_gradient(l.adjoint() * d * l, -2.0 * w, out + offsets_[b]);
        }
        break;
      }
    }
  }

  // Adds scale·[w_b w_b' Q_bb'] where Q is the Gram form of dU ↦ Σ w_b L_b dU_b L_b^H.
  void add_ball_curvature(double scale, RMat& hess) const {
    const auto& ball = *pb_.frob_ball;
    for (std::size_t b = 0; b < x_.size(); ++b) {
      if (ball.block_weights[b] == 0.0) continue;
      for (std::size_t c = 0; c <= b; ++c) {
        if (ball.block_weights[c] == 0.0) continue;
        const CMat k = chol_[b].adjoint() * chol_[c];
        add_kron_block(bases_.at(pb_.block_sizes[b]), bases_.at(pb_.block_sizes[c]), k,
                       scale * ball.block_weights[b] * ball.block_weights[c], hess, offsets_[b], offsets_[c]);
      }
    }
  }

  static RVec solve_spd(RMat& h, const RVec& g) {
    Eigen::LLT<RMat, Eigen::Lower> llt(h);
    if (llt.info() == Eigen::Success) return llt.solve(g);
    const double shift = 1e-12 * std::max(1.0, h.diagonal().cwiseAbs().maxCoeff());
    for (int attempt = 0; attempt < 8; ++attempt) {
      RMat hs = h;
      hs.diagonal().array() += shift * std::pow(100.0, attempt);
      Eigen::LLT<RMat, Eigen::Lower> l2(hs);
      if (l2.info() == Eigen::Success) return l2.solve(g);
    }
    return RVec::Zero(g.size());
  }

  RVec solve_dense(const RVec& diag, const RMat& g, double ball_scale, const RVec& grad) const {
    RMat hess = diag.asDiagonal();
    if (ball_scale > 0.0) add_ball_curvature(ball_scale, hess);
    if (g.cols() > 0) hess.selfadjointView<Eigen::Lower>().rankUpdate(g, 1.0);
    return solve_spd(hess, grad);
  }

  // Ball map A(dU) = Σ_b w_b L_b dU_b L_b^H, in scaled image coordinates
  // sqrt(metric)·params so that its Gram form is a plain dot product.
  RVec ball_apply(const RVec& v) const {
    const auto& ball = *pb_.frob_ball;
    const int m = static_cast<int>(ball.center.rows());
    CMat y = CMat::Zero(m, m);
    for (std::size_t b = 0; b < x_.size(); ++b)
      if (ball.block_weights[b] != 0.0)
        y += ball.block_weights[b] * (chol_[b] * unpack(v.data() + offsets_[b], pb_.block_sizes[b]) * chol_[b].adjoint());
    const Basis& basis = bases_.at(m);
    RVec out(m * m);
    pack(y, out.data());
    for (int s = 0; s < m * m; ++s) out(s) *= std::sqrt(basis.metric[s]);
    return out;
  }

  // D⁻¹·(transpose of the scaled ball map) applied to z: blocks w_b L_b^H Z L_b.
  void ball_adjoint_add(const RVec& z, double scale, RVec& out) const {
    const auto& ball = *pb_.frob_ball;
    const int m = static_cast<int>(ball.center.rows());
    const Basis& basis = bases_.at(m);
    RVec zs = z;
    for (int s = 0; s < m * m; ++s) zs(s) /= std::sqrt(basis.metric[s]);
    const CMat zm = unpack(zs.data(), m);
    for (std::size_t b = 0; b < x_.size(); ++b) {
      if (ball.block_weights[b] == 0.0) continue;
      const CMat blk = (scale * ball.block_weights[b]) * (chol_[b].adjoint() * zm * chol_[b]);
      RVec tmp(blk.rows() * blk.rows());
      pack(blk, tmp.data());
      out.segment(offsets_[b], tmp.size()) += tmp;
    }
  }

  // Woodbury solve of (D + G G^T + c·B^T B) d = grad with B the scaled ball map.
  RVec solve_low_rank(const RVec& diag, const RMat& g, double ball_scale, const RVec& grad) const {
    const RVec dinv = diag.cwiseInverse();
    const int r = static_cast<int>(g.cols());
    const int m = ball_scale > 0.0 ? static_cast<int>(pb_.frob_ball->center.rows()) : 0;
    const int k = r + m * m;
    const double sc = std::sqrt(ball_scale);
    const RMat gd = dinv.asDiagonal() * g;
    RMat cap = RMat::Identity(k, k);
    cap.topLeftCorner(r, r).noalias() += g.transpose() * gd;
    RVec rhs(k);
    const RVec dg = dinv.cwiseProduct(grad);
    rhs.head(r) = g.transpose() * dg;
    if (m > 0) {
      for (int j = 0; j < r; ++j) cap.block(r, j, m * m, 1) = sc * ball_apply(gd.col(j));
      cap.topRightCorner(r, m * m) = cap.bottomLeftCorner(m * m, r).transpose();
      const auto& ball = *pb_.frob_ball;
      const Basis& basis = bases_.at(m);
      RMat p = RMat::Zero(m * m, m * m);
      for (std::size_t b = 0; b < x_.size(); ++b) {
        const double w = ball.block_weights[b];
        if (w != 0.0) add_kron_block(basis, basis, x_[b], w * w, p, 0, 0);
      }
      for (int s = 0; s < m * m; ++s)
        for (int t = 0; t < m * m; ++t)
          cap(r + s, r + t) += ball_scale * p(s, t) / std::sqrt(basis.metric[s] * basis.metric[t]);
      rhs.tail(m * m) = sc * ball_apply(dg);
    }
    Eigen::LLT<RMat> llt(cap);
    const RVec z = llt.solve(rhs);
    RVec dir = dg - gd * z.head(r);
    if (m > 0) ball_adjoint_add(z.tail(m * m), -sc, dir);
    return dir;
  }

  void line_search(double mu, const RVec& dir, StepResult& res) {
    const std::size_t nb = x_.size();
    std::vector<CMat> du(nb);
    std::vector<RVec> eig(nb);
    std::vector<CMat> dx(nb);
    auto affine_derivative = [&](const Affine& a) {
      double v = 0.0;
      for (const auto& t : a.terms) v += inner(t.coeff, dx[t.block]);
      return v;
    };
    double alpha_max = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < nb; ++b) {
      du[b] = unpack(dir.data() + offsets_[b], pb_.block_sizes[b]);
      eig[b] = hermitian_eigenvalues(du[b]);
      dx[b] = chol_[b] * du[b] * chol_[b].adjoint();
      if (eig[b](0) < 0.0) alpha_max = std::min(alpha_max, -1.0 / eig[b](0));
    }
    const double dsig = phase1_ ? dir(n_params_) : 0.0;
    if (phase1_ && dsig > 0.0) alpha_max = std::min(alpha_max, (cap_ - sigma_) / dsig);

    // Directional data at the current point; all constraint arguments are
    // affine in X so their values along the ray follow from first derivatives.
    struct Lin {
      double value;
      double deriv;
    };
    std::vector<Lin> obj_logs;
    double obj_lin_deriv = 0.0;
    if (!phase1_) {
      for (const auto& t : pb_.linear_objective) obj_lin_deriv += inner(t.coeff, dx[t.block]);
      for (const auto& lt : pb_.log_terms) obj_logs.push_back({evaluate(lt.arg, x_), affine_derivative(lt.arg)});
    }

    struct ConData {
      double r;       // current slack (phase-1 shifted)
      double d1;      // linear part derivative
      Lin log_arg;    // log constraints
      double quad;    // ball: ‖dS‖²
    };
    std::vector<ConData> cons;
    for (std::size_t i = 0; i < refs_.size(); ++i) {
      const auto& c = refs_[i];
      ConData cd{raw_slack(pb_, c, x_), 0.0, {1.0, 0.0}, 0.0};
      switch (c.kind) {
        case Kind::affine:
          cd.d1 = -affine_derivative(pb_.affine_ineqs[c.index].expr);
          break;
        case Kind::log: {
          const auto& g = pb_.log_ineqs[c.index];
          cd.d1 = affine_derivative(g.linear);
          cd.log_arg = {evaluate(g.log_arg, x_), affine_derivative(g.log_arg)};
          break;
        }
        case Kind::ball: {
          const auto& ball = *pb_.frob_ball;
          const CMat d = ball_residual(ball, x_);
          CMat ds = CMat::Zero(d.rows(), d.cols());
          for (std::size_t b = 0; b < nb; ++b)
            if (ball.block_weights[b] != 0.0)
              ds += ball.block_weights[b] * dx[b];
          cd.d1 = -2.0 * inner(d, ds);
          cd.quad = -ds.squaredNorm();
          break;
        }
      }
      if (phase1_) {
        cd.r -= scales_[i] * sigma_;
        cd.d1 -= scales_[i] * dsig;
      }
      cons.push_back(cd);
    }

    // The merit is concave along the ray, so maximize it exactly over the
    // domain by bisection on its derivative.
    for (const auto& t : obj_logs)
      if (t.deriv < 0.0) alpha_max = std::min(alpha_max, -t.value / t.deriv);
    for (const auto& cd : cons)
      if (cd.log_arg.deriv < 0.0) alpha_max = std::min(alpha_max, -cd.log_arg.value / cd.log_arg.deriv);
    // Returns false outside the domain, otherwise the directional derivative.
    auto deriv_at = [&](double a, double& out) {
      double d = 0.0;
      for (std::size_t b = 0; b < nb; ++b)
        for (int i = 0; i < eig[b].size(); ++i) {
          const double den = 1.0 + a * eig[b](i);
          if (!(den > 0.0)) return false;
          d += eig[b](i) / den;
        }
      if (phase1_) {
        const double v = dsig / (cap_ - sigma_);
        const double den = 1.0 - a * v;
        if (!(den > 0.0)) return false;
        d += -v / den + dsig / mu;
      } else {
        d += obj_lin_deriv / mu;
        for (std::size_t t = 0; t < obj_logs.size(); ++t) {
          const double v = obj_logs[t].deriv / obj_logs[t].value;
          const double den = 1.0 + a * v;
          if (!(den > 0.0)) return false;
          d += pb_.log_terms[t].weight * v / (den * mu);
        }
      }
      for (std::size_t i = 0; i < cons.size(); ++i) {
        const auto& cd = cons[i];
        double r = cd.r + a * cd.d1 + a * a * cd.quad;
        double dr = cd.d1 + 2.0 * a * cd.quad;
        if (refs_[i].kind == Kind::log) {
          const double w = pb_.log_ineqs[refs_[i].index].weight;
          const double v = cd.log_arg.deriv / cd.log_arg.value;
          const double den = 1.0 + a * v;
          if (!(den > 0.0)) return false;
          r += w * std::log1p(a * v);
          dr += w * v / den;
        }
        if (!(r > 0.0)) return false;
        d += dr / r;
      }
      out = d;
      return std::isfinite(d);
    };

    double lo = 0.0;
    double hi = alpha_max;
    double d = 0.0;
    if (!std::isfinite(hi)) {
      hi = 1.0;
      while (hi < 1e8 && deriv_at(hi, d) && d > 0.0) {
        lo = hi;
        hi *= 4.0;
      }
    }
    const double slope = res.decrement2;
    for (int it = 0; it < 100 && hi - lo > 1e-15 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (deriv_at(mid, d) && d > 0.0) {
        lo = mid;
        if (d <= 1e-6 * slope) break;
      } else {
        hi = mid;
        if (deriv_at(mid, d) && -d <= 1e-6 * slope) {
          lo = mid;
          break;
        }
      }
    }
    const double alpha = lo;
    if (!(alpha > 0.0)) return;

    for (std::size_t b = 0; b < nb; ++b) {
      const CMat& l = chol_[b];
      CMat u = CMat::Identity(du[b].rows(), du[b].cols()) + alpha * du[b];
      x_[b] = hermitian_part(l * u * l.adjoint());
    }
    if (phase1_) sigma_ += alpha * dsig;
    res.alpha = alpha;
    res.accepted = true;
  }

  const Problem& pb_;
  std::vector<CMat> x_;
  std::vector<ConstraintRef> refs_;
  std::vector<int> offsets_;
  std::map<int, Basis> bases_;
  int n_params_ = 0;
  std::vector<CMat> chol_;

  bool phase1_ = false;
  std::vector<double> scales_;
  double sigma_ = 0.0;
  double cap_ = 0.0;
};

double min_block_eigenvalue(std::span<const CMat> blocks) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& b : blocks) m = std::min(m, min_eigenvalue(b));
  return m;
}

bool strictly_feasible(const Problem& p, std::span<const CMat> x) {
  for (const auto& b : x)
    if (!cholesky_ok(b)) return false;
  for (const auto& c : list_constraints(p))
    if (!(raw_slack(p, c, x) > 0.0)) return false;
  for (const auto& lt : p.log_terms)
    if (!(evaluate(lt.arg, x) > 0.0)) return false;
  return true;
}

std::vector<CMat> scaled_identity(const Problem& p, double c) {
  std::vector<CMat> x;
  for (int n : p.block_sizes) x.push_back(c * CMat::Identity(n, n));
  return x;
}

// Minimum slack normalized by max(1, |bound|); PSD margin by λ_min.
double min_normalized_slack(const Problem& p, std::span<const CMat> x) {
  double m = min_block_eigenvalue(x);
  for (const auto& c : list_constraints(p))
    m = std::min(m, raw_slack(p, c, x) / std::max(1.0, std::abs(constraint_bound(p, c))));
  return m;
}

int barrier_count(const Problem& p) {
  int nu = 0;
  for (int n : p.block_sizes) nu += n;
  nu += static_cast<int>(p.affine_ineqs.size() + p.log_ineqs.size());
  if (p.frob_ball) ++nu;
  return nu;
}

void check_affine(const Problem& p, const Affine& a, const std::string& where) {
  for (const auto& t : a.terms) {
    if (t.block >= p.n_blocks()) throw DomainError(where + ": block index out of range");
    const int n = p.block_sizes[t.block];
    if (t.coeff.rows() != n || t.coeff.cols() != n) throw DomainError(where + ": coefficient size mismatch");
    if (!is_hermitian(t.coeff, 1e-9)) throw DomainError(where + ": coefficient not Hermitian");
  }
}

}  // namespace

const char* to_string(Status s) {
  switch (s) {
    case Status::optimal:
      return "optimal";
    case Status::infeasible:
      return "infeasible";
    case Status::max_iter:
      return "max_iter";
  }
  return "unknown";
}

void Problem::validate() const {
  if (block_sizes.empty()) throw DomainError("conic problem: no blocks");
  for (int n : block_sizes)
    if (n < 1) throw DomainError("conic problem: block size must be positive");
  for (const auto& t : linear_objective) check_affine(*this, Affine{{t}, 0.0}, "linear objective");
  for (const auto& lt : log_terms) {
    if (!(lt.weight > 0.0)) throw DomainError("conic problem: log-term weight must be positive");
    check_affine(*this, lt.arg, "log term");
  }
  for (const auto& a : affine_ineqs) check_affine(*this, a.expr, a.name);
  for (const auto& g : log_ineqs) {
    if (!(g.weight > 0.0)) throw DomainError(g.name + ": weight must be positive");
    check_affine(*this, g.log_arg, g.name);
    check_affine(*this, g.linear, g.name);
  }
  if (frob_ball) {
    const auto& b = *frob_ball;
    if (b.block_weights.size() != n_blocks()) throw DomainError(b.name + ": one weight per block required");
    if (!(b.radius2 > 0.0)) throw DomainError(b.name + ": radius² must be positive");
    for (std::size_t i = 0; i < n_blocks(); ++i)
      if (b.block_weights[i] != 0.0 && (b.center.rows() != block_sizes[i] || b.center.cols() != block_sizes[i]))
        throw DomainError(b.name + ": center size differs from a participating block");
    if (!is_hermitian(b.center, 1e-9)) throw DomainError(b.name + ": center not Hermitian");
  }
  if (!start_hint.empty()) {
    if (start_hint.size() != n_blocks()) throw DomainError("conic problem: start hint block count mismatch");
    for (std::size_t i = 0; i < n_blocks(); ++i)
      if (start_hint[i].rows() != block_sizes[i]) throw DomainError("conic problem: start hint size mismatch");
  }
}

double evaluate(const Affine& a, std::span<const CMat> blocks) {
  double v = a.offset;
  for (const auto& t : a.terms) v += inner(t.coeff, blocks[t.block]);
  return v;
}

double objective_value(const Problem& problem, std::span<const CMat> blocks) {
  double f = 0.0;
  for (const auto& t : problem.linear_objective) f += inner(t.coeff, blocks[t.block]);
  for (const auto& lt : problem.log_terms) {
    const double a = evaluate(lt.arg, blocks);
    f += a > 0.0 ? lt.weight * std::log(a) : -std::numeric_limits<double>::infinity();
  }
  return f;
}

std::vector<ConstraintStatus> constraint_slacks(const Problem& problem, std::span<const CMat> blocks) {
  std::vector<ConstraintStatus> out;
  for (const auto& c : list_constraints(problem))
    out.push_back({c.name, raw_slack(problem, c, blocks), std::max(1.0, std::abs(constraint_bound(problem, c)))});
  return out;
}

double max_violation(const Problem& problem, std::span<const CMat> blocks) {
  double v = 0.0;
  for (const auto& c : constraint_slacks(problem, blocks)) v = std::max(v, -c.slack / c.scale);
  for (const auto& b : blocks) v = std::max(v, -min_eigenvalue(b) / std::max(1.0, std::abs(trace_real(b))));
  return v;
}

std::vector<CMat> strict_feasible_start(const Problem& problem, const Settings& settings) {
  problem.validate();
  std::vector<std::vector<CMat>> candidates;

  if (!problem.start_hint.empty()) {
    std::vector<CMat> x;
    for (std::size_t b = 0; b < problem.n_blocks(); ++b) {
      const CMat h = hermitian_part(problem.start_hint[b]);
      const int n = problem.block_sizes[b];
      const double level = std::max(std::abs(trace_real(h)) / n, 1e-12);
      const double lmin = min_eigenvalue(h);
      const double shift = std::max(1e-6 * level, 1e-6 * level - lmin);
      x.push_back(h + shift * CMat::Identity(n, n));
    }
    candidates.push_back(std::move(x));
  }

  // Identities scaled so that every upper-bounded affine constraint keeps half its room.
  {
    const auto unit = scaled_identity(problem, 1.0);
    double c = std::numeric_limits<double>::infinity();
    for (const auto& a : problem.affine_ineqs) {
      const double room = a.bound - a.expr.offset;
      const double per_unit = evaluate(a.expr, unit) - a.expr.offset;
      if (per_unit > 0.0 && room > 0.0) c = std::min(c, room / (2.0 * per_unit));
    }
    if (std::isfinite(c)) candidates.push_back(scaled_identity(problem, c));
    if (problem.frob_ball) {
      const auto& ball = *problem.frob_ball;
      const CMat s = ball_residual(ball, unit) + ball.center;
      const double proj = inner(s, ball.center) / std::max(s.squaredNorm(), 1e-300);
      if (proj > 0.0) candidates.push_back(scaled_identity(problem, proj));
    }
  }
  for (int k = 0; k <= 8; ++k) {
    candidates.push_back(scaled_identity(problem, std::pow(10.0, -k)));
    if (k > 0) candidates.push_back(scaled_identity(problem, std::pow(10.0, k)));
  }

  const std::vector<CMat>* best = nullptr;
  double best_score = -std::numeric_limits<double>::infinity();
  for (const auto& cand : candidates) {
    if (strictly_feasible(problem, cand)) return cand;
    bool domain_ok = true;
    for (const auto& b : cand) domain_ok = domain_ok && cholesky_ok(b);
    for (const auto& lt : problem.log_terms) domain_ok = domain_ok && evaluate(lt.arg, cand) > 0.0;
    for (const auto& g : problem.log_ineqs) domain_ok = domain_ok && evaluate(g.log_arg, cand) > 0.0;
    if (!domain_ok) continue;
    // A hint, when present, is the preferred phase-1 origin.
    const double score = (&cand == &candidates.front() && !problem.start_hint.empty())
                             ? std::numeric_limits<double>::max()
                             : min_normalized_slack(problem, cand);
    if (score > best_score) {
      best_score = score;
      best = &cand;
    }
  }
  if (best == nullptr) throw InfeasibleError("domain", "no candidate start keeps every log argument positive");

  // Phase 1: maximize σ subject to r_i(X) ≥ scale_i·σ, X ≻ 0.
  Engine eng(problem, *best);
  const auto refs = eng.refs();
  if (refs.empty()) return *best;
  std::vector<double> scales = eng.constraint_gradient_norms();
  for (auto& s : scales) s = std::max(s, 1e-300);
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < refs.size(); ++i) m = std::min(m, raw_slack(problem, refs[i], *best) / scales[i]);
  const double sigma0 = m - std::max(1e-3, 0.5 * std::abs(m));
  const double cap = std::abs(m) + 10.0 * std::max(1.0, std::abs(m));
  eng.enable_phase1(scales, sigma0, cap);

  const int nu = barrier_count(problem) + 1;
  // A larger μ lets the barrier drag the iterate far from the origin.
  double mu = std::min(1.0, std::abs(sigma0) / nu);
  int steps = 0;
  const int max_steps = std::max(settings.max_iter, 50);
  bool reached = false;
  for (int stage = 0; stage < 60; ++stage) {
    for (;;) {
      if (steps >= max_steps) break;
      const auto r = eng.newton_step(mu);
      if (r.centered || !r.accepted) break;
      ++steps;
      if (eng.sigma() > 0.0 && strictly_feasible(problem, eng.x())) reached = true;
    }
    if (reached && strictly_feasible(problem, eng.x())) return eng.x();
    if (eng.sigma() + nu * mu < 0.0 || steps >= max_steps || mu < 1e-14) break;
    mu /= 10.0;
  }

  std::size_t worst = 0;
  double worst_v = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const double v = raw_slack(problem, refs[i], eng.x()) / scales[i];
    if (v < worst_v) {
      worst_v = v;
      worst = i;
    }
  }
  std::ostringstream os;
  os << "no strictly feasible point (phase-1 min normalized slack " << eng.sigma()
     << ", tightest constraint slack " << raw_slack(problem, refs[worst], eng.x()) << ")";
  throw InfeasibleError(refs[worst].name, os.str());
}

namespace {

Solution solve_unobserved(const Problem& problem, const Settings& settings) {
  if (!(settings.mu_factor > 1.0)) throw DomainError("conic settings: mu_factor must exceed 1");
  if (!(settings.tol > 0.0) || !(settings.mu0 > 0.0)) throw DomainError("conic settings: tol and mu0 must be positive");
  Solution sol;
  std::vector<CMat> x0;
  try {
    x0 = strict_feasible_start(problem, settings);
  } catch (const InfeasibleError& e) {
    sol.status = Status::infeasible;
    sol.message = e.what();
    sol.binding_constraint = e.constraint();
    return sol;
  }

  Engine eng(problem, std::move(x0));
  const int nu = barrier_count(problem);
  double mu = settings.mu0;
  int steps = 0;
  sol.status = Status::max_iter;
  for (int stage = 0;; ++stage) {
    bool out_of_steps = false;
    for (;;) {
      if (steps >= settings.max_iter) {
        out_of_steps = true;
        break;
      }
      const auto r = eng.newton_step(mu);
      if (r.centered || !r.accepted) break;
      ++steps;
      if (settings.record_trace) {
        TraceRecord tr;
        tr.stage = stage;
        tr.newton_step = steps;
        tr.mu = mu;
        tr.merit = eng.merit(mu);
        tr.objective = eng.objective();
        tr.min_eigenvalue = min_block_eigenvalue(eng.x());
        tr.max_violation = max_violation(problem, eng.x());
        sol.trace.push_back(tr);
      }
    }
    const double f = eng.objective();
    sol.kkt_residual = nu * mu / (1.0 + std::abs(f));
    if (out_of_steps) {
      sol.message = "Newton step cap reached";
      break;
    }
    sol.stage_objectives.push_back(f);
    if (nu * mu <= 0.5 * settings.tol * (1.0 + std::abs(f))) {
      sol.status = Status::optimal;
      break;
    }
    if (mu < 1e-300) break;
    mu /= settings.mu_factor;
  }
  sol.block_values = eng.x();
  sol.objective = eng.objective();
  sol.newton_steps = steps;
  return sol;
}

}  // namespace

Solution solve(const Problem& problem, const Settings& settings) {
  Solution sol = solve_unobserved(problem, settings);
  if (settings.observer) settings.observer(problem, sol);
  return sol;
}

CertificateReport certify(const Problem& problem, std::span<const CMat> blocks, double tol, int n_directions,
                          std::uint64_t seed) {
  if (blocks.size() != problem.n_blocks()) throw DomainError("certify: block count mismatch");
  for (std::size_t b = 0; b < blocks.size(); ++b)
    if (blocks[b].rows() != problem.block_sizes[b] || blocks[b].cols() != problem.block_sizes[b])
      throw DomainError("certify: block size mismatch");
  CertificateReport rep;
  rep.directions = n_directions;
  const double f0 = objective_value(problem, blocks);
  rep.allowed_gain = tol * (1.0 + std::abs(f0));
  rep.max_violation = max_violation(problem, blocks);
  const std::size_t nb = blocks.size();

  std::vector<CMat> grad;
  for (std::size_t b = 0; b < nb; ++b) grad.push_back(CMat::Zero(blocks[b].rows(), blocks[b].cols()));
  for (const auto& t : problem.linear_objective) grad[t.block] += t.coeff;
  for (const auto& lt : problem.log_terms) {
    const double a = evaluate(lt.arg, blocks);
    for (const auto& t : lt.arg.terms) grad[t.block] += (lt.weight / a) * t.coeff;
  }
  auto total_norm = [](const std::vector<CMat>& v) {
    double s = 0.0;
    for (const auto& m : v) s += m.squaredNorm();
    return std::sqrt(s);
  };
  const double x_norm = std::max(total_norm(std::vector<CMat>(blocks.begin(), blocks.end())), 1e-12);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  auto random_hermitian = [&](int n) {
    CMat r(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) r(i, j) = cdouble(normal(rng), normal(rng));
    return hermitian_part(r);
  };

  std::vector<CMat> trial(nb);
  for (int d = 0; d < n_directions; ++d) {
    std::vector<CMat> dir(nb);
    const double g_norm = std::max(total_norm(grad), 1e-300);
    for (std::size_t b = 0; b < nb; ++b) {
      const int n = static_cast<int>(blocks[b].rows());
      if (d == 0) dir[b] = grad[b];
      else if (d < n_directions / 2) dir[b] = grad[b] / g_norm + std::uniform_real_distribution<double>(0.0, 1.0)(rng) * random_hermitian(n) / n;
      else dir[b] = random_hermitian(n);
    }
    const double dn = std::max(total_norm(dir), 1e-300);
    for (auto& m : dir) m *= x_norm / dn;

    for (int j = 0; j <= 50; ++j) {
      const double alpha = std::ldexp(1.0, -j);
      for (std::size_t b = 0; b < nb; ++b) trial[b] = blocks[b] + alpha * dir[b];
      bool feasible = true;
      for (const auto& t : trial)
        if (min_eigenvalue(t) < 0.0) feasible = false;
      if (feasible)
        for (const auto& c : constraint_slacks(problem, trial))
          if (c.slack < 0.0) feasible = false;
      if (!feasible) continue;
      const double gain = objective_value(problem, trial) - f0;
      if (std::isfinite(gain)) rep.max_gain = std::max(rep.max_gain, gain);
    }
  }
  rep.passed = rep.max_gain <= rep.allowed_gain && rep.max_violation <= 1e-6;
  return rep;
}

void write_trace_csv(std::ostream& os, const Solution& solution) {
  os << "stage,newton_step,mu,merit,objective,min_eigenvalue,max_violation\n";
  os.precision(17);
  for (const auto& t : solution.trace)
    os << t.stage << ',' << t.newton_step << ',' << t.mu << ',' << t.merit << ',' << t.objective << ','
       << t.min_eigenvalue << ',' << t.max_violation << '\n';
}

}  // namespace issc::conic
