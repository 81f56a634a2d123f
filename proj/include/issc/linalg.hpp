#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace issc {

using cdouble = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;

/// Raised when an argument lies outside the mathematical domain of an operation.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a subproblem has no (strictly) feasible point. `constraint()`
/// names the binding or tightest constraint.
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(std::string constraint, const std::string& detail)
      : std::runtime_error(constraint + ": " + detail), constraint_(std::move(constraint)) {}
  const std::string& constraint() const noexcept { return constraint_; }

 private:
  std::string constraint_;
};

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }
inline double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }

/// Re tr(A^H B), the real Frobenius inner product.
inline double inner(const CMat& a, const CMat& b) {
  return (a.conjugate().cwiseProduct(b)).sum().real();
}

inline double frob2(const CMat& a) { return a.squaredNorm(); }

inline CMat hermitian_part(const CMat& a) { return 0.5 * (a + a.adjoint()); }

/// True when ‖A − A^H‖_F ≤ rel_tol·max(1, ‖A‖_F).
inline bool is_hermitian(const CMat& a, double rel_tol = 1e-10) {
  if (a.rows() != a.cols()) return false;
  return (a - a.adjoint()).norm() <= rel_tol * std::max(1.0, a.norm());
}

/// Eigenvalues of the Hermitian part of `a`, ascending.
inline RVec hermitian_eigenvalues(const CMat& a) {
  Eigen::SelfAdjointEigenSolver<CMat> es(hermitian_part(a), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

inline double min_eigenvalue(const CMat& a) { return hermitian_eigenvalues(a)(0); }

inline double trace_real(const CMat& a) { return a.trace().real(); }

}  // namespace issc
