#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace hybridbf {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

/// One matrix per user.
using MatList = std::vector<CMat>;

/// Raised when an iterate violates a numerical precondition (singular
/// bracket in a weight update, non-PD weight matrix, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace linalg {

// Singular values below this fraction of the largest are treated as zero.
inline constexpr double kPinvCutoff = 1e-12;

inline CMat hermitian_part(const CMat& a) { return 0.5 * (a + a.adjoint()); }

CMat pinv(const CMat& a, double rcond = kPinvCutoff);

/// log det of a Hermitian positive definite matrix (natural log).
/// Throws NumericalError when the Cholesky factorization fails.
double logdet_hpd(const CMat& a);

/// Returns false instead of throwing.
bool try_logdet_hpd(const CMat& a, double& out);

/// 2-norm condition number via SVD; +inf for an exactly singular matrix.
double condition_number(const CMat& a);

/// Largest entrywise modulus.
double max_abs(const CMat& a);

double sum_squared_norm(const MatList& ms);

inline double relative_diff(double a, double b) {
  return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

}  // namespace linalg
}  // namespace hybridbf
