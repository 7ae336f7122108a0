#include "hybridbf/linalg.hpp"

#include <cmath>
#include <limits>

namespace hybridbf::linalg {

CMat pinv(const CMat& a, double rcond) {
  if (a.size() == 0) return CMat::Zero(a.cols(), a.rows());
  Eigen::JacobiSVD<CMat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RVec& s = svd.singularValues();
  const double cutoff = rcond * (s.size() > 0 ? s(0) : 0.0);
  RVec inv = RVec::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff && s(i) > 0.0) inv(i) = 1.0 / s(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint();
}

bool try_logdet_hpd(const CMat& a, double& out) {
  Eigen::LLT<CMat> llt(hermitian_part(a));
  if (llt.info() != Eigen::Success) return false;
  double acc = 0.0;
  const auto& l = llt.matrixLLT();
  for (Eigen::Index i = 0; i < l.rows(); ++i) {
    const double d = l(i, i).real();
    if (!(d > 0.0) || !std::isfinite(d)) return false;
    acc += 2.0 * std::log(d);
  }
  out = acc;
  return true;
}

double logdet_hpd(const CMat& a) {
  double v = 0.0;
  if (!try_logdet_hpd(a, v)) {
    throw NumericalError("logdet_hpd: matrix is not Hermitian positive definite");
  }
  return v;
}

double condition_number(const CMat& a) {
  if (a.size() == 0) return 1.0;
  Eigen::JacobiSVD<CMat> svd(a);
  const RVec& s = svd.singularValues();
  const double smin = s(s.size() - 1);
  if (smin <= 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / smin;
}

double max_abs(const CMat& a) {
  double m = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i) m = std::max(m, std::abs(a(i, j)));
  return m;
}

double sum_squared_norm(const MatList& ms) {
  double s = 0.0;
  for (const auto& m : ms) s += m.squaredNorm();
  return s;
}

}  // namespace hybridbf::linalg
