#include "hybridbf/power_bisection.hpp"

#include <cmath>
#include <stdexcept>

namespace hybridbf {

PowerBisection::PowerBisection(const CMat& a, const MatList& b) {
  Eigen::SelfAdjointEigenSolver<CMat> eig(linalg::hermitian_part(a));
  if (eig.info() != Eigen::Success) {
    throw NumericalError("PowerBisection: eigendecomposition failed");
  }
  eig_ = eig.eigenvalues().cwiseMax(0.0);
  vecs_ = eig.eigenvectors();
  null_cut_ = linalg::kPinvCutoff * (eig_.size() > 0 ? eig_.maxCoeff() : 0.0);
  weights_ = RVec::Zero(eig_.size());
  rotated_.reserve(b.size());
  for (const auto& bk : b) {
    CMat r = vecs_.adjoint() * bk;
    weights_ += r.rowwise().squaredNorm();
    rotated_.push_back(std::move(r));
  }
}

bool PowerBisection::in_null_space(Eigen::Index i, double mu) const {
  return mu <= 0.0 && eig_(i) <= null_cut_;
}

double PowerBisection::power(double mu) const {
  double p = 0.0;
  for (Eigen::Index i = 0; i < eig_.size(); ++i) {
    if (in_null_space(i, mu)) continue;
    const double den = eig_(i) + mu;
    p += weights_(i) / (den * den);
  }
  return p;
}

double PowerBisection::mu_upper_bound(double power_budget) const {
  return std::sqrt(weights_.sum() / power_budget);
}

MatList PowerBisection::solution(double mu) const {
  RVec scale(eig_.size());
  for (Eigen::Index i = 0; i < eig_.size(); ++i) {
    scale(i) = in_null_space(i, mu) ? 0.0 : 1.0 / (eig_(i) + mu);
  }
  MatList x;
  x.reserve(rotated_.size());
  for (const auto& r : rotated_) x.push_back(vecs_ * (scale.asDiagonal() * r));
  return x;
}

PowerSolution solve_power_constrained(const CMat& a, const MatList& b, double power_budget) {
  if (!(power_budget > 0.0)) throw std::invalid_argument("solve_power_constrained: P <= 0");
  const PowerBisection pb(a, b);
  PowerSolution out;
  const double p0 = pb.power(0.0);
  if (p0 <= power_budget) {
    out.mu = 0.0;
    out.power = p0;
    out.x = pb.solution(0.0);
    return out;
  }
  const double mu_max = pb.mu_upper_bound(power_budget);
  double lo = 0.0;
  double hi = mu_max;
  double p_hi = pb.power(hi);
  double mu = hi;
  double p_mu = p_hi;
  for (int it = 0; it < 400; ++it) {
    ++out.iterations;
    const double mid = 0.5 * (lo + hi);
    const double p = pb.power(mid);
    if (std::abs(p - power_budget) <= 1e-10 * power_budget) {
      mu = mid;
      p_mu = p;
      break;
    }
    if (p > power_budget) {
      lo = mid;
    } else {
      hi = mid;
      p_hi = p;
    }
    // Feasible end of the bracket.
    mu = hi;
    p_mu = p_hi;
    if (hi - lo <= 1e-14 * (1.0 + mu_max)) break;
  }
  out.mu = mu;
  out.power = p_mu;
  out.x = pb.solution(mu);
  return out;
}

}  // namespace hybridbf
