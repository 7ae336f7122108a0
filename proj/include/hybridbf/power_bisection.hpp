#pragma once

#include "hybridbf/linalg.hpp"

namespace hybridbf {

/// min_X sum_k Tr(X_k^H A X_k) - 2 Re Tr(X_k^H B_k)  s.t.  sum_k ||X_k||^2 <= P,
/// with A Hermitian PSD. The minimizer is X_k(mu) = (A + mu I)^{-1} B_k, and
/// with A = U diag(a) U^H the transmit power is sum_i w_i / (a_i + mu)^2 where
/// w_i = sum_k [U^H B_k B_k^H U]_ii.
class PowerBisection {
 public:
  PowerBisection(const CMat& a, const MatList& b);

  double power(double mu) const;
  /// sqrt(sum_i w_i / P): power(mu) <= P for every mu at or above it.
  double mu_upper_bound(double power_budget) const;
  MatList solution(double mu) const;

  const RVec& eigenvalues() const { return eig_; }
  const RVec& weights() const { return weights_; }

 private:
  bool in_null_space(Eigen::Index i, double mu) const;

  RVec eig_;
  CMat vecs_;
  MatList rotated_;  // U^H B_k
  RVec weights_;
  double null_cut_ = 0.0;
};

struct PowerSolution {
  MatList x;
  double mu = 0.0;
  double power = 0.0;
  int iterations = 0;
};

/// mu = 0 when the unconstrained solution fits the budget; otherwise bisection on
/// [0, mu_upper_bound] until |power - P| <= 1e-10 P or the bracket is narrower
/// than 1e-14 (1 + mu_upper_bound).
PowerSolution solve_power_constrained(const CMat& a, const MatList& b, double power_budget);

}  // namespace hybridbf
