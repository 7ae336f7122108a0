#pragma once

#include "hybridbf/linalg.hpp"
#include "hybridbf/phase_set.hpp"

#include <cstdint>
#include <functional>
#include <optional>

namespace hybridbf {

/// min_X  Tr(X^H A X C) - 2 Re Tr(X^H B)   s.t. every X(i, j) in `phases`.
///
/// A (m x m) and C (n x n) are Hermitian PSD. An empty `a` stands for the
/// identity, which lets the cached product be updated one row at a time.
struct QuadUmProblem {
  std::optional<CMat> a;
  CMat c;
  CMat b;
  PhaseSet phases;

  Eigen::Index rows() const { return b.rows(); }
  Eigen::Index cols() const { return b.cols(); }
  cplx a_diag(Eigen::Index i) const { return a ? (*a)(i, i) : cplx{1.0, 0.0}; }

  /// Checks dimensions and Hermitian PSD structure of A and C (within 1e-10, relative).
  void validate() const;
};

enum class SweepOrder { kRowMajor, kRandom };

struct BcdOptions {
  int max_sweeps = 100;
  double tolerance = 1e-8;
  SweepOrder order = SweepOrder::kRowMajor;
  std::uint64_t seed = 0;  // used by kRandom only
  /// Called after every entry visit with the current iterate.
  std::function<void(Eigen::Index i, Eigen::Index j, const CMat& x)> on_entry;
};

struct BcdResult {
  CMat x;
  CMat q;  // maintained A X C
  /// Objective at the start, then after every sweep.
  std::vector<double> objective_trace;
  int sweeps = 0;
};

CMat product_axc(const QuadUmProblem& prob, const CMat& x);

/// phi(X) evaluated from scratch.
double objective(const QuadUmProblem& prob, const CMat& x);

/// Linear coefficient b such that, with the other entries fixed,
/// phi = a |X(i,j)|^2 - 2 Re{conj(b) X(i,j)} + const. `q` must equal A X C.
cplx entry_coefficient(const QuadUmProblem& prob, const CMat& x, const CMat& q,
                       Eigen::Index i, Eigen::Index j);

/// Unit-modulus maximizer of Re{conj(b) x}. Infinite set: b/|b|, or `current`
/// when b = 0. Finite set: exhaustive search, smallest index on ties.
cplx entry_argmax(cplx b, const PhaseSet& phases, cplx current);

/// Cyclic (or seeded random-order) entrywise BCD with rank-one maintenance of
/// Q = A X C. Throws std::invalid_argument if x0 is off the phase set.
BcdResult bcd_sweep(const QuadUmProblem& prob, const CMat& x0, const BcdOptions& options = {});

/// Maps each entry to the nearest point of a finite phase set.
CMat quantize_nearest(const CMat& x, const PhaseSet& phases);

/// Projects every entry onto the unit circle (entries equal to 0 become 1)
/// and then onto the phase set when it is finite.
CMat project_to_phase_set(const CMat& x, const PhaseSet& phases);

}  // namespace hybridbf
