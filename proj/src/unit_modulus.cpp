#include "hybridbf/unit_modulus.hpp"

#include "hybridbf/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace hybridbf {

namespace {

void check_hermitian_psd(const CMat& m, const char* name) {
  if (m.rows() != m.cols()) {
    throw std::invalid_argument(std::string("QuadUmProblem: ") + name + " must be square");
  }
  const double scale = std::max(1.0, m.norm());
  if ((m - m.adjoint()).norm() > 1e-10 * scale) {
    throw std::invalid_argument(std::string("QuadUmProblem: ") + name + " is not Hermitian");
  }
  Eigen::SelfAdjointEigenSolver<CMat> eig(linalg::hermitian_part(m), Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().size() > 0 && eig.eigenvalues()(0) < -1e-10 * scale) {
    throw std::invalid_argument(std::string("QuadUmProblem: ") + name + " is not PSD");
  }
}

double score(cplx b, cplx x) { return (std::conj(b) * x).real(); }

}  // namespace

void QuadUmProblem::validate() const {
  if (c.rows() != b.cols()) throw std::invalid_argument("QuadUmProblem: C/B size mismatch");
  check_hermitian_psd(c, "C");
  if (a) {
    if (a->rows() != b.rows()) throw std::invalid_argument("QuadUmProblem: A/B size mismatch");
    check_hermitian_psd(*a, "A");
  }
}

CMat product_axc(const QuadUmProblem& prob, const CMat& x) {
  return prob.a ? CMat((*prob.a) * x * prob.c) : CMat(x * prob.c);
}

double objective(const QuadUmProblem& prob, const CMat& x) {
  const CMat axc = product_axc(prob, x);
  return (x.adjoint() * axc).trace().real() - 2.0 * (x.adjoint() * prob.b).trace().real();
}

cplx entry_coefficient(const QuadUmProblem& prob, const CMat& x, const CMat& q,
                       Eigen::Index i, Eigen::Index j) {
  return prob.a_diag(i) * x(i, j) * prob.c(j, j) - q(i, j) + prob.b(i, j);
}

cplx entry_argmax(cplx b, const PhaseSet& phases, cplx current) {
  if (!phases.is_finite()) {
    const double mag = std::abs(b);
    if (mag == 0.0 || !std::isfinite(mag)) return current;
    return b / mag;
  }
  const auto& values = phases.values();
  // Values within a few ulps of the best are ties; keep the earlier index.
  const double tie = 64.0 * std::numeric_limits<double>::epsilon() * std::abs(b);
  std::size_t best = 0;
  double best_score = score(b, values[0]);
  for (std::size_t m = 1; m < values.size(); ++m) {
    const double s = score(b, values[m]);
    if (s > best_score + tie) {
      best = m;
      best_score = s;
    }
  }
  return values[best];
}

BcdResult bcd_sweep(const QuadUmProblem& prob, const CMat& x0, const BcdOptions& options) {
  const Eigen::Index m = prob.rows();
  const Eigen::Index n = prob.cols();
  if (x0.rows() != m || x0.cols() != n) {
    throw std::invalid_argument("bcd_sweep: starting point has the wrong shape");
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < m; ++i) {
      if (!prob.phases.contains(x0(i, j), 1e-9)) {
        throw std::invalid_argument("bcd_sweep: entry (" + std::to_string(i) + ", " +
                                    std::to_string(j) + ") of the start is off the phase set");
      }
    }
  }

  BcdResult res;
  res.x = x0;
  res.q = product_axc(prob, res.x);
  auto current_objective = [&] {
    return (res.x.adjoint() * res.q).trace().real() -
           2.0 * (res.x.adjoint() * prob.b).trace().real();
  };
  double prev = current_objective();
  res.objective_trace.push_back(prev);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(m * n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  CounterRng rng(options.seed);

  for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
    if (options.order == SweepOrder::kRandom) {
      for (std::size_t t = order.size(); t > 1; --t) {
        const auto r = static_cast<std::size_t>(rng.next_u64() % t);
        std::swap(order[t - 1], order[r]);
      }
    }
    for (const Eigen::Index flat : order) {
      const Eigen::Index i = flat / n;
      const Eigen::Index j = flat % n;
      const cplx old = res.x(i, j);
      const cplx b = entry_coefficient(prob, res.x, res.q, i, j);
      const cplx next = entry_argmax(b, prob.phases, old);
      if (score(b, next) > score(b, old)) {
        const cplx delta = next - old;
        res.x(i, j) = next;
        if (prob.a) {
          res.q.noalias() += delta * prob.a->col(i) * prob.c.row(j);
        } else {
          res.q.row(i) += delta * prob.c.row(j);
        }
      }
      if (options.on_entry) options.on_entry(i, j, res.x);
    }
    ++res.sweeps;
    const double now = current_objective();
    res.objective_trace.push_back(now);
    const double before = prev;
    prev = now;
    if (before - now <= options.tolerance * std::abs(before)) break;
  }
  return res;
}

CMat quantize_nearest(const CMat& x, const PhaseSet& phases) {
  if (!phases.is_finite()) throw std::invalid_argument("quantize_nearest: phase set must be finite");
  CMat out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i) out(i, j) = phases.values()[phases.nearest_index(x(i, j))];
  return out;
}

CMat project_to_phase_set(const CMat& x, const PhaseSet& phases) {
  CMat out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double mag = std::abs(x(i, j));
      out(i, j) = mag > 0.0 ? x(i, j) / mag : cplx{1.0, 0.0};
    }
  }
  return phases.is_finite() ? quantize_nearest(out, phases) : out;
}

}  // namespace hybridbf
