#pragma once

#include "hybridbf/model.hpp"
#include "hybridbf/power_bisection.hpp"
#include "hybridbf/unit_modulus.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>

namespace hybridbf {

struct PddConfig {
  std::optional<double> rho0;  // defaults to 100 / N
  double c = 0.8;
  double eta0 = 1e-3;
  double eps0 = 1e-3;
  double eps_outer = 1e-6;
  int max_inner = 30;
  int max_outer = 200;
  double eta_factor = 0.9;
  int finite_warmstart_iters = 20;
  /// Algorithm-4 sweeps per analog update.
  int rf_sweeps = 1;
  SweepOrder sweep_order = SweepOrder::kRowMajor;

  double initial_rho(const SystemConfig& cfg) const;
  void validate() const;
};

/// Auxiliary precoders X, duals Y, MSE weights W and the penalty schedule.
struct PddState {
  HybridState hybrid;
  MatList x;
  MatList y;
  MatList w;
  double rho = 1.0;  // penalty term weight is 1 / (2 rho)
  double eta = 1e-3;
  double eps = 1e-3;
  int outer_iter = 0;
  PhaseSet phases;  // currently active resolution
};

/// Per-user receive covariances sigma^2 I + sum_j H_k X_j X_j^H H_k^H, shared
/// by the U_BB and U_RF updates of one inner cycle.
struct SubproblemWorkspace {
  MatList a_k;

  void refresh(const SystemConfig& cfg, const MatList& h, const MatList& x);
};

CMat receive_covariance(const SystemConfig& cfg, const CMat& h_k, const MatList& x);

/// Augmented Lagrangian in nats (to be maximized).
double aug_lagrangian_value(const SystemConfig& cfg, const ChannelSet& channels, const PddState& st);

/// max_k max_ij |X_k - V_RF V_BB_k|.
double constraint_violation(const PddState& st);

CMat update_ubb(const CMat& a_k, const CMat& h_k, const CMat& u_rf_k, const CMat& x_k);

/// (I - U_BB^H U_RF^H H X)^{-1}; throws NumericalError if the bracket has
/// condition number above 1e14.
CMat update_w(const CMat& h_k, const CMat& u_rf_k, const CMat& u_bb_k, const CMat& x_k);

/// argmin ||V_RF V_BB - Z||.
CMat update_vbb(const CMat& v_rf, const CMat& z_k);

struct XUpdateTerms {
  CMat a_rho;
  MatList b_rho;
};

XUpdateTerms x_update_terms(const SystemConfig& cfg, const ChannelSet& channels, const PddState& st);

PowerSolution update_x(const SystemConfig& cfg, const ChannelSet& channels, const PddState& st);

QuadUmProblem vrf_problem(const PddState& st);
CMat update_vrf(const PddState& st, const BcdOptions& options = {});

QuadUmProblem urf_problem(const SubproblemWorkspace& ws, const ChannelSet& channels,
                          const PddState& st, int k);
CMat update_urf(const SubproblemWorkspace& ws, const ChannelSet& channels, const PddState& st,
                int k, const BcdOptions& options = {});

enum class Block { kUbb, kW, kVrf, kUrf, kVbb, kX };
const char* block_name(Block b);

struct InnerResult {
  int cycles = 0;
  double objective = 0.0;
  std::vector<double> trace;  // value before the first cycle, then after each
};

using BlockObserver = std::function<void(Block, const PddState&)>;

/// Runs U_BB -> W -> V_RF -> U_RF -> V_BB -> X cycles until the relative
/// change of the augmented Lagrangian is at most st.eps or max_inner cycles.
InnerResult inner_bcd(const SystemConfig& cfg, const ChannelSet& channels, PddState& st,
                      const PddConfig& pdd_cfg, const BlockObserver& observer = {});

/// Random unit-modulus analog matrices, Gaussian V_BB at full power, X = V_RF V_BB,
/// Y = 0, then U_BB and W from their closed forms.
PddState initialize_state(const SystemConfig& cfg, const ChannelSet& channels,
                          const PddConfig& pdd_cfg, std::uint64_t seed);

struct PddIteration {
  int outer_iter = 0;
  double objective_nats = 0.0;
  double violation = 0.0;
  double rho = 0.0;
  double rate_bpshz = 0.0;
  int inner_cycles = 0;
  bool dual_step = false;
};

struct PddReport {
  std::vector<PddIteration> iterations;
  bool converged = false;
  int outer_iters = 0;
  double final_violation = 0.0;
  double rate_bpshz = 0.0;
  /// sum_k log2 det W_k with U_BB, W refreshed at the final iterate.
  double sum_log2det_w = 0.0;
  /// Outer iteration at which the violation first dropped to eps_outer, or -1.
  int iters_to_tolerance = -1;
  PddState final_state;
};

struct PddResult {
  HybridState hybrid;  // power-feasible
  PddReport report;
};

PddResult pdd_solve(const SystemConfig& cfg, const ChannelSet& channels, const PddConfig& pdd_cfg,
                    std::uint64_t seed);

/// outer_iter,objective_nats,violation,rho,rate_bpshz
void write_report_csv(std::ostream& out, const PddReport& report);

}  // namespace hybridbf
