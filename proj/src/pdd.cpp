#include "hybridbf/pdd.hpp"

#include "hybridbf/rng.hpp"

#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace hybridbf {

namespace {

constexpr std::uint64_t kInitStream = 0x5044445F494E4954ULL;  // "PDD_INIT"

CMat random_phases(CounterRng& rng, Eigen::Index rows, Eigen::Index cols) {
  CMat out(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) out(i, j) = rng.unit_phase();
  return out;
}

CMat random_gaussian(CounterRng& rng, Eigen::Index rows, Eigen::Index cols) {
  CMat out(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) out(i, j) = rng.complex_gaussian();
  return out;
}

BcdOptions sweep_options(const PddConfig& pdd_cfg, std::uint64_t seed) {
  BcdOptions opts;
  opts.max_sweeps = pdd_cfg.rf_sweeps;
  opts.order = pdd_cfg.sweep_order;
  opts.seed = seed;
  return opts;
}

void refresh_receivers(const SystemConfig& cfg, const ChannelSet& channels, PddState& st) {
  SubproblemWorkspace ws;
  ws.refresh(cfg, channels.h, st.x);
  for (int k = 0; k < cfg.num_users; ++k) {
    st.hybrid.u_bb[k] = update_ubb(ws.a_k[k], channels.h[k], st.hybrid.u_rf[k], st.x[k]);
    st.w[k] = update_w(channels.h[k], st.hybrid.u_rf[k], st.hybrid.u_bb[k], st.x[k]);
  }
}

double scaled_rate(const SystemConfig& cfg, const ChannelSet& channels, const HybridState& hybrid) {
  HybridState copy = hybrid;
  scale_to_power(copy, cfg.power_budget, false);
  return spectral_efficiency(cfg, channels, copy).bps_hz;
}

}  // namespace

double PddConfig::initial_rho(const SystemConfig& cfg) const {
  return rho0.value_or(100.0 / cfg.num_tx_antennas);
}

void PddConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("PddConfig: ") + what);
  };
  require(!rho0 || *rho0 > 0.0, "rho0 must be positive");
  require(c > 0.0 && c < 1.0, "c must lie in (0, 1)");
  require(eta0 > 0.0 && eps0 > 0.0 && eps_outer > 0.0, "tolerances must be positive");
  require(max_inner >= 1 && max_outer >= 1, "iteration caps must be at least 1");
  require(eta_factor > 0.0, "eta_factor must be positive");
  require(finite_warmstart_iters >= 0, "finite_warmstart_iters must be non-negative");
  require(rf_sweeps >= 1, "rf_sweeps must be at least 1");
}

CMat receive_covariance(const SystemConfig& cfg, const CMat& h_k, const MatList& x) {
  CMat a = cfg.noise_variance * CMat::Identity(h_k.rows(), h_k.rows());
  for (const auto& xj : x) {
    const CMat hx = h_k * xj;
    a.noalias() += hx * hx.adjoint();
  }
  return linalg::hermitian_part(a);
}

void SubproblemWorkspace::refresh(const SystemConfig& cfg, const MatList& h, const MatList& x) {
  a_k.resize(h.size());
  for (std::size_t k = 0; k < h.size(); ++k) a_k[k] = receive_covariance(cfg, h[k], x);
}

double aug_lagrangian_value(const SystemConfig& cfg, const ChannelSet& channels, const PddState& st) {
  const int users = static_cast<int>(st.x.size());
  double value = 0.0;
  for (int k = 0; k < users; ++k) {
    double logdet_w = 0.0;
    if (!linalg::try_logdet_hpd(st.w[k], logdet_w)) {
      throw NumericalError("aug_lagrangian_value: W_" + std::to_string(k) +
                           " is not positive definite");
    }
    const CMat e = mse_matrix(cfg, channels.h[k], st.hybrid.u_rf[k], st.hybrid.u_bb[k], st.x, k);
    value += logdet_w - (st.w[k] * e).trace().real() + static_cast<double>(st.w[k].rows());
    const CMat gap = st.x[k] - st.hybrid.v_rf * st.hybrid.v_bb[k] + st.rho * st.y[k];
    value -= gap.squaredNorm() / (2.0 * st.rho);
  }
  return value;
}

double constraint_violation(const PddState& st) {
  double v = 0.0;
  for (std::size_t k = 0; k < st.x.size(); ++k) {
    v = std::max(v, linalg::max_abs(st.x[k] - st.hybrid.v_rf * st.hybrid.v_bb[k]));
  }
  return v;
}

CMat update_ubb(const CMat& a_k, const CMat& h_k, const CMat& u_rf_k, const CMat& x_k) {
  const CMat gram = linalg::hermitian_part(u_rf_k.adjoint() * a_k * u_rf_k);
  return linalg::pinv(gram) * (u_rf_k.adjoint() * h_k * x_k);
}

CMat update_w(const CMat& h_k, const CMat& u_rf_k, const CMat& u_bb_k, const CMat& x_k) {
  const Eigen::Index d = u_bb_k.cols();
  const CMat bracket = linalg::hermitian_part(CMat::Identity(d, d) -
                                              u_bb_k.adjoint() * u_rf_k.adjoint() * h_k * x_k);
  const double cond = linalg::condition_number(bracket);
  if (!(cond <= 1e14)) {
    throw NumericalError("update_w: bracket matrix is numerically singular (condition " +
                         std::to_string(cond) + ")");
  }
  return linalg::hermitian_part(bracket.inverse());
}

CMat update_vbb(const CMat& v_rf, const CMat& z_k) { return linalg::pinv(v_rf) * z_k; }

XUpdateTerms x_update_terms(const SystemConfig& cfg, const ChannelSet& channels, const PddState& st) {
  const Eigen::Index n = st.hybrid.v_rf.rows();
  XUpdateTerms t;
  t.a_rho = CMat::Identity(n, n) / (2.0 * st.rho);
  t.b_rho.reserve(st.x.size());
  for (int k = 0; k < cfg.num_users; ++k) {
    const CMat g = channels.h[k].adjoint() * st.hybrid.u_rf[k] * st.hybrid.u_bb[k];  // N x d
    t.a_rho.noalias() += g * st.w[k] * g.adjoint();
    t.b_rho.push_back(g * st.w[k] +
                      0.5 * (st.hybrid.v_rf * st.hybrid.v_bb[k] / st.rho - st.y[k]));
  }
  t.a_rho = linalg::hermitian_part(t.a_rho);
  return t;
}

PowerSolution update_x(const SystemConfig& cfg, const ChannelSet& channels, const PddState& st) {
  const XUpdateTerms t = x_update_terms(cfg, channels, st);
  return solve_power_constrained(t.a_rho, t.b_rho, cfg.power_budget);
}

QuadUmProblem vrf_problem(const PddState& st) {
  const auto& hy = st.hybrid;
  QuadUmProblem prob;
  prob.c = CMat::Zero(hy.v_rf.cols(), hy.v_rf.cols());
  prob.b = CMat::Zero(hy.v_rf.rows(), hy.v_rf.cols());
  for (std::size_t k = 0; k < hy.v_bb.size(); ++k) {
    prob.c.noalias() += hy.v_bb[k] * hy.v_bb[k].adjoint();
    prob.b.noalias() += (st.x[k] + st.rho * st.y[k]) * hy.v_bb[k].adjoint();
  }
  prob.c = linalg::hermitian_part(prob.c);
  prob.phases = st.phases;
  return prob;
}

CMat update_vrf(const PddState& st, const BcdOptions& options) {
  return bcd_sweep(vrf_problem(st), st.hybrid.v_rf, options).x;
}

QuadUmProblem urf_problem(const SubproblemWorkspace& ws, const ChannelSet& channels,
                          const PddState& st, int k) {
  const auto& u_bb = st.hybrid.u_bb[k];
  QuadUmProblem prob;
  prob.a = ws.a_k[k];
  prob.c = linalg::hermitian_part(u_bb * st.w[k] * u_bb.adjoint());
  prob.b = channels.h[k] * st.x[k] * st.w[k] * u_bb.adjoint();
  prob.phases = st.phases;
  return prob;
}

CMat update_urf(const SubproblemWorkspace& ws, const ChannelSet& channels, const PddState& st,
                int k, const BcdOptions& options) {
  return bcd_sweep(urf_problem(ws, channels, st, k), st.hybrid.u_rf[k], options).x;
}

const char* block_name(Block b) {
  switch (b) {
    case Block::kUbb: return "U_BB";
    case Block::kW: return "W";
    case Block::kVrf: return "V_RF";
    case Block::kUrf: return "U_RF";
    case Block::kVbb: return "V_BB";
    case Block::kX: return "X";
  }
  return "?";
}

InnerResult inner_bcd(const SystemConfig& cfg, const ChannelSet& channels, PddState& st,
                      const PddConfig& pdd_cfg, const BlockObserver& observer) {
  auto notify = [&](Block b) {
    if (observer) observer(b, st);
  };
  const int users = cfg.num_users;
  SubproblemWorkspace ws;
  ws.refresh(cfg, channels.h, st.x);

  InnerResult res;
  double prev = aug_lagrangian_value(cfg, channels, st);
  res.trace.push_back(prev);
  for (int cycle = 0; cycle < pdd_cfg.max_inner; ++cycle) {
    for (int k = 0; k < users; ++k) {
      st.hybrid.u_bb[k] = update_ubb(ws.a_k[k], channels.h[k], st.hybrid.u_rf[k], st.x[k]);
    }
    notify(Block::kUbb);
    for (int k = 0; k < users; ++k) {
      st.w[k] = update_w(channels.h[k], st.hybrid.u_rf[k], st.hybrid.u_bb[k], st.x[k]);
    }
    notify(Block::kW);

    const std::uint64_t sweep_seed =
        CounterRng::substream_key(static_cast<std::uint64_t>(st.outer_iter), cycle);
    st.hybrid.v_rf = update_vrf(st, sweep_options(pdd_cfg, sweep_seed));
    notify(Block::kVrf);
    for (int k = 0; k < users; ++k) {
      st.hybrid.u_rf[k] = update_urf(ws, channels, st, k, sweep_options(pdd_cfg, sweep_seed + k + 1));
    }
    notify(Block::kUrf);

    const CMat v_rf_pinv = linalg::pinv(st.hybrid.v_rf);
    for (int k = 0; k < users; ++k) {
      st.hybrid.v_bb[k] = v_rf_pinv * (st.x[k] + st.rho * st.y[k]);
    }
    notify(Block::kVbb);

    st.x = update_x(cfg, channels, st).x;
    ws.refresh(cfg, channels.h, st.x);
    notify(Block::kX);

    ++res.cycles;
    const double now = aug_lagrangian_value(cfg, channels, st);
    res.trace.push_back(now);
    const double change = std::abs(now - prev);
    const bool small = std::abs(prev) < 1e-12 ? change <= st.eps : change <= st.eps * std::abs(prev);
    prev = now;
    if (small) break;
  }
  res.objective = prev;
  return res;
}

PddState initialize_state(const SystemConfig& cfg, const ChannelSet& channels,
                          const PddConfig& pdd_cfg, std::uint64_t seed) {
  cfg.validate();
  pdd_cfg.validate();
  const int n = cfg.num_tx_antennas;
  const int m = cfg.num_rx_antennas;
  const int d = cfg.streams_per_user;
  const int users = cfg.num_users;
  CounterRng rng(CounterRng::substream_key(seed, kInitStream));

  PddState st;
  const bool warm = cfg.phases.is_finite() && pdd_cfg.finite_warmstart_iters > 0;
  st.phases = warm ? PhaseSet::infinite() : cfg.phases;
  st.hybrid.v_rf = project_to_phase_set(random_phases(rng, n, cfg.num_tx_rf), st.phases);
  st.hybrid.u_rf.resize(users);
  for (int k = 0; k < users; ++k) {
    st.hybrid.u_rf[k] = project_to_phase_set(random_phases(rng, m, cfg.num_rx_rf), st.phases);
  }
  st.hybrid.v_bb.resize(users);
  for (int k = 0; k < users; ++k) st.hybrid.v_bb[k] = random_gaussian(rng, cfg.num_tx_rf, d);
  scale_to_power(st.hybrid, cfg.power_budget, true);

  st.x = st.hybrid.precoders();
  st.y.assign(users, CMat::Zero(n, d));
  st.w.assign(users, CMat::Identity(d, d));
  st.hybrid.u_bb.assign(users, CMat::Zero(cfg.num_rx_rf, d));
  refresh_receivers(cfg, channels, st);

  st.rho = pdd_cfg.initial_rho(cfg);
  st.eta = pdd_cfg.eta0;
  st.eps = pdd_cfg.eps0;
  st.outer_iter = 0;
  return st;
}

PddResult pdd_solve(const SystemConfig& cfg, const ChannelSet& channels, const PddConfig& pdd_cfg,
                    std::uint64_t seed) {
  PddState st = initialize_state(cfg, channels, pdd_cfg, seed);
  const bool finite_target = cfg.phases.is_finite();
  const int warm = finite_target ? pdd_cfg.finite_warmstart_iters : 0;

  PddReport report;
  for (int outer = 1; outer <= pdd_cfg.max_outer; ++outer) {
    st.outer_iter = outer;
    if (finite_target && !st.phases.is_finite() && outer > warm) {
      st.hybrid.v_rf = quantize_nearest(st.hybrid.v_rf, cfg.phases);
      for (auto& u : st.hybrid.u_rf) u = quantize_nearest(u, cfg.phases);
      st.phases = cfg.phases;
    }

    const InnerResult inner = inner_bcd(cfg, channels, st, pdd_cfg);
    const double viol = constraint_violation(st);

    PddIteration rec;
    rec.outer_iter = outer;
    rec.objective_nats = inner.objective;
    rec.violation = viol;
    rec.rho = st.rho;
    rec.inner_cycles = inner.cycles;
    rec.rate_bpshz = scaled_rate(cfg, channels, st.hybrid);
    report.outer_iters = outer;

    const bool target_mode = st.phases == cfg.phases;
    if (target_mode && viol <= pdd_cfg.eps_outer) {
      report.converged = true;
      report.iters_to_tolerance = outer;
      report.iterations.push_back(rec);
      break;
    }
    if (viol <= st.eta) {
      for (int k = 0; k < cfg.num_users; ++k) {
        st.y[k] += (st.x[k] - st.hybrid.v_rf * st.hybrid.v_bb[k]) / st.rho;
      }
      rec.dual_step = true;
    } else {
      st.rho *= pdd_cfg.c;
    }
    st.eta = std::max(pdd_cfg.eta_factor * viol, pdd_cfg.eps_outer);
    st.eps *= pdd_cfg.c;
    report.iterations.push_back(rec);
  }

  report.final_violation = constraint_violation(st);

  PddResult out;
  out.hybrid = st.hybrid;
  scale_to_power(out.hybrid, cfg.power_budget, false);
  // MMSE digital combiners for the returned precoders.
  {
    const MatList x = out.hybrid.precoders();
    SubproblemWorkspace ws;
    ws.refresh(cfg, channels.h, x);
    for (int k = 0; k < cfg.num_users; ++k) {
      out.hybrid.u_bb[k] = update_ubb(ws.a_k[k], channels.h[k], out.hybrid.u_rf[k], x[k]);
    }
  }
  report.rate_bpshz = spectral_efficiency(cfg, channels, out.hybrid).bps_hz;

  PddState refreshed = st;
  refresh_receivers(cfg, channels, refreshed);
  double sum = 0.0;
  for (const auto& w : refreshed.w) sum += linalg::logdet_hpd(w);
  report.sum_log2det_w = sum / std::numbers::ln2;

  report.final_state = std::move(st);
  out.report = std::move(report);
  return out;
}

void write_report_csv(std::ostream& out, const PddReport& report) {
  const auto old_flags = out.flags();
  const auto old_prec = out.precision();
  out << std::setprecision(12);
  out << "outer_iter,objective_nats,violation,rho,rate_bpshz\n";
  for (const auto& it : report.iterations) {
    out << it.outer_iter << ',' << it.objective_nats << ',' << it.violation << ',' << it.rho << ','
        << it.rate_bpshz << '\n';
  }
  out.flags(old_flags);
  out.precision(old_prec);
}

}  // namespace hybridbf
