#include "hybridbf/map_method.hpp"

#include "hybridbf/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace hybridbf {

namespace {

constexpr std::uint64_t kMapStream = 0x4D41505F494E4954ULL;  // "MAP_INIT"

CMat random_phase_matrix(std::uint64_t key, Eigen::Index rows, Eigen::Index cols,
                         const PhaseSet& phases) {
  CounterRng rng(key);
  CMat out(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) out(i, j) = rng.unit_phase();
  return project_to_phase_set(out, phases);
}

}  // namespace

CMat map_update_vbb(const CMat& v_rf, const CMat& v_opt) { return linalg::pinv(v_rf) * v_opt; }

CMat map_update_vrf_entries(const MapProblem& prob) {
  QuadUmProblem qp;
  qp.c = linalg::hermitian_part(prob.v_bb * prob.v_bb.adjoint());
  qp.b = prob.v_opt * prob.v_bb.adjoint();
  qp.phases = prob.phases;
  BcdOptions opts;
  opts.max_sweeps = 1;
  return bcd_sweep(qp, prob.v_rf, opts).x;
}

MapFactorization map_factorize(const CMat& target, const CMat& rf0, const PhaseSet& phases,
                               const MapOptions& options) {
  MapProblem prob{target, rf0, CMat(), phases};
  MapFactorization out;
  double prev = target.squaredNorm();
  for (int it = 0; it < options.max_alternations; ++it) {
    prob.v_bb = map_update_vbb(prob.v_rf, prob.v_opt);
    prob.v_rf = map_update_vrf_entries(prob);
    const double err = prob.approximation_error();
    out.error_trace.push_back(err);
    ++out.alternations;
    const double change = std::abs(prev - err);
    prev = err;
    if (change <= options.tolerance * std::max(err, 1e-300)) break;
  }
  // V_BB matched to the final V_RF.
  prob.v_bb = map_update_vbb(prob.v_rf, prob.v_opt);
  out.rf = prob.v_rf;
  out.bb = prob.v_bb;
  return out;
}

MapResult map_solve(const SystemConfig& cfg, const ChannelSet& channels, const WmmseResult& fd,
                    std::uint64_t seed, const MapOptions& options) {
  cfg.validate();
  if (cfg.phases.is_finite() && !options.allow_finite) {
    throw std::invalid_argument("map_solve: finite phase resolution requires allow_finite");
  }
  const int users = cfg.num_users;
  const int d = cfg.streams_per_user;

  CMat v_opt(cfg.num_tx_antennas, users * d);
  for (int k = 0; k < users; ++k) v_opt.middleCols(k * d, d) = fd.state.v[k];

  MapResult out;
  out.fd_rate_bpshz = fd.rate_bpshz;
  const CMat rf0 = random_phase_matrix(CounterRng::substream_key(seed, kMapStream),
                                       cfg.num_tx_antennas, cfg.num_tx_rf, cfg.phases);
  out.precoder = map_factorize(v_opt, rf0, cfg.phases, options);

  out.hybrid.v_rf = out.precoder.rf;
  out.hybrid.v_bb.resize(users);
  for (int k = 0; k < users; ++k) out.hybrid.v_bb[k] = out.precoder.bb.middleCols(k * d, d);

  // Decoders carry no power constraint: the MMSE digital stage absorbs any scale.
  out.hybrid.u_rf.resize(users);
  out.hybrid.u_bb.resize(users);
  for (int k = 0; k < users; ++k) {
    const CMat u0 = random_phase_matrix(CounterRng::substream_key(seed, kMapStream + 1 + k),
                                        cfg.num_rx_antennas, cfg.num_rx_rf, cfg.phases);
    out.decoders.push_back(map_factorize(fd.state.u[k], u0, cfg.phases, options));
    out.hybrid.u_rf[k] = out.decoders.back().rf;
    out.hybrid.u_bb[k] = out.decoders.back().bb;
  }

  scale_to_power(out.hybrid, cfg.power_budget, true);
  out.rate_bpshz = spectral_efficiency(cfg, channels, out.hybrid).bps_hz;
  return out;
}

MapResult map_solve(const SystemConfig& cfg, const ChannelSet& channels, std::uint64_t seed,
                    const MapOptions& options) {
  const WmmseResult fd = wmmse_solve(cfg, channels, seed, options.wmmse);
  return map_solve(cfg, channels, fd, seed, options);
}

}  // namespace hybridbf
