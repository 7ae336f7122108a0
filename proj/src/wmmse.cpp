#include "hybridbf/wmmse.hpp"

#include "hybridbf/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace hybridbf {

namespace {

constexpr std::uint64_t kWmmseStream = 0x574D4D5345ULL;  // "WMMSE"

MatList random_start(const SystemConfig& cfg, std::uint64_t key) {
  CounterRng rng(key);
  MatList v(cfg.num_users);
  const double per_user = cfg.power_budget / cfg.num_users;
  for (auto& vk : v) {
    vk.resize(cfg.num_tx_antennas, cfg.streams_per_user);
    for (Eigen::Index j = 0; j < vk.cols(); ++j)
      for (Eigen::Index i = 0; i < vk.rows(); ++i) vk(i, j) = rng.complex_gaussian();
    vk *= std::sqrt(per_user) / vk.norm();
  }
  return v;
}

}  // namespace

MatList fd_update_receivers(const SystemConfig& cfg, const MatList& h, const MatList& v) {
  MatList u;
  u.reserve(h.size());
  for (std::size_t k = 0; k < h.size(); ++k) {
    const Eigen::Index m = h[k].rows();
    CMat cov = cfg.noise_variance * CMat::Identity(m, m);
    for (const auto& vj : v) {
      const CMat hv = h[k] * vj;
      cov.noalias() += hv * hv.adjoint();
    }
    u.push_back(linalg::pinv(linalg::hermitian_part(cov)) * h[k] * v[k]);
  }
  return u;
}

MatList fd_update_weights(const MatList& h, const MatList& u, const MatList& v) {
  MatList w;
  w.reserve(h.size());
  for (std::size_t k = 0; k < h.size(); ++k) {
    const Eigen::Index d = v[k].cols();
    const CMat bracket =
        linalg::hermitian_part(CMat::Identity(d, d) - u[k].adjoint() * h[k] * v[k]);
    const double cond = linalg::condition_number(bracket);
    if (!(cond <= 1e14)) {
      throw NumericalError("fd_update_weights: bracket matrix is numerically singular");
    }
    w.push_back(linalg::hermitian_part(bracket.inverse()));
  }
  return w;
}

PowerSolution fd_update_precoders(const SystemConfig& cfg, const MatList& h, const MatList& u,
                                  const MatList& w) {
  const Eigen::Index n = h.front().cols();
  CMat a = CMat::Zero(n, n);
  MatList b;
  b.reserve(h.size());
  for (std::size_t k = 0; k < h.size(); ++k) {
    const CMat g = h[k].adjoint() * u[k];
    a.noalias() += g * w[k] * g.adjoint();
    b.push_back(g * w[k]);
  }
  return solve_power_constrained(linalg::hermitian_part(a), b, cfg.power_budget);
}

WmmseResult wmmse_solve(const SystemConfig& cfg, const ChannelSet& channels, std::uint64_t seed,
                        const WmmseOptions& options) {
  cfg.validate();
  if (options.restarts < 1 || options.max_iters < 1) {
    throw std::invalid_argument("wmmse_solve: restarts and max_iters must be positive");
  }
  const MatList& h = channels.h;
  WmmseResult best;
  bool have_best = false;
  for (int r = 0; r < options.restarts; ++r) {
    WmmseResult run;
    FdState& s = run.state;
    s.v = random_start(cfg, CounterRng::substream_key(seed ^ kWmmseStream, r));
    double rate = spectral_efficiency_fd(cfg, h, s.v).bps_hz;
    for (int it = 0; it < options.max_iters; ++it) {
      s.u = fd_update_receivers(cfg, h, s.v);
      s.w = fd_update_weights(h, s.u, s.v);
      s.v = fd_update_precoders(cfg, h, s.u, s.w).x;
      const double next = spectral_efficiency_fd(cfg, h, s.v).bps_hz;
      run.rate_trace.push_back(next);
      ++run.iterations;
      const double change = std::abs(next - rate);
      rate = next;
      if (change <= options.tolerance * std::max(std::abs(rate), 1e-300)) break;
    }
    // Receivers and weights consistent with the final precoders.
    s.u = fd_update_receivers(cfg, h, s.v);
    s.w = fd_update_weights(h, s.u, s.v);
    run.rate_bpshz = rate;
    if (!have_best || run.rate_bpshz > best.rate_bpshz) {
      best = std::move(run);
      have_best = true;
    }
  }
  return best;
}

}  // namespace hybridbf
