#include "hybridbf/model.hpp"

#include "hybridbf/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace hybridbf {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("SystemConfig: " + what);
}

// log det(Upsilon + S) - log det(Upsilon) in nats, with diagonal loading of
// Upsilon when it is numerically singular.
double logdet_gain(const CMat& upsilon, const CMat& signal, double noise_variance, bool& loaded) {
  CMat ups = linalg::hermitian_part(upsilon);
  double ld_ups = 0.0;
  loaded = false;
  if (!linalg::try_logdet_hpd(ups, ld_ups) || linalg::condition_number(ups) > 1e14) {
    ups += 1e-12 * noise_variance * CMat::Identity(ups.rows(), ups.cols());
    ld_ups = linalg::logdet_hpd(ups);
    loaded = true;
  }
  const double ld_total = linalg::logdet_hpd(ups + linalg::hermitian_part(signal));
  return std::max(0.0, ld_total - ld_ups);
}

}  // namespace

void SystemConfig::validate() const {
  require(num_tx_antennas > 0, "num_tx_antennas must be positive");
  require(num_rx_antennas > 0, "num_rx_antennas must be positive");
  require(num_tx_rf > 0, "num_tx_rf must be positive");
  require(num_rx_rf > 0, "num_rx_rf must be positive");
  require(num_users > 0, "num_users must be positive");
  require(streams_per_user > 0, "streams_per_user must be positive");
  require(num_tx_rf <= num_tx_antennas, "num_tx_rf must not exceed num_tx_antennas");
  require(num_rx_rf <= num_rx_antennas, "num_rx_rf must not exceed num_rx_antennas");
  require(streams_per_user * num_users <= num_tx_rf,
          "streams_per_user must not exceed num_tx_rf / num_users");
  require(streams_per_user <= num_rx_rf, "streams_per_user must not exceed num_rx_rf");
  require(std::isfinite(power_budget) && power_budget > 0.0, "power_budget must be positive");
  require(std::isfinite(noise_variance) && noise_variance > 0.0,
          "noise_variance must be positive");
}

MatList HybridState::precoders() const {
  MatList x;
  x.reserve(v_bb.size());
  for (const auto& vb : v_bb) x.push_back(v_rf * vb);
  return x;
}

double HybridState::transmit_power() const { return linalg::sum_squared_norm(precoders()); }

CVec array_response(double theta, int n) {
  if (n <= 0) throw std::invalid_argument("array_response: n must be positive");
  CVec a(n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  const double s = std::sin(theta);
  for (int i = 0; i < n; ++i) a(i) = std::polar(scale, std::numbers::pi * i * s);
  return a;
}

MatList channels_from_paths(const SystemConfig& cfg, const PathParams& params) {
  const int n = cfg.num_tx_antennas;
  const int m = cfg.num_rx_antennas;
  if (static_cast<int>(params.paths.size()) != cfg.num_users) {
    throw std::invalid_argument("channels_from_paths: expected one path list per user");
  }
  MatList h;
  h.reserve(params.paths.size());
  for (const auto& user_paths : params.paths) {
    if (static_cast<int>(user_paths.size()) != params.num_paths || params.num_paths < 1) {
      throw std::invalid_argument("channels_from_paths: every user needs num_paths paths");
    }
    const double scale = std::sqrt(static_cast<double>(n) * m / params.num_paths);
    CMat hk = CMat::Zero(m, n);
    for (const auto& p : user_paths) {
      hk += p.gain * array_response(p.arrival_angle, m) *
            array_response(p.departure_angle, n).adjoint();
    }
    h.push_back(scale * hk);
  }
  return h;
}

ChannelSet generate_channels(const SystemConfig& cfg, int num_paths, std::uint64_t seed) {
  if (num_paths < 1) throw std::invalid_argument("generate_channels: num_paths must be >= 1");
  ChannelSet out;
  out.seed = seed;
  out.params.num_paths = num_paths;
  out.params.paths.resize(cfg.num_users);
  for (int k = 0; k < cfg.num_users; ++k) {
    CounterRng rng(CounterRng::substream_key(seed, static_cast<std::uint64_t>(k)));
    auto& paths = out.params.paths[k];
    paths.reserve(num_paths);
    for (int l = 0; l < num_paths; ++l) {
      PathDraw p;
      p.gain = rng.complex_gaussian();
      p.arrival_angle = rng.uniform_angle();
      p.departure_angle = rng.uniform_angle();
      paths.push_back(p);
    }
  }
  out.h = channels_from_paths(cfg, out.params);
  return out;
}

CMat interference_cov(const SystemConfig& cfg, const CMat& h_k, const CMat& u_rf_k,
                      const MatList& x, int k) {
  const Eigen::Index m = h_k.rows();
  CMat cov = cfg.noise_variance * CMat::Identity(m, m);
  for (int j = 0; j < static_cast<int>(x.size()); ++j) {
    if (j == k) continue;
    const CMat hx = h_k * x[j];
    cov.noalias() += hx * hx.adjoint();
  }
  return linalg::hermitian_part(u_rf_k.adjoint() * cov * u_rf_k);
}

RateResult spectral_efficiency(const SystemConfig& cfg, const MatList& h, const MatList& u_rf,
                               const MatList& x) {
  RateResult r;
  const int users = static_cast<int>(h.size());
  for (int k = 0; k < users; ++k) {
    const CMat ups = interference_cov(cfg, h[k], u_rf[k], x, k);
    const CMat g = u_rf[k].adjoint() * h[k] * x[k];
    bool loaded = false;
    const double nats = logdet_gain(ups, g * g.adjoint(), cfg.noise_variance, loaded);
    if (loaded) ++r.regularized_users;
    r.per_user_bps_hz.push_back(nats / std::numbers::ln2);
    r.bps_hz += nats / std::numbers::ln2;
  }
  return r;
}

RateResult spectral_efficiency(const SystemConfig& cfg, const ChannelSet& channels,
                               const HybridState& state) {
  return spectral_efficiency(cfg, channels.h, state.u_rf, state.precoders());
}

RateResult spectral_efficiency_fd(const SystemConfig& cfg, const MatList& h, const MatList& v) {
  MatList identity(h.size());
  for (std::size_t k = 0; k < h.size(); ++k) {
    identity[k] = CMat::Identity(h[k].rows(), h[k].rows());
  }
  return spectral_efficiency(cfg, h, identity, v);
}

CMat mse_matrix(const SystemConfig& cfg, const CMat& h_k, const CMat& u_rf_k, const CMat& u_bb_k,
                const MatList& x, int k) {
  const Eigen::Index d = u_bb_k.cols();
  const CMat e = CMat::Identity(d, d) - u_bb_k.adjoint() * u_rf_k.adjoint() * h_k * x[k];
  const CMat ups = interference_cov(cfg, h_k, u_rf_k, x, k);
  return linalg::hermitian_part(e * e.adjoint() + u_bb_k.adjoint() * ups * u_bb_k);
}

double snr_to_power(double snr_db, double noise_variance) {
  if (!(noise_variance > 0.0)) throw std::invalid_argument("snr_to_power: noise_variance <= 0");
  return noise_variance * std::pow(10.0, snr_db / 10.0);
}

double scale_to_power(HybridState& state, double power_budget, bool match_exactly) {
  const double p = state.transmit_power();
  if (!(p > 0.0)) return 1.0;
  if (!match_exactly && p <= power_budget) return 1.0;
  const double beta = std::sqrt(power_budget / p);
  for (auto& vb : state.v_bb) vb *= beta;
  return beta;
}

}  // namespace hybridbf
