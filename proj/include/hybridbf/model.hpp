#pragma once

#include "hybridbf/linalg.hpp"
#include "hybridbf/phase_set.hpp"

#include <cstdint>
#include <optional>

namespace hybridbf {

/// Link dimensions, power budget, noise level and phase-shifter resolution.
struct SystemConfig {
  int num_tx_antennas = 64;   // N
  int num_rx_antennas = 16;   // M
  int num_tx_rf = 8;          // N_RF
  int num_rx_rf = 4;          // M_RF
  int num_users = 2;          // K
  int streams_per_user = 2;   // d
  double power_budget = 1.0;  // P, linear
  double noise_variance = 1.0;
  PhaseSet phases;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

struct PathDraw {
  cplx gain;
  double arrival_angle = 0.0;    // receive side
  double departure_angle = 0.0;  // transmit side
};

/// paths[k][l] for user k, path l.
struct PathParams {
  int num_paths = 0;
  std::vector<std::vector<PathDraw>> paths;
};

struct ChannelSet {
  MatList h;  // K matrices, each M x N
  PathParams params;
  std::uint64_t seed = 0;
};

struct HybridState {
  CMat v_rf;      // N x N_RF
  MatList v_bb;   // K of N_RF x d
  MatList u_rf;   // K of M x M_RF
  MatList u_bb;   // K of M_RF x d

  /// X_k = V_RF V_BB_k.
  MatList precoders() const;
  double transmit_power() const;
};

/// Per-user rate evaluation.
struct RateResult {
  double bps_hz = 0.0;
  std::vector<double> per_user_bps_hz;
  /// Users whose interference-plus-noise covariance needed diagonal loading.
  int regularized_users = 0;
};

CVec array_response(double theta, int n);

ChannelSet generate_channels(const SystemConfig& cfg, int num_paths, std::uint64_t seed);

/// Builds H_k from explicit path parameters (no randomness).
MatList channels_from_paths(const SystemConfig& cfg, const PathParams& params);

/// U_RF_k^H (sigma^2 I + sum_{j != k} H_k X_j X_j^H H_k^H) U_RF_k.
CMat interference_cov(const SystemConfig& cfg, const CMat& h_k, const CMat& u_rf_k,
                      const MatList& x, int k);

/// Sum rate of the hybrid transceiver with MMSE digital combining inside
/// span(U_RF_k).
RateResult spectral_efficiency(const SystemConfig& cfg, const ChannelSet& channels,
                               const HybridState& state);

/// Same with arbitrary per-user precoders and analog combiners.
RateResult spectral_efficiency(const SystemConfig& cfg, const MatList& h, const MatList& u_rf,
                               const MatList& x);

/// Fully-digital sum rate: per-user N x d precoders, unrestricted receivers.
RateResult spectral_efficiency_fd(const SystemConfig& cfg, const MatList& h, const MatList& v);

/// E_k = (I - U_BB^H U_RF^H H_k X_k)(.)^H + U_BB^H Upsilon_k U_BB.
CMat mse_matrix(const SystemConfig& cfg, const CMat& h_k, const CMat& u_rf_k, const CMat& u_bb_k,
                const MatList& x, int k);

double snr_to_power(double snr_db, double noise_variance);

/// Scales every V_BB_k by sqrt(P / power) when the transmit power exceeds P,
/// or always when `match_exactly` is set. Zero-power states are left alone.
/// Returns the factor applied.
double scale_to_power(HybridState& state, double power_budget, bool match_exactly);

}  // namespace hybridbf
