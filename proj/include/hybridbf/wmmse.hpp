#pragma once

#include "hybridbf/model.hpp"
#include "hybridbf/power_bisection.hpp"

#include <cstdint>

namespace hybridbf {

/// Fully-digital transceiver: N x d precoders, M x d receivers, d x d weights.
struct FdState {
  MatList v;
  MatList u;
  MatList w;
};

struct WmmseOptions {
  int restarts = 3;
  int max_iters = 500;
  double tolerance = 1e-6;
};

struct WmmseResult {
  FdState state;
  double rate_bpshz = 0.0;
  int iterations = 0;               // of the kept restart
  std::vector<double> rate_trace;   // of the kept restart, one entry per cycle
};

/// MMSE receivers U_k = (sigma^2 I + sum_j H_k V_j V_j^H H_k^H)^+ H_k V_k.
MatList fd_update_receivers(const SystemConfig& cfg, const MatList& h, const MatList& v);

/// W_k = (I - U_k^H H_k V_k)^{-1}; throws NumericalError on a singular bracket.
MatList fd_update_weights(const MatList& h, const MatList& u, const MatList& v);

/// Power-constrained weighted-MSE precoders.
PowerSolution fd_update_precoders(const SystemConfig& cfg, const MatList& h, const MatList& u,
                                  const MatList& w);

WmmseResult wmmse_solve(const SystemConfig& cfg, const ChannelSet& channels, std::uint64_t seed,
                        const WmmseOptions& options = {});

}  // namespace hybridbf
