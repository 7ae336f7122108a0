#pragma once

#include "hybridbf/model.hpp"
#include "hybridbf/unit_modulus.hpp"
#include "hybridbf/wmmse.hpp"

#include <cstdint>

namespace hybridbf {

/// min ||V_opt - V_RF V_BB||^2 over unit-modulus V_RF and unconstrained V_BB.
struct MapProblem {
  CMat v_opt;  // N x Kd (or M x d for a decoder)
  CMat v_rf;
  CMat v_bb;
  PhaseSet phases;

  double approximation_error() const { return (v_opt - v_rf * v_bb).squaredNorm(); }
};

struct MapOptions {
  int max_alternations = 200;
  double tolerance = 1e-8;
  /// Finite phase sets are rejected unless this is set.
  bool allow_finite = false;
  WmmseOptions wmmse;
};

struct MapFactorization {
  CMat rf;
  CMat bb;
  std::vector<double> error_trace;  // after each alternation
  int alternations = 0;
};

struct MapResult {
  HybridState hybrid;  // power-feasible, scaled to the full budget
  double rate_bpshz = 0.0;
  double fd_rate_bpshz = 0.0;
  MapFactorization precoder;
  std::vector<MapFactorization> decoders;
};

/// V_RF^+ V_opt.
CMat map_update_vbb(const CMat& v_rf, const CMat& v_opt);

/// One Algorithm-4 sweep with A = I, C = V_BB V_BB^H, B = V_opt V_BB^H.
CMat map_update_vrf_entries(const MapProblem& prob);

/// Alternates the two updates from `rf0` until the relative change of the
/// approximation error is at most options.tolerance.
MapFactorization map_factorize(const CMat& target, const CMat& rf0, const PhaseSet& phases,
                               const MapOptions& options = {});

/// Factors a given fully-digital solution.
MapResult map_solve(const SystemConfig& cfg, const ChannelSet& channels, const WmmseResult& fd,
                    std::uint64_t seed, const MapOptions& options = {});

/// Runs the WMMSE phase first.
MapResult map_solve(const SystemConfig& cfg, const ChannelSet& channels, std::uint64_t seed,
                    const MapOptions& options = {});

}  // namespace hybridbf
