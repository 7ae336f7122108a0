#include "hybridbf/map_method.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <algorithm>
#include <limits>
#include <numbers>

using namespace hybridbf;
using namespace hybridbf::testing;

TEST_CASE("map baseband update") {
  CounterRng rng(1);
  const CMat v_rf = random_phases(rng, 8, 4);
  const CMat g = random_cmat(rng, 4, 3);
  CHECK((map_update_vbb(v_rf, v_rf * g) - g).norm() < 1e-10);
  CMat f(8, 4);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 4; ++j) f(i, j) = std::polar(1.0, 2 * std::numbers::pi * i * j / 8);
  const CMat target = random_cmat(rng, 8, 3);
  CHECK((map_update_vbb(f, target) - f.adjoint() * target / 8.0).norm() < 1e-12);
  const CMat vb = map_update_vbb(v_rf, target);
  CHECK((v_rf.adjoint() * (target - v_rf * vb)).norm() < 1e-9);
}

TEST_CASE("map analog update with identity gram aligns phases") {
  CounterRng rng(2);
  MapProblem p;
  p.v_bb = random_unitary(rng, 3);
  p.v_opt = random_cmat(rng, 6, 3);
  p.v_rf = random_phases(rng, 6, 3);
  p.phases = PhaseSet::infinite();
  const CMat b = p.v_opt * p.v_bb.adjoint();
  const CMat v = map_update_vrf_entries(p);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 3; ++j) CHECK(std::abs(v(i, j) - b(i, j) / std::abs(b(i, j))) < 1e-12);
}

TEST_CASE("map approximation error never increases") {
  CounterRng rng(3);
  const CMat target = random_cmat(rng, 16, 4);
  const MapFactorization f = map_factorize(target, random_phases(rng, 16, 4), PhaseSet::infinite());
  for (std::size_t t = 1; t < f.error_trace.size(); ++t) {
    CHECK(f.error_trace[t] <= f.error_trace[t - 1] + 1e-12 * (1 + f.error_trace[t - 1]));
  }
}

TEST_CASE("map one-bit 2x2 sweeps end at single-flip minima and cover the optimum") {
  CounterRng rng(4);
  const PhaseSet one = PhaseSet::finite(1);
  auto sign_pattern = [](int mask) {
    CMat v(2, 2);
    for (int e = 0; e < 4; ++e) v(e / 2, e % 2) = (mask >> e) & 1 ? -1.0 : 1.0;
    return v;
  };
  for (int trial = 0; trial < 10; ++trial) {
    MapProblem p;
    p.v_opt = random_cmat(rng, 2, 2);
    p.v_bb = random_cmat(rng, 2, 2);
    p.phases = one;
    double best = std::numeric_limits<double>::infinity();
    for (int mask = 0; mask < 16; ++mask) {
      p.v_rf = sign_pattern(mask);
      best = std::min(best, p.approximation_error());
    }
    double reached = std::numeric_limits<double>::infinity();
    for (int mask = 0; mask < 16; ++mask) {
      p.v_rf = sign_pattern(mask);
      for (int s = 0; s < 10; ++s) p.v_rf = map_update_vrf_entries(p);
      const double f = p.approximation_error();
      reached = std::min(reached, f);
      for (int e = 0; e < 4; ++e) {
        MapProblem flipped = p;
        flipped.v_rf(e / 2, e % 2) *= -1.0;
        CHECK(f <= flipped.approximation_error() + 1e-12);
      }
    }
    CHECK(reached == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("exactly factorable fully-digital precoder is recovered") {
  SystemConfig cfg = small_config(16, 4, 2, 1, 4, 2);
  const ChannelSet ch = generate_channels(cfg, 6, 5);
  CounterRng rng(6);
  const CMat rf = random_phases(rng, 16, 4);
  const CMat bb = random_cmat(rng, 4, 2);
  const CMat target = rf * bb;
  const MapFactorization f = map_factorize(target, rf, PhaseSet::infinite());
  CHECK((f.rf * f.bb - target).norm() < 1e-9 * target.norm());

  // Fully-digital solution whose precoders are exactly hybrid: MAP loses nothing.
  WmmseResult fd;
  const CMat scaled = target * std::sqrt(cfg.power_budget) / target.norm();
  fd.state.v = {scaled.col(0), scaled.col(1)};
  fd.state.u = fd_update_receivers(cfg, ch.h, fd.state.v);
  fd.rate_bpshz = spectral_efficiency_fd(cfg, ch.h, fd.state.v).bps_hz;
  MapOptions opts;
  MapResult r = map_solve(cfg, ch, fd, 7, opts);
  // Start from the exact analog factor to isolate the factorization step.
  const MapFactorization exact = map_factorize(scaled, rf, PhaseSet::infinite());
  r.hybrid.v_rf = exact.rf;
  r.hybrid.v_bb = {exact.bb.col(0), exact.bb.col(1)};
  scale_to_power(r.hybrid, cfg.power_budget, true);
  // Full-dimension analog combiners cannot restrict the MMSE receiver.
  SystemConfig wide = cfg;
  wide.num_rx_rf = 4;
  HybridState h = r.hybrid;
  h.u_rf = {CMat::Identity(4, 4), CMat::Identity(4, 4)};
  CHECK(spectral_efficiency(wide, ch, h).bps_hz == doctest::Approx(fd.rate_bpshz).epsilon(1e-9));
}

TEST_CASE("map solve is power exact and close to the fully-digital rate with 2Kd RF chains") {
  SystemConfig cfg;
  const ChannelSet ch = generate_channels(cfg, 15, 8);
  const MapResult r = map_solve(cfg, ch, 8);
  CHECK(r.hybrid.transmit_power() == doctest::Approx(cfg.power_budget).epsilon(1e-12));
  CHECK(r.rate_bpshz >= 0.98 * r.fd_rate_bpshz);
  CHECK(r.decoders.size() == 2);
  cfg.phases = PhaseSet::finite(2);
  CHECK_THROWS_AS(map_solve(cfg, ch, 8), std::invalid_argument);
}
