#pragma once

#include "hybridbf/model.hpp"
#include "hybridbf/rng.hpp"

#include <Eigen/QR>

namespace hybridbf::testing {

inline CMat random_cmat(CounterRng& rng, Eigen::Index rows, Eigen::Index cols) {
  CMat m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.complex_gaussian();
  return m;
}

inline CMat random_phases(CounterRng& rng, Eigen::Index rows, Eigen::Index cols) {
  CMat m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.unit_phase();
  return m;
}

// Hermitian PSD, rank min(n, rank).
inline CMat random_psd(CounterRng& rng, Eigen::Index n, Eigen::Index rank = -1) {
  const CMat g = random_cmat(rng, n, rank < 0 ? n : rank);
  return linalg::hermitian_part(g * g.adjoint());
}

inline CMat random_unitary(CounterRng& rng, Eigen::Index n) {
  Eigen::HouseholderQR<CMat> qr(random_cmat(rng, n, n));
  return qr.householderQ() * CMat::Identity(n, n);
}

inline SystemConfig small_config(int n = 8, int m = 4, int k = 2, int d = 1, int n_rf = 4,
                                 int m_rf = 2) {
  SystemConfig cfg;
  cfg.num_tx_antennas = n;
  cfg.num_rx_antennas = m;
  cfg.num_users = k;
  cfg.streams_per_user = d;
  cfg.num_tx_rf = n_rf;
  cfg.num_rx_rf = m_rf;
  cfg.power_budget = 1.0;
  cfg.noise_variance = 1.0;
  return cfg;
}

inline SystemConfig scalar_config() { return small_config(1, 1, 1, 1, 1, 1); }

inline ChannelSet scalar_channel(cplx h) {
  ChannelSet c;
  c.h = {CMat::Constant(1, 1, h)};
  return c;
}

}  // namespace hybridbf::testing
