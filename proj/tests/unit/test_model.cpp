#include "hybridbf/model.hpp"
#include "hybridbf/pdd.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace hybridbf;
using namespace hybridbf::testing;

namespace {

// Upsilon_k summed term by term.
CMat naive_interference(const SystemConfig& cfg, const MatList& h, const CMat& u_rf,
                        const MatList& x, int k) {
  const Eigen::Index m = h[k].rows();
  CMat inner = cfg.noise_variance * CMat::Identity(m, m);
  for (int j = 0; j < static_cast<int>(x.size()); ++j) {
    if (j == k) continue;
    for (Eigen::Index c = 0; c < x[j].cols(); ++c) {
      const CVec v = h[k] * x[j].col(c);
      inner += v * v.adjoint();
    }
  }
  return u_rf.adjoint() * inner * u_rf;
}

struct RandomInstance {
  SystemConfig cfg;
  ChannelSet ch;
  HybridState st;
};

RandomInstance random_instance(std::uint64_t seed) {
  RandomInstance r;
  r.cfg = small_config(8, 4, 2, 2, 4, 2);
  r.ch = generate_channels(r.cfg, 5, seed);
  CounterRng rng(seed * 31 + 1);
  r.st.v_rf = random_phases(rng, 8, 4);
  for (int k = 0; k < 2; ++k) {
    r.st.v_bb.push_back(0.3 * random_cmat(rng, 4, 2));
    r.st.u_rf.push_back(random_phases(rng, 4, 2));
    r.st.u_bb.push_back(random_cmat(rng, 2, 2));
  }
  return r;
}

}  // namespace

TEST_CASE("array response examples") {
  const CVec a = array_response(0.0, 4);
  for (int i = 0; i < 4; ++i) CHECK(std::abs(a(i) - cplx(0.5, 0.0)) < 1e-15);
  const CVec b = array_response(std::numbers::pi / 2, 2);
  CHECK(std::abs(b(0) - cplx(1 / std::sqrt(2.0), 0)) < 1e-15);
  CHECK(std::abs(b(1) - cplx(-1 / std::sqrt(2.0), 0)) < 1e-15);
  CHECK(std::abs(array_response(0.7, 64).norm() - 1.0) < 1e-12);
  CounterRng rng(5);
  for (int t = 0; t < 50; ++t) {
    const int n = 1 + static_cast<int>(rng.uniform() * 100);
    CHECK(std::abs(array_response(rng.uniform_angle(), n).norm() - 1.0) < 1e-12);
  }
}

TEST_CASE("single zero-angle unit path gives the all-ones channel") {
  SystemConfig cfg = small_config(6, 3, 1, 1, 2, 1);
  PathParams p;
  p.num_paths = 1;
  p.paths = {{PathDraw{cplx(1, 0), 0.0, 0.0}}};
  const MatList h = channels_from_paths(cfg, p);
  REQUIRE(h.size() == 1);
  CHECK(h[0].rows() == 3);
  CHECK(h[0].cols() == 6);
  CHECK((h[0] - CMat::Ones(3, 6)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("channel generation is deterministic in the seed") {
  SystemConfig cfg;
  const ChannelSet a = generate_channels(cfg, 15, 99);
  const ChannelSet b = generate_channels(cfg, 15, 99);
  const ChannelSet c = generate_channels(cfg, 15, 100);
  REQUIRE(a.h.size() == 2);
  for (int k = 0; k < 2; ++k) {
    CHECK(a.h[k] == b.h[k]);
    CHECK(a.h[k] != c.h[k]);
    for (int l = 0; l < 15; ++l) {
      const auto& p = a.params.paths[k][l];
      CHECK(p.gain == b.params.paths[k][l].gain);
      CHECK(p.arrival_angle >= 0.0);
      CHECK(p.arrival_angle < 2 * std::numbers::pi);
      CHECK(p.departure_angle >= 0.0);
      CHECK(p.departure_angle < 2 * std::numbers::pi);
    }
  }
  CHECK((channels_from_paths(cfg, a.params)[1] - a.h[1]).norm() == 0.0);
}

TEST_CASE("mean channel energy per entry is one") {
  SystemConfig cfg;
  cfg.num_users = 1;
  cfg.num_tx_rf = 2;
  cfg.streams_per_user = 1;
  double sum = 0.0;
  const int seeds = 1000;
  for (int s = 0; s < seeds; ++s) {
    sum += generate_channels(cfg, 15, s).h[0].squaredNorm() / (64.0 * 16.0);
  }
  CHECK(std::abs(sum / seeds - 1.0) < 0.1);
}

TEST_CASE("interference covariance") {
  const auto r = random_instance(3);
  const MatList x = r.st.precoders();
  for (int k = 0; k < 2; ++k) {
    const CMat got = interference_cov(r.cfg, r.ch.h[k], r.st.u_rf[k], x, k);
    const CMat want = naive_interference(r.cfg, r.ch.h, r.st.u_rf[k], x, k);
    CHECK((got - want).cwiseAbs().maxCoeff() < 1e-12 * (1 + want.cwiseAbs().maxCoeff()));
  }
  const MatList zero{CMat::Zero(8, 2), CMat::Zero(8, 2)};
  const CMat noise_only = interference_cov(r.cfg, r.ch.h[0], r.st.u_rf[0], zero, 0);
  CHECK((noise_only - r.st.u_rf[0].adjoint() * r.st.u_rf[0]).norm() < 1e-12);

  SystemConfig one = r.cfg;
  one.num_users = 1;
  one.noise_variance = 2.5;
  const CMat single = interference_cov(one, r.ch.h[0], r.st.u_rf[0], {x[0]}, 0);
  CHECK((single - 2.5 * r.st.u_rf[0].adjoint() * r.st.u_rf[0]).norm() < 1e-12);
}

TEST_CASE("spectral efficiency trivial cases") {
  auto r = random_instance(4);
  for (auto& v : r.st.v_bb) v.setZero();
  CHECK(spectral_efficiency(r.cfg, r.ch, r.st).bps_hz == doctest::Approx(0.0));

  const SystemConfig cfg = scalar_config();
  HybridState s;
  s.v_rf = CMat::Ones(1, 1);
  s.v_bb = {CMat::Ones(1, 1)};
  s.u_rf = {CMat::Ones(1, 1)};
  s.u_bb = {CMat::Ones(1, 1)};
  CHECK(spectral_efficiency(cfg, scalar_channel(1.0), s).bps_hz == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("single-user rate with identity combiners is the log-det capacity") {
  SystemConfig cfg = small_config(6, 3, 1, 2, 3, 3);
  cfg.noise_variance = 0.7;
  const ChannelSet ch = generate_channels(cfg, 4, 8);
  CounterRng rng(12);
  const CMat x = random_cmat(rng, 6, 2);
  const CMat hx = ch.h[0] * x;
  const double want =
      std::log2(std::real((CMat::Identity(3, 3) + hx * hx.adjoint() / 0.7).determinant()));
  const double got = spectral_efficiency(cfg, ch.h, {CMat::Identity(3, 3)}, {x}).bps_hz;
  CHECK(got == doctest::Approx(want).epsilon(1e-12));
  CHECK(spectral_efficiency_fd(cfg, ch.h, {x}).bps_hz == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("rate equals sum of log2 det W at the MMSE digital combiner") {
  for (std::uint64_t seed = 10; seed < 15; ++seed) {
    const auto r = random_instance(seed);
    const MatList x = r.st.precoders();
    double sum = 0.0;
    for (int k = 0; k < 2; ++k) {
      const CMat a_k = receive_covariance(r.cfg, r.ch.h[k], x);
      const CMat u_bb = update_ubb(a_k, r.ch.h[k], r.st.u_rf[k], x[k]);
      sum += linalg::logdet_hpd(update_w(r.ch.h[k], r.st.u_rf[k], u_bb, x[k])) / std::numbers::ln2;
    }
    const double rate = spectral_efficiency(r.cfg, r.ch, r.st).bps_hz;
    CHECK(std::abs(rate - sum) <= 1e-9 * std::max(1.0, rate));
  }
}

TEST_CASE("rate is invariant to right-unitary rotation of the analog combiners") {
  auto r = random_instance(21);
  CounterRng rng(77);
  const double before = spectral_efficiency(r.cfg, r.ch, r.st).bps_hz;
  for (auto& u : r.st.u_rf) u = u * random_unitary(rng, u.cols());
  CHECK(std::abs(spectral_efficiency(r.cfg, r.ch, r.st).bps_hz - before) < 1e-9);
}

TEST_CASE("mse matrix examples") {
  const auto r = random_instance(30);
  const MatList zero{CMat::Zero(8, 2), CMat::Zero(8, 2)};
  const CMat e0 = mse_matrix(r.cfg, r.ch.h[0], r.st.u_rf[0], CMat::Zero(2, 2), zero, 0);
  CHECK((e0 - CMat::Identity(2, 2)).norm() < 1e-15);

  const MatList one{CMat::Ones(1, 1)};
  const CMat e1 = mse_matrix(scalar_config(), CMat::Ones(1, 1), CMat::Ones(1, 1),
                             CMat::Constant(1, 1, 0.5), one, 0);
  CHECK(std::abs(e1(0, 0) - cplx(0.5, 0)) < 1e-15);

  const MatList x = r.st.precoders();
  for (int k = 0; k < 2; ++k) {
    const CMat e = mse_matrix(r.cfg, r.ch.h[k], r.st.u_rf[k], r.st.u_bb[k], x, k);
    CHECK((e - e.adjoint()).cwiseAbs().maxCoeff() < 1e-12 * (1 + e.norm()));
    Eigen::SelfAdjointEigenSolver<CMat> es(linalg::hermitian_part(e));
    CHECK(es.eigenvalues().minCoeff() >= -1e-12);

    const CMat a_k = receive_covariance(r.cfg, r.ch.h[k], x);
    const CMat u_bb = update_ubb(a_k, r.ch.h[k], r.st.u_rf[k], x[k]);
    const CMat w = update_w(r.ch.h[k], r.st.u_rf[k], u_bb, x[k]);
    const CMat e_opt = mse_matrix(r.cfg, r.ch.h[k], r.st.u_rf[k], u_bb, x, k);
    CHECK((e_opt - w.inverse()).norm() <= 1e-9 * e_opt.norm());
  }
}

TEST_CASE("snr to power") {
  CHECK(snr_to_power(0.0, 1.0) == doctest::Approx(1.0));
  CHECK(snr_to_power(10.0, 1.0) == doctest::Approx(10.0));
  CHECK(snr_to_power(-10.0, 2.0) == doctest::Approx(0.2));
}

TEST_CASE("system config validation names the field") {
  SystemConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.streams_per_user = 5;
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("streams_per_user"), std::invalid_argument);
  cfg = SystemConfig{};
  cfg.num_tx_rf = 65;
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("num_tx_rf"), std::invalid_argument);
  cfg = SystemConfig{};
  cfg.noise_variance = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("scale to power") {
  auto r = random_instance(40);
  const double p0 = r.st.transmit_power();
  HybridState s = r.st;
  CHECK(scale_to_power(s, 10 * p0, false) == 1.0);
  CHECK(s.transmit_power() == doctest::Approx(p0));
  scale_to_power(s, 10 * p0, true);
  CHECK(s.transmit_power() == doctest::Approx(10 * p0).epsilon(1e-12));
  scale_to_power(s, 0.5 * p0, false);
  CHECK(s.transmit_power() == doctest::Approx(0.5 * p0).epsilon(1e-12));
}
