#include "hybridbf/experiment.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

using namespace hybridbf;

namespace {

const char* kMinimal = R"(system:
  num_tx_antennas: 8
  num_rx_antennas: 4
  num_tx_rf: 2
  num_rx_rf: 1
  num_users: 1
  streams_per_user: 1
snr_db: [0]
methods: [fd]
num_channels: 1
base_seed: 5
)";

std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("hybridbf_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("minimal spec fills documented defaults") {
  const ExperimentSpec s = parse_spec_text(kMinimal);
  CHECK(s.system.num_tx_antennas == 8);
  CHECK(s.num_paths == 15);
  CHECK(s.bits.size() == 1);
  CHECK_FALSE(s.bits[0].is_finite());
  CHECK_FALSE(s.pdd.rho0.has_value());
  CHECK(s.pdd.initial_rho(s.system) == doctest::Approx(100.0 / 8));
  CHECK(s.pdd.c == 0.8);
  CHECK(s.pdd.eta0 == 1e-3);
  CHECK(s.pdd.eps0 == 1e-3);
  CHECK(s.pdd.max_inner == 30);
  CHECK(s.pdd.max_outer == 200);
  CHECK(s.system.noise_variance == 1.0);
}

TEST_CASE("spec errors carry the field and line") {
  std::string missing = kMinimal;
  missing.replace(missing.find("base_seed: 5\n"), 13, "");
  CHECK_THROWS_WITH_AS(parse_spec_text(missing, "x.yaml"), doctest::Contains("base_seed"), SpecError);

  std::string no_users = kMinimal;
  no_users.replace(no_users.find("  num_users: 1\n"), 15, "");
  CHECK_THROWS_WITH_AS(parse_spec_text(no_users), doctest::Contains("system.num_users"), SpecError);

  const std::string unknown = std::string(kMinimal) + "pdd:\n  rho: 2\n";
  CHECK_THROWS_WITH_AS(parse_spec_text(unknown, "x.yaml"), doctest::Contains("x.yaml:13"), SpecError);
  CHECK_THROWS_WITH_AS(parse_spec_text(unknown), doctest::Contains("pdd.rho"), SpecError);

  const std::string bad_method = std::string(kMinimal).replace(std::string(kMinimal).find("[fd]"), 4, "[fd, omp]");
  CHECK_THROWS_WITH_AS(parse_spec_text(bad_method), doctest::Contains("omp"), SpecError);

  const std::string bad_value = std::string(kMinimal) + "num_paths: many\n";
  CHECK_THROWS_WITH_AS(parse_spec_text(bad_value), doctest::Contains("num_paths"), SpecError);

  const std::string zero_channels = std::string(kMinimal).replace(std::string(kMinimal).find("num_channels: 1"), 15, "num_channels: 0");
  CHECK_THROWS_WITH_AS(parse_spec_text(zero_channels), doctest::Contains("num_channels"), SpecError);

  CHECK_THROWS_AS(parse_spec_text("system: [1, 2\n"), SpecError);
  CHECK_THROWS_AS(parse_spec("/nonexistent/spec.yaml"), SpecError);
}

TEST_CASE("serialize then parse is the identity") {
  ExperimentSpec s = presets::sweep_bits(3);
  s.pdd.rho0 = 0.37;
  s.pdd.sweep_order = SweepOrder::kRandom;
  s.pdd.c = 0.123456789012345678;
  s.snr_db = {-7.25, 1.0 / 3.0};
  s.wmmse.tolerance = 3e-7;
  s.output_dir = "some dir/with: colon";
  s.channel_cache = "cache";
  s.threads = 3;
  s.map_finite = true;
  s.write_traces = false;
  const ExperimentSpec back = parse_spec_text(serialize_spec(s));
  CHECK(back == s);
  CHECK(serialize_spec(back) == serialize_spec(s));
  const ExperimentSpec minimal = parse_spec_text(kMinimal);
  CHECK(parse_spec_text(serialize_spec(minimal)) == minimal);
}

TEST_CASE("environment overrides the output directory") {
  ExperimentSpec s = parse_spec_text(kMinimal);
  setenv("HYBRIDBF_OUTPUT_DIR", "/tmp/override_here", 1);
  apply_env_overrides(s);
  unsetenv("HYBRIDBF_OUTPUT_DIR");
  CHECK(s.output_dir == "/tmp/override_here");
}

TEST_CASE("single fully-digital cell gives one row at 100 percent") {
  ExperimentSpec s = parse_spec_text(kMinimal);
  s.output_dir = scratch_dir("fd");
  const ExperimentOutput out = run_experiment(s);
  REQUIRE(out.rows.size() == 1);
  CHECK(out.rows[0].method == Method::kFd);
  CHECK(out.rows[0].relative_pct == 100.0);
  CHECK(out.rows[0].bits == "inf");
  CHECK(std::filesystem::exists(s.output_dir / "results.csv"));
  CHECK(std::filesystem::exists(s.output_dir / "summary.csv"));
  CHECK(std::filesystem::exists(s.output_dir / "traces" / "fd_snr0_binf_ch0.csv"));
  std::filesystem::remove_all(s.output_dir);
}

TEST_CASE("results are deterministic, sorted and summarized consistently") {
  ExperimentSpec s = parse_spec_text(kMinimal);
  s.system.num_users = 2;
  s.system.num_tx_rf = 4;
  s.system.num_rx_rf = 2;
  s.snr_db = {5.0, -5.0};
  s.bits = {PhaseSet::infinite(), PhaseSet::finite(2)};
  s.methods = {Method::kPdd, Method::kFd, Method::kMap, Method::kPddQuantize};
  s.num_channels = 3;
  s.pdd.max_outer = 40;
  s.wmmse.restarts = 1;
  s.output_dir = scratch_dir("det_a");
  const ExperimentOutput a = run_experiment(s);
  const std::string first = slurp(s.output_dir / "results.csv");
  s.output_dir = scratch_dir("det_b");
  s.threads = 3;
  run_experiment(s);
  CHECK(slurp(s.output_dir / "results.csv") == first);

  // fd once per channel and SNR, pdd and quantize per bits, map for inf only.
  CHECK(a.rows.size() == 2 * 3 * (1 + 2 + 2 + 1));
  for (const auto& r : a.rows) {
    if (r.fd_rate_bpshz > 0) CHECK(r.relative_pct == doctest::Approx(100 * r.rate_bpshz / r.fd_rate_bpshz));
    if (r.method != Method::kFd) CHECK(r.relative_pct <= 100.5);
  }
  CHECK(a.rows.front().snr_db == 5.0);
  CHECK(a.rows.back().snr_db == -5.0);

  std::ifstream in(s.output_dir / "results.csv");
  const std::vector<ResultRow> back = read_results_csv(in);
  REQUIRE(back.size() == a.rows.size());
  std::map<std::tuple<Method, double, std::string>, std::vector<double>> groups;
  for (const auto& r : back) groups[{r.method, r.snr_db, r.bits}].push_back(r.relative_pct);
  const auto summary = summarize(back);
  CHECK(summary.size() == groups.size());
  for (const auto& srow : summary) {
    const auto& v = groups.at({srow.method, srow.snr_db, srow.bits});
    double sum = 0, lo = 1e300, hi = -1e300;
    for (double x : v) {
      sum += x;
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    CHECK(srow.count == static_cast<int>(v.size()));
    CHECK(srow.avg_pct == doctest::Approx(sum / v.size()).epsilon(1e-10));
    CHECK(srow.min_pct == doctest::Approx(lo).epsilon(1e-10));
    CHECK(srow.max_pct == doctest::Approx(hi).epsilon(1e-10));
  }
  std::filesystem::remove_all(scratch_dir("det_a"));
  std::filesystem::remove_all(s.output_dir);
}

TEST_CASE("channel cache reproduces generated channels") {
  ExperimentSpec s = parse_spec_text(kMinimal);
  s.output_dir = scratch_dir("cache_out");
  const std::string plain = [&] {
    run_experiment(s);
    return slurp(s.output_dir / "results.csv");
  }();
  s.channel_cache = scratch_dir("cache");
  run_experiment(s);
  CHECK(slurp(s.output_dir / "results.csv") == plain);
  CHECK(!std::filesystem::is_empty(s.channel_cache));
  run_experiment(s);
  CHECK(slurp(s.output_dir / "results.csv") == plain);
  std::filesystem::remove_all(s.channel_cache);
  std::filesystem::remove_all(s.output_dir);
}

TEST_CASE("unwritable output directory is reported") {
  ExperimentSpec s = parse_spec_text(kMinimal);
  s.output_dir = "/proc/hybridbf_cannot_write_here";
  CHECK_THROWS(run_experiment(s));
}

TEST_CASE("convergence traces") {
  ExperimentSpec s = parse_spec_text(kMinimal);
  s.methods = {Method::kPdd};
  s.num_channels = 2;
  s.output_dir = scratch_dir("conv");
  const auto pts = run_convergence(s);
  REQUIRE(!pts.empty());
  CHECK(pts.front().outer_iter == 1);
  CHECK(pts.back().violation <= 1e-6);
  CHECK(pts.back().normalized_rate == doctest::Approx(1.0).epsilon(0.05));
  CHECK(std::filesystem::exists(s.output_dir / "converge.csv"));
  std::filesystem::remove_all(s.output_dir);
}

TEST_CASE("method names round trip") {
  for (Method m : {Method::kPdd, Method::kMap, Method::kFd, Method::kPddQuantize}) {
    CHECK(parse_method(method_name(m)) == m);
  }
  CHECK_THROWS(parse_method("rbd"));
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(-10) == "-10");
}

TEST_CASE("the commented example config parses") {
  const ExperimentSpec s = parse_spec(std::filesystem::path(HYBRIDBF_SOURCE_DIR) / "configs" / "example.yaml");
  CHECK(s.methods.size() == 4);
  CHECK(s.bits.size() == 3);
  CHECK(s.num_channels == 10);
  CHECK(s.snr_db == std::vector<double>{-10, 0, 6});
}
