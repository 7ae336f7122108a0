#pragma once

#include "hybridbf/model.hpp"
#include "hybridbf/pdd.hpp"
#include "hybridbf/wmmse.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace hybridbf {

enum class Method { kPdd, kMap, kFd, kPddQuantize };

const char* method_name(Method m);
Method parse_method(const std::string& name);

/// One Monte-Carlo experiment: every (channel, SNR, bits, method) cell.
struct ExperimentSpec {
  SystemConfig system;  // power_budget and phases are set per cell
  int num_paths = 15;
  std::vector<double> snr_db;
  std::vector<PhaseSet> bits{PhaseSet::infinite()};
  std::vector<Method> methods;
  int num_channels = 1;
  std::uint64_t base_seed = 1;
  PddConfig pdd;
  WmmseOptions wmmse;
  std::filesystem::path output_dir = "results";
  int threads = 1;
  bool map_finite = false;
  bool write_traces = true;
  /// Directory for cached channel files; empty disables the cache.
  std::filesystem::path channel_cache;

  /// Throws SpecError with the field path of the first invalid field.
  void validate() const;
};

bool operator==(const ExperimentSpec& a, const ExperimentSpec& b);

class SpecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Strict YAML parse; unknown keys and missing required fields are errors.
/// `source` names the input in error messages ("file:line: ...").
ExperimentSpec parse_spec_text(const std::string& text, const std::string& source = "<spec>");
ExperimentSpec parse_spec(const std::filesystem::path& path);

std::string serialize_spec(const ExperimentSpec& spec);

/// Replaces output_dir with $HYBRIDBF_OUTPUT_DIR when set.
void apply_env_overrides(ExperimentSpec& spec);

struct ResultRow {
  Method method = Method::kPdd;
  double snr_db = 0.0;
  std::string bits;  // "inf" or bit count
  int channel_index = 0;
  double rate_bpshz = 0.0;
  double fd_rate_bpshz = 0.0;
  double relative_pct = 0.0;
  int outer_iters = 0;
  double final_violation = 0.0;
  double wall_time_s = 0.0;
};

struct SummaryRow {
  Method method = Method::kPdd;
  double snr_db = 0.0;
  std::string bits;
  int count = 0;
  double min_pct = 0.0;
  double avg_pct = 0.0;
  double max_pct = 0.0;
  double mean_rate_bpshz = 0.0;
  double mean_fd_rate_bpshz = 0.0;
};

struct ExperimentOutput {
  std::vector<ResultRow> rows;
  std::vector<SummaryRow> summary;
};

/// Runs every cell, writes results.csv, summary.csv, timings.csv and (when
/// enabled) per-run traces under output_dir/traces. Row order is fixed by
/// (snr, bits, method, channel) regardless of thread scheduling.
ExperimentOutput run_experiment(const ExperimentSpec& spec);

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows);

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);
std::vector<ResultRow> read_results_csv(std::istream& in);

/// Mean PDD convergence across channels, normalized by the FD rate.
struct ConvergencePoint {
  int outer_iter = 0;
  double normalized_objective = 0.0;
  double violation = 0.0;
  double normalized_rate = 0.0;
};

/// For every (SNR, bits) cell: PDD traces averaged over channels; runs that
/// stopped early hold their last value. Writes converge.csv.
std::vector<ConvergencePoint> run_convergence(const ExperimentSpec& spec);

/// Fixed experiment layouts used by the CLI.
namespace presets {
ExperimentSpec table3(int users, int streams, int channels);
ExperimentSpec sweep_bits(int channels);
ExperimentSpec sweep_rf(int num_tx_rf, int channels);
}  // namespace presets

/// "%.12g" formatting used by every CSV writer.
std::string format_number(double v);

}  // namespace hybridbf
