// Command-line front end for the hybrid precoding experiments.
#include "hybridbf/experiment.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>

using namespace hybridbf;

namespace {

struct Common {
  std::string output;
  int threads = 0;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-o,--output", c.output, "Output directory (overrides spec and HYBRIDBF_OUTPUT_DIR)");
  cmd->add_option("-j,--threads", c.threads, "Worker threads")->check(CLI::PositiveNumber);
}

void finalize(ExperimentSpec& spec, const Common& c) {
  apply_env_overrides(spec);
  if (!c.output.empty()) spec.output_dir = c.output;
  if (c.threads > 0) spec.threads = c.threads;
}

void print_summary(const ExperimentOutput& out) {
  std::printf("%-24s %8s %5s %5s %8s %8s %8s\n", "method", "snr_db", "bits", "n", "min%", "avg%",
              "max%");
  for (const auto& s : out.summary) {
    std::printf("%-24s %8.2f %5s %5d %8.2f %8.2f %8.2f\n", method_name(s.method), s.snr_db,
                s.bits.c_str(), s.count, s.min_pct, s.avg_pct, s.max_pct);
  }
}

void run_and_report(ExperimentSpec spec) {
  const auto out = run_experiment(spec);
  print_summary(out);
  std::printf("results written to %s\n", spec.output_dir.string().c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid precoding experiments"};
  app.require_subcommand(1);

  Common common;

  std::string spec_path;
  auto* run = app.add_subcommand("run", "Run the experiment described by a YAML spec");
  run->add_option("spec", spec_path, "Spec file")->required()->check(CLI::ExistingFile);
  add_common(run, common);

  int channels = 20;
  bool full = false;
  std::vector<int> cell;
  auto* table3 = app.add_subcommand("table3", "Relative performance for N_RF = Kd, M_RF = d");
  table3->add_option("--channels", channels, "Channel realizations per cell")
      ->check(CLI::PositiveNumber);
  table3->add_flag("--full", full, "Use 100 channel realizations");
  table3->add_option("--cell", cell, "Single (K, d) pair, e.g. --cell 2 2")->expected(2);
  add_common(table3, common);

  std::string converge_path;
  auto* converge = app.add_subcommand("converge", "Average PDD convergence traces for a spec");
  converge->add_option("spec", converge_path, "Spec file")->required()->check(CLI::ExistingFile);
  add_common(converge, common);

  auto* sweep_bits = app.add_subcommand("sweep-bits", "Rate versus SNR for several resolutions");
  sweep_bits->add_option("--channels", channels, "Channel realizations")->check(CLI::PositiveNumber);
  sweep_bits->add_flag("--full", full, "Use 100 channel realizations");
  add_common(sweep_bits, common);

  std::vector<int> rf_counts{6, 8, 10, 12};
  auto* sweep_rf = app.add_subcommand("sweep-rf", "One-bit rate versus SNR for several N_RF");
  sweep_rf->add_option("--channels", channels, "Channel realizations")->check(CLI::PositiveNumber);
  sweep_rf->add_flag("--full", full, "Use 100 channel realizations");
  sweep_rf->add_option("--rf", rf_counts, "Transmit RF chain counts");
  add_common(sweep_rf, common);

  CLI11_PARSE(app, argc, argv);

  try {
    if (full) channels = 100;
    const std::filesystem::path default_root = "results";
    if (run->parsed()) {
      ExperimentSpec spec = parse_spec(spec_path);
      finalize(spec, common);
      run_and_report(spec);
    } else if (converge->parsed()) {
      ExperimentSpec spec = parse_spec(converge_path);
      finalize(spec, common);
      const auto points = run_convergence(spec);
      std::printf("%zu trace points written to %s\n", points.size(),
                  (spec.output_dir / "converge.csv").string().c_str());
    } else if (table3->parsed()) {
      std::vector<std::pair<int, int>> pairs{{2, 2}, {4, 2}, {2, 4}, {2, 3}, {3, 2}};
      if (!cell.empty()) pairs = {{cell[0], cell[1]}};
      for (const auto& [k, d] : pairs) {
        ExperimentSpec spec = presets::table3(k, d, channels);
        spec.output_dir = default_root / "table3";
        finalize(spec, common);
        spec.output_dir /= "K" + std::to_string(k) + "_d" + std::to_string(d);
        std::printf("(K, d) = (%d, %d)\n", k, d);
        run_and_report(spec);
      }
    } else if (sweep_bits->parsed()) {
      ExperimentSpec spec = presets::sweep_bits(channels);
      spec.output_dir = default_root / "sweep_bits";
      finalize(spec, common);
      run_and_report(spec);
    } else if (sweep_rf->parsed()) {
      for (int n_rf : rf_counts) {
        ExperimentSpec spec = presets::sweep_rf(n_rf, channels);
        spec.output_dir = default_root / "sweep_rf";
        finalize(spec, common);
        spec.output_dir /= "nrf" + std::to_string(n_rf);
        std::printf("N_RF = %d\n", n_rf);
        run_and_report(spec);
      }
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
