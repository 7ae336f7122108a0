#include "hybridbf/experiment.hpp"

#include "hybridbf/channel_io.hpp"
#include "hybridbf/map_method.hpp"
#include "hybridbf/rng.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>
#include <tuple>

namespace hybridbf {

namespace {

constexpr std::uint64_t kFdStream = 0x46445F5345454400ULL;
constexpr std::uint64_t kPddStream = 0x5044445F53454544ULL;

std::uint64_t snr_key(std::uint64_t channel_seed, double snr_db) {
  return CounterRng::substream_key(channel_seed, std::bit_cast<std::uint64_t>(snr_db));
}

std::uint64_t fd_seed(std::uint64_t channel_seed, double snr_db) {
  return CounterRng::substream_key(snr_key(channel_seed, snr_db), kFdStream);
}

// Shared by pdd and pdd_quantize_then_round so both start from the same point.
std::uint64_t pdd_seed(std::uint64_t channel_seed, double snr_db, const PhaseSet& phases) {
  const std::uint64_t b = phases.is_finite() ? static_cast<std::uint64_t>(*phases.bits()) : 0;
  return CounterRng::substream_key(snr_key(channel_seed, snr_db) ^ kPddStream, b);
}

std::string trace_name(Method m, double snr_db, const std::string& bits, int channel) {
  return std::string(method_name(m)) + "_snr" + format_number(snr_db) + "_b" + bits + "_ch" +
         std::to_string(channel) + ".csv";
}

ChannelSet obtain_channels(const ExperimentSpec& spec, std::uint64_t seed) {
  if (spec.channel_cache.empty()) return generate_channels(spec.system, spec.num_paths, seed);
  const auto& s = spec.system;
  const auto file = spec.channel_cache /
                    ("channels_K" + std::to_string(s.num_users) + "_M" +
                     std::to_string(s.num_rx_antennas) + "_N" + std::to_string(s.num_tx_antennas) +
                     "_L" + std::to_string(spec.num_paths) + "_s" + std::to_string(seed) + ".bin");
  if (std::filesystem::exists(file)) {
    ChannelSet cached = load_channels(file);
    const bool matches = static_cast<int>(cached.h.size()) == s.num_users &&
                         cached.h.front().rows() == s.num_rx_antennas &&
                         cached.h.front().cols() == s.num_tx_antennas && cached.seed == seed;
    if (matches) return cached;
  }
  ChannelSet fresh = generate_channels(s, spec.num_paths, seed);
  std::filesystem::create_directories(spec.channel_cache);
  save_channels(file, fresh);
  return fresh;
}

struct Job {
  int snr_index = 0;
  int channel = 0;
};

struct KeyedRow {
  std::tuple<int, int, int, int> key;  // snr, bits (-1 for fd), method, channel
  ResultRow row;
};

struct Trace {
  std::string name;
  std::string body;
};

struct JobOutput {
  std::vector<KeyedRow> rows;
  std::vector<Trace> traces;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool contains(const std::vector<Method>& methods, Method m) {
  return std::find(methods.begin(), methods.end(), m) != methods.end();
}

int method_index(const ExperimentSpec& spec, Method m) {
  return static_cast<int>(std::find(spec.methods.begin(), spec.methods.end(), m) -
                          spec.methods.begin());
}

struct QuantizedBaseline {
  double rate = 0.0;
  double violation = 0.0;
};

// Rounds the analog stages of an infinite-resolution PDD solution and refits V_BB.
QuantizedBaseline quantize_then_round(const SystemConfig& cfg, const ChannelSet& channels,
                                      const PddResult& inf) {
  HybridState q = inf.hybrid;
  const MatList& x = inf.report.final_state.x;
  if (cfg.phases.is_finite()) {
    q.v_rf = quantize_nearest(q.v_rf, cfg.phases);
    for (auto& u : q.u_rf) u = quantize_nearest(u, cfg.phases);
  }
  const CMat pinv_rf = linalg::pinv(q.v_rf);
  QuantizedBaseline out;
  for (std::size_t k = 0; k < q.v_bb.size(); ++k) {
    q.v_bb[k] = pinv_rf * x[k];
    out.violation = std::max(out.violation, linalg::max_abs(x[k] - q.v_rf * q.v_bb[k]));
  }
  scale_to_power(q, cfg.power_budget, false);
  out.rate = spectral_efficiency(cfg, channels, q).bps_hz;
  return out;
}

JobOutput run_job(const ExperimentSpec& spec, const Job& job) {
  JobOutput out;
  const double snr = spec.snr_db[job.snr_index];
  const std::uint64_t seed = spec.base_seed + static_cast<std::uint64_t>(job.channel);
  SystemConfig base = spec.system;
  base.power_budget = snr_to_power(snr, base.noise_variance);
  base.phases = PhaseSet::infinite();
  const ChannelSet channels = obtain_channels(spec, seed);

  auto emit = [&](Method m, int bits_index, const std::string& bits, double rate, double fd_rate,
                  int iters, double violation, double secs) {
    ResultRow r;
    r.method = m;
    r.snr_db = snr;
    r.bits = bits;
    r.channel_index = job.channel;
    r.rate_bpshz = rate;
    r.fd_rate_bpshz = fd_rate;
    r.relative_pct = fd_rate > 0.0 ? 100.0 * rate / fd_rate : 0.0;
    r.outer_iters = iters;
    r.final_violation = violation;
    r.wall_time_s = secs;
    out.rows.push_back({{job.snr_index, bits_index, method_index(spec, m), job.channel}, r});
  };
  auto trace = [&](Method m, const std::string& bits, std::string body) {
    if (spec.write_traces) out.traces.push_back({trace_name(m, snr, bits, job.channel), std::move(body)});
  };

  auto t0 = std::chrono::steady_clock::now();
  const WmmseResult fd = wmmse_solve(base, channels, fd_seed(seed, snr), spec.wmmse);
  const double fd_time = seconds_since(t0);
  if (contains(spec.methods, Method::kFd)) {
    emit(Method::kFd, -1, "inf", fd.rate_bpshz, fd.rate_bpshz, fd.iterations, 0.0, fd_time);
    std::ostringstream body;
    body << "iter,rate_bpshz\n";
    for (std::size_t i = 0; i < fd.rate_trace.size(); ++i) {
      body << i + 1 << "," << format_number(fd.rate_trace[i]) << "\n";
    }
    trace(Method::kFd, "inf", body.str());
  }

  const bool want_quantize = contains(spec.methods, Method::kPddQuantize);
  std::optional<PddResult> inf_pdd;
  auto infinite_pdd = [&]() -> const PddResult& {
    if (!inf_pdd) inf_pdd = pdd_solve(base, channels, spec.pdd, pdd_seed(seed, snr, base.phases));
    return *inf_pdd;
  };

  for (int bi = 0; bi < static_cast<int>(spec.bits.size()); ++bi) {
    SystemConfig cfg = base;
    cfg.phases = spec.bits[bi];
    const std::string bits = cfg.phases.to_string();

    if (contains(spec.methods, Method::kPdd)) {
      t0 = std::chrono::steady_clock::now();
      std::optional<PddResult> local;
      const PddResult* res = nullptr;
      if (!cfg.phases.is_finite() && want_quantize) {
        res = &infinite_pdd();
      } else {
        local = pdd_solve(cfg, channels, spec.pdd, pdd_seed(seed, snr, cfg.phases));
        res = &*local;
      }
      emit(Method::kPdd, bi, bits, res->report.rate_bpshz, fd.rate_bpshz, res->report.outer_iters,
           res->report.final_violation, seconds_since(t0));
      std::ostringstream body;
      write_report_csv(body, res->report);
      trace(Method::kPdd, bits, body.str());
    }

    if (contains(spec.methods, Method::kMap) && (!cfg.phases.is_finite() || spec.map_finite)) {
      t0 = std::chrono::steady_clock::now();
      MapOptions mo;
      mo.allow_finite = spec.map_finite;
      mo.wmmse = spec.wmmse;
      const MapResult res = map_solve(cfg, channels, fd, fd_seed(seed, snr), mo);
      emit(Method::kMap, bi, bits, res.rate_bpshz, fd.rate_bpshz, res.precoder.alternations, 0.0,
           seconds_since(t0) + fd_time);
      std::ostringstream body;
      body << "alternation,approximation_error\n";
      for (std::size_t i = 0; i < res.precoder.error_trace.size(); ++i) {
        body << i + 1 << "," << format_number(res.precoder.error_trace[i]) << "\n";
      }
      trace(Method::kMap, bits, body.str());
    }

    if (want_quantize) {
      t0 = std::chrono::steady_clock::now();
      const PddResult& inf = infinite_pdd();
      const QuantizedBaseline q = quantize_then_round(cfg, channels, inf);
      emit(Method::kPddQuantize, bi, bits, q.rate, fd.rate_bpshz, inf.report.outer_iters,
           q.violation, seconds_since(t0));
    }
  }
  return out;
}

template <typename Fn>
void parallel_for(int count, int threads, Fn&& fn) {
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(count);
  auto worker = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int n = std::max(1, std::min(threads, count));
  {
    std::vector<std::jthread> pool;
    for (int t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void prepare_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw std::runtime_error("output directory " + dir.string() + " is not writable");
  }
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

const char* kResultsHeader =
    "method,snr_db,bits,channel_index,rate_bpshz,fd_rate_bpshz,relative_pct,outer_iters,"
    "final_violation";

}  // namespace

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
  std::vector<SummaryRow> out;
  std::map<std::tuple<Method, double, std::string>, std::size_t> index;
  for (const auto& r : rows) {
    const auto key = std::make_tuple(r.method, r.snr_db, r.bits);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, out.size()).first;
      SummaryRow s;
      s.method = r.method;
      s.snr_db = r.snr_db;
      s.bits = r.bits;
      s.min_pct = r.relative_pct;
      s.max_pct = r.relative_pct;
      out.push_back(s);
    }
    SummaryRow& s = out[it->second];
    ++s.count;
    s.min_pct = std::min(s.min_pct, r.relative_pct);
    s.max_pct = std::max(s.max_pct, r.relative_pct);
    s.avg_pct += r.relative_pct;
    s.mean_rate_bpshz += r.rate_bpshz;
    s.mean_fd_rate_bpshz += r.fd_rate_bpshz;
  }
  for (auto& s : out) {
    s.avg_pct /= s.count;
    s.mean_rate_bpshz /= s.count;
    s.mean_fd_rate_bpshz /= s.count;
  }
  return out;
}

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << kResultsHeader << "\n";
  for (const auto& r : rows) {
    out << method_name(r.method) << "," << format_number(r.snr_db) << "," << r.bits << ","
        << r.channel_index << "," << format_number(r.rate_bpshz) << ","
        << format_number(r.fd_rate_bpshz) << "," << format_number(r.relative_pct) << ","
        << r.outer_iters << "," << format_number(r.final_violation) << "\n";
  }
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "method,snr_db,bits,count,min_pct,avg_pct,max_pct,mean_rate_bpshz,mean_fd_rate_bpshz\n";
  for (const auto& s : rows) {
    out << method_name(s.method) << "," << format_number(s.snr_db) << "," << s.bits << ","
        << s.count << "," << format_number(s.min_pct) << "," << format_number(s.avg_pct) << ","
        << format_number(s.max_pct) << "," << format_number(s.mean_rate_bpshz) << ","
        << format_number(s.mean_fd_rate_bpshz) << "\n";
  }
}

std::vector<ResultRow> read_results_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kResultsHeader) {
    throw std::runtime_error("results csv: unexpected header");
  }
  std::vector<ResultRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 9) {
      throw std::runtime_error("results csv line " + std::to_string(line_no) +
                               ": expected 9 fields");
    }
    ResultRow r;
    try {
      r.method = parse_method(f[0]);
      r.snr_db = std::stod(f[1]);
      r.bits = f[2];
      r.channel_index = std::stoi(f[3]);
      r.rate_bpshz = std::stod(f[4]);
      r.fd_rate_bpshz = std::stod(f[5]);
      r.relative_pct = std::stod(f[6]);
      r.outer_iters = std::stoi(f[7]);
      r.final_violation = std::stod(f[8]);
    } catch (const std::exception& e) {
      throw std::runtime_error("results csv line " + std::to_string(line_no) + ": " + e.what());
    }
    rows.push_back(r);
  }
  return rows;
}

ExperimentOutput run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  prepare_dir(spec.output_dir);
  if (spec.write_traces) prepare_dir(spec.output_dir / "traces");

  std::vector<Job> jobs;
  for (int s = 0; s < static_cast<int>(spec.snr_db.size()); ++s)
    for (int c = 0; c < spec.num_channels; ++c) jobs.push_back({s, c});

  std::vector<JobOutput> outputs(jobs.size());
  parallel_for(static_cast<int>(jobs.size()), spec.threads,
               [&](int i) { outputs[i] = run_job(spec, jobs[i]); });

  std::vector<KeyedRow> keyed;
  for (auto& o : outputs) {
    for (auto& r : o.rows) keyed.push_back(std::move(r));
    for (const auto& t : o.traces) open_output(spec.output_dir / "traces" / t.name) << t.body;
  }
  std::sort(keyed.begin(), keyed.end(),
            [](const KeyedRow& a, const KeyedRow& b) { return a.key < b.key; });

  ExperimentOutput result;
  for (auto& k : keyed) result.rows.push_back(std::move(k.row));
  result.summary = summarize(result.rows);

  {
    auto out = open_output(spec.output_dir / "results.csv");
    write_results_csv(out, result.rows);
  }
  {
    auto out = open_output(spec.output_dir / "summary.csv");
    write_summary_csv(out, result.summary);
  }
  {
    auto out = open_output(spec.output_dir / "timings.csv");
    out << "method,snr_db,bits,channel_index,wall_time_s\n";
    for (const auto& r : result.rows) {
      out << method_name(r.method) << "," << format_number(r.snr_db) << "," << r.bits << ","
          << r.channel_index << "," << format_number(r.wall_time_s) << "\n";
    }
  }
  {
    auto out = open_output(spec.output_dir / "spec.yaml");
    out << serialize_spec(spec);
  }
  return result;
}

std::vector<ConvergencePoint> run_convergence(const ExperimentSpec& spec) {
  spec.validate();
  prepare_dir(spec.output_dir);

  struct Cell {
    int snr_index;
    int bits_index;
  };
  std::vector<Cell> cells;
  for (int s = 0; s < static_cast<int>(spec.snr_db.size()); ++s)
    for (int b = 0; b < static_cast<int>(spec.bits.size()); ++b) cells.push_back({s, b});

  struct Run {
    std::vector<PddIteration> iters;
    double fd_rate = 0.0;
  };
  const int channels = spec.num_channels;
  std::vector<Run> runs(cells.size() * channels);
  parallel_for(static_cast<int>(runs.size()), spec.threads, [&](int i) {
    const Cell& cell = cells[i / channels];
    const int ch = i % channels;
    const double snr = spec.snr_db[cell.snr_index];
    const std::uint64_t seed = spec.base_seed + static_cast<std::uint64_t>(ch);
    SystemConfig cfg = spec.system;
    cfg.power_budget = snr_to_power(snr, cfg.noise_variance);
    cfg.phases = PhaseSet::infinite();
    const ChannelSet set = obtain_channels(spec, seed);
    runs[i].fd_rate = wmmse_solve(cfg, set, fd_seed(seed, snr), spec.wmmse).rate_bpshz;
    cfg.phases = spec.bits[cell.bits_index];
    runs[i].iters = pdd_solve(cfg, set, spec.pdd, pdd_seed(seed, snr, cfg.phases)).report.iterations;
  });

  std::vector<ConvergencePoint> all;
  auto out = open_output(spec.output_dir / "converge.csv");
  out << "snr_db,bits,outer_iter,normalized_objective,violation,normalized_rate\n";
  const double ln2 = std::log(2.0);
  for (std::size_t c = 0; c < cells.size(); ++c) {
    std::size_t length = 0;
    for (int ch = 0; ch < channels; ++ch) length = std::max(length, runs[c * channels + ch].iters.size());
    for (std::size_t t = 0; t < length; ++t) {
      ConvergencePoint p;
      p.outer_iter = static_cast<int>(t + 1);
      for (int ch = 0; ch < channels; ++ch) {
        const Run& r = runs[c * channels + ch];
        if (r.iters.empty()) continue;
        const PddIteration& it = r.iters[std::min(t, r.iters.size() - 1)];
        const double fd = r.fd_rate > 0.0 ? r.fd_rate : 1.0;
        p.normalized_objective += it.objective_nats / ln2 / fd;
        p.violation += it.violation;
        p.normalized_rate += it.rate_bpshz / fd;
      }
      p.normalized_objective /= channels;
      p.violation /= channels;
      p.normalized_rate /= channels;
      out << format_number(spec.snr_db[cells[c].snr_index]) << ","
          << spec.bits[cells[c].bits_index].to_string() << "," << p.outer_iter << ","
          << format_number(p.normalized_objective) << "," << format_number(p.violation) << ","
          << format_number(p.normalized_rate) << "\n";
      all.push_back(p);
    }
  }
  return all;
}

namespace presets {

ExperimentSpec table3(int users, int streams, int channels) {
  ExperimentSpec s;
  s.system.num_users = users;
  s.system.streams_per_user = streams;
  s.system.num_tx_rf = users * streams;
  s.system.num_rx_rf = streams;
  s.snr_db = {0.0};
  s.bits = {PhaseSet::infinite(), PhaseSet::finite(4), PhaseSet::finite(2)};
  s.methods = {Method::kFd, Method::kPdd};
  s.num_channels = channels;
  return s;
}

ExperimentSpec sweep_bits(int channels) {
  ExperimentSpec s;
  s.system.num_users = 4;
  s.system.streams_per_user = 2;
  s.system.num_tx_rf = 8;
  s.system.num_rx_rf = 4;
  s.snr_db = {-10.0, -5.0, 0.0, 5.0, 10.0};
  s.bits = {PhaseSet::finite(1), PhaseSet::finite(2), PhaseSet::finite(3), PhaseSet::finite(4),
            PhaseSet::infinite()};
  s.methods = {Method::kFd, Method::kPdd, Method::kPddQuantize};
  s.num_channels = channels;
  return s;
}

ExperimentSpec sweep_rf(int num_tx_rf, int channels) {
  ExperimentSpec s;
  s.system.num_users = 3;
  s.system.streams_per_user = 2;
  s.system.num_tx_rf = num_tx_rf;
  s.system.num_rx_rf = 4;
  s.snr_db = {-10.0, -5.0, 0.0, 5.0, 10.0};
  s.bits = {PhaseSet::finite(1)};
  s.methods = {Method::kFd, Method::kPdd};
  s.num_channels = channels;
  return s;
}

}  // namespace presets

}  // namespace hybridbf
