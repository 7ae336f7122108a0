#include "hybridbf/experiment.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace hybridbf {

namespace {

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& at, const std::string& msg) const {
    const auto mark = at.Mark();
    std::string where = source_;
    if (mark.line >= 0) where += ":" + std::to_string(mark.line + 1);
    throw SpecError(where + ": " + msg);
  }

  [[noreturn]] void fail_missing(const YAML::Node& parent, const std::string& path) const {
    fail(parent, "missing required field '" + path + "'");
  }

  void check_map(const YAML::Node& node, const std::string& path) const {
    if (!node.IsMap()) fail(node, "'" + path + "' must be a mapping");
  }

  void check_keys(const YAML::Node& node, const std::string& path,
                  const std::set<std::string>& allowed) const {
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.contains(key)) {
        fail(kv.first, "unknown key '" + (path.empty() ? key : path + "." + key) + "'");
      }
    }
  }

  template <typename T>
  T scalar(const YAML::Node& node, const std::string& path) const {
    if (!node.IsScalar()) fail(node, "'" + path + "' must be a scalar");
    try {
      return node.as<T>();
    } catch (const YAML::Exception&) {
      fail(node, "'" + path + "' has an invalid value '" + node.Scalar() + "'");
    }
  }

  template <typename T>
  bool optional(const YAML::Node& parent, const char* key, const std::string& path, T& out) const {
    const YAML::Node n = parent[key];
    if (!n) return false;
    out = scalar<T>(n, path);
    return true;
  }

  template <typename T>
  T required(const YAML::Node& parent, const char* key, const std::string& path) const {
    const YAML::Node n = parent[key];
    if (!n) fail_missing(parent, path);
    return scalar<T>(n, path);
  }

  YAML::Node sequence(const YAML::Node& parent, const char* key, const std::string& path,
                      bool must_exist) const {
    const YAML::Node n = parent[key];
    if (!n) {
      if (must_exist) fail_missing(parent, path);
      return n;
    }
    if (!n.IsSequence()) fail(n, "'" + path + "' must be a list");
    if (n.size() == 0) fail(n, "'" + path + "' must not be empty");
    return n;
  }

 private:
  std::string source_;
};

std::string num(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

const char* order_name(SweepOrder o) { return o == SweepOrder::kRandom ? "random" : "row_major"; }

}  // namespace

const char* method_name(Method m) {
  switch (m) {
    case Method::kPdd: return "pdd";
    case Method::kMap: return "map";
    case Method::kFd: return "fd";
    case Method::kPddQuantize: return "pdd_quantize_then_round";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::kPdd, Method::kMap, Method::kFd, Method::kPddQuantize}) {
    if (name == method_name(m)) return m;
  }
  throw std::invalid_argument("unknown method '" + name + "'");
}

void ExperimentSpec::validate() const {
  try {
    system.validate();
  } catch (const std::invalid_argument& e) {
    throw SpecError(std::string("system: ") + e.what());
  }
  try {
    pdd.validate();
  } catch (const std::invalid_argument& e) {
    throw SpecError(std::string("pdd: ") + e.what());
  }
  if (num_paths < 1) throw SpecError("num_paths: must be at least 1");
  if (snr_db.empty()) throw SpecError("snr_db: must not be empty");
  if (bits.empty()) throw SpecError("bits: must not be empty");
  if (methods.empty()) throw SpecError("methods: must not be empty");
  if (num_channels < 1) throw SpecError("num_channels: must be at least 1");
  if (threads < 1) throw SpecError("threads: must be at least 1");
  if (wmmse.restarts < 1 || wmmse.max_iters < 1 || !(wmmse.tolerance > 0.0)) {
    throw SpecError("wmmse: restarts, max_iters and tolerance must be positive");
  }
  if (!(system.noise_variance > 0.0)) throw SpecError("system.noise_variance: must be positive");
}

bool operator==(const ExperimentSpec& a, const ExperimentSpec& b) {
  const auto& s = a.system;
  const auto& t = b.system;
  const auto& p = a.pdd;
  const auto& q = b.pdd;
  return s.num_tx_antennas == t.num_tx_antennas && s.num_rx_antennas == t.num_rx_antennas &&
         s.num_tx_rf == t.num_tx_rf && s.num_rx_rf == t.num_rx_rf && s.num_users == t.num_users &&
         s.streams_per_user == t.streams_per_user && s.noise_variance == t.noise_variance &&
         a.num_paths == b.num_paths && a.snr_db == b.snr_db && a.bits == b.bits &&
         a.methods == b.methods && a.num_channels == b.num_channels &&
         a.base_seed == b.base_seed && p.rho0 == q.rho0 && p.c == q.c && p.eta0 == q.eta0 &&
         p.eps0 == q.eps0 && p.eps_outer == q.eps_outer && p.max_inner == q.max_inner &&
         p.max_outer == q.max_outer && p.eta_factor == q.eta_factor &&
         p.finite_warmstart_iters == q.finite_warmstart_iters && p.rf_sweeps == q.rf_sweeps &&
         p.sweep_order == q.sweep_order && a.wmmse.restarts == b.wmmse.restarts &&
         a.wmmse.max_iters == b.wmmse.max_iters && a.wmmse.tolerance == b.wmmse.tolerance &&
         a.output_dir == b.output_dir && a.threads == b.threads && a.map_finite == b.map_finite &&
         a.write_traces == b.write_traces && a.channel_cache == b.channel_cache;
}

ExperimentSpec parse_spec_text(const std::string& text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw SpecError(source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  const Reader r(source);
  if (!root || root.IsNull()) throw SpecError(source + ": empty specification");
  r.check_map(root, "<root>");
  r.check_keys(root, "",
               {"system", "num_paths", "snr_db", "bits", "methods", "num_channels", "base_seed",
                "pdd", "wmmse", "output_dir", "threads", "map_finite", "write_traces",
                "channel_cache"});

  ExperimentSpec spec;

  const YAML::Node sys = root["system"];
  if (!sys) r.fail_missing(root, "system");
  r.check_map(sys, "system");
  r.check_keys(sys, "system",
               {"num_tx_antennas", "num_rx_antennas", "num_tx_rf", "num_rx_rf", "num_users",
                "streams_per_user", "noise_variance"});
  auto& s = spec.system;
  s.num_tx_antennas = r.required<int>(sys, "num_tx_antennas", "system.num_tx_antennas");
  s.num_rx_antennas = r.required<int>(sys, "num_rx_antennas", "system.num_rx_antennas");
  s.num_tx_rf = r.required<int>(sys, "num_tx_rf", "system.num_tx_rf");
  s.num_rx_rf = r.required<int>(sys, "num_rx_rf", "system.num_rx_rf");
  s.num_users = r.required<int>(sys, "num_users", "system.num_users");
  s.streams_per_user = r.required<int>(sys, "streams_per_user", "system.streams_per_user");
  r.optional(sys, "noise_variance", "system.noise_variance", s.noise_variance);

  r.optional(root, "num_paths", "num_paths", spec.num_paths);

  for (const auto& n : r.sequence(root, "snr_db", "snr_db", true)) {
    spec.snr_db.push_back(r.scalar<double>(n, "snr_db[]"));
  }
  if (const auto seq = r.sequence(root, "bits", "bits", false)) {
    spec.bits.clear();
    for (const auto& n : seq) {
      const auto text_value = r.scalar<std::string>(n, "bits[]");
      try {
        spec.bits.push_back(text_value == ".inf" ? PhaseSet::infinite() : PhaseSet::parse(text_value));
      } catch (const std::invalid_argument& e) {
        r.fail(n, std::string("'bits[]': ") + e.what());
      }
    }
  }
  for (const auto& n : r.sequence(root, "methods", "methods", true)) {
    try {
      spec.methods.push_back(parse_method(r.scalar<std::string>(n, "methods[]")));
    } catch (const std::invalid_argument& e) {
      r.fail(n, std::string("'methods[]': ") + e.what());
    }
  }
  spec.num_channels = r.required<int>(root, "num_channels", "num_channels");
  spec.base_seed = r.required<std::uint64_t>(root, "base_seed", "base_seed");

  if (const YAML::Node pdd = root["pdd"]) {
    r.check_map(pdd, "pdd");
    r.check_keys(pdd, "pdd",
                 {"rho0", "c", "eta0", "eps0", "eps_outer", "max_inner", "max_outer", "eta_factor",
                  "finite_warmstart_iters", "rf_sweeps", "sweep_order"});
    auto& p = spec.pdd;
    double rho0 = 0.0;
    if (r.optional(pdd, "rho0", "pdd.rho0", rho0)) p.rho0 = rho0;
    r.optional(pdd, "c", "pdd.c", p.c);
    r.optional(pdd, "eta0", "pdd.eta0", p.eta0);
    r.optional(pdd, "eps0", "pdd.eps0", p.eps0);
    r.optional(pdd, "eps_outer", "pdd.eps_outer", p.eps_outer);
    r.optional(pdd, "max_inner", "pdd.max_inner", p.max_inner);
    r.optional(pdd, "max_outer", "pdd.max_outer", p.max_outer);
    r.optional(pdd, "eta_factor", "pdd.eta_factor", p.eta_factor);
    r.optional(pdd, "finite_warmstart_iters", "pdd.finite_warmstart_iters",
               p.finite_warmstart_iters);
    r.optional(pdd, "rf_sweeps", "pdd.rf_sweeps", p.rf_sweeps);
    std::string order;
    if (r.optional(pdd, "sweep_order", "pdd.sweep_order", order)) {
      if (order == "row_major") {
        p.sweep_order = SweepOrder::kRowMajor;
      } else if (order == "random") {
        p.sweep_order = SweepOrder::kRandom;
      } else {
        r.fail(pdd["sweep_order"], "'pdd.sweep_order' must be 'row_major' or 'random'");
      }
    }
  }
  if (const YAML::Node w = root["wmmse"]) {
    r.check_map(w, "wmmse");
    r.check_keys(w, "wmmse", {"restarts", "max_iters", "tolerance"});
    r.optional(w, "restarts", "wmmse.restarts", spec.wmmse.restarts);
    r.optional(w, "max_iters", "wmmse.max_iters", spec.wmmse.max_iters);
    r.optional(w, "tolerance", "wmmse.tolerance", spec.wmmse.tolerance);
  }

  std::string path_value;
  if (r.optional(root, "output_dir", "output_dir", path_value)) spec.output_dir = path_value;
  if (r.optional(root, "channel_cache", "channel_cache", path_value)) spec.channel_cache = path_value;
  r.optional(root, "threads", "threads", spec.threads);
  r.optional(root, "map_finite", "map_finite", spec.map_finite);
  r.optional(root, "write_traces", "write_traces", spec.write_traces);

  try {
    spec.validate();
  } catch (const SpecError& e) {
    throw SpecError(source + ": " + e.what());
  }
  return spec;
}

ExperimentSpec parse_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SpecError(path.string() + ": cannot open specification");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_spec_text(buf.str(), path.string());
}

std::string serialize_spec(const ExperimentSpec& spec) {
  std::ostringstream o;
  const auto& s = spec.system;
  o << "system:\n"
    << "  num_tx_antennas: " << s.num_tx_antennas << "\n"
    << "  num_rx_antennas: " << s.num_rx_antennas << "\n"
    << "  num_tx_rf: " << s.num_tx_rf << "\n"
    << "  num_rx_rf: " << s.num_rx_rf << "\n"
    << "  num_users: " << s.num_users << "\n"
    << "  streams_per_user: " << s.streams_per_user << "\n"
    << "  noise_variance: " << num(s.noise_variance) << "\n";
  o << "num_paths: " << spec.num_paths << "\n";
  auto list = [&o](const char* key, const auto& items, auto fmt) {
    o << key << ": [";
    for (std::size_t i = 0; i < items.size(); ++i) o << (i ? ", " : "") << fmt(items[i]);
    o << "]\n";
  };
  list("snr_db", spec.snr_db, [](double v) { return num(v); });
  list("bits", spec.bits, [](const PhaseSet& p) { return p.to_string(); });
  list("methods", spec.methods, [](Method m) { return std::string(method_name(m)); });
  o << "num_channels: " << spec.num_channels << "\n"
    << "base_seed: " << spec.base_seed << "\n";
  const auto& p = spec.pdd;
  o << "pdd:\n";
  if (p.rho0) o << "  rho0: " << num(*p.rho0) << "\n";
  o << "  c: " << num(p.c) << "\n"
    << "  eta0: " << num(p.eta0) << "\n"
    << "  eps0: " << num(p.eps0) << "\n"
    << "  eps_outer: " << num(p.eps_outer) << "\n"
    << "  max_inner: " << p.max_inner << "\n"
    << "  max_outer: " << p.max_outer << "\n"
    << "  eta_factor: " << num(p.eta_factor) << "\n"
    << "  finite_warmstart_iters: " << p.finite_warmstart_iters << "\n"
    << "  rf_sweeps: " << p.rf_sweeps << "\n"
    << "  sweep_order: " << order_name(p.sweep_order) << "\n";
  o << "wmmse:\n"
    << "  restarts: " << spec.wmmse.restarts << "\n"
    << "  max_iters: " << spec.wmmse.max_iters << "\n"
    << "  tolerance: " << num(spec.wmmse.tolerance) << "\n";
  YAML::Emitter quoted;
  quoted << YAML::DoubleQuoted << spec.output_dir.string();
  o << "output_dir: " << quoted.c_str() << "\n";
  if (!spec.channel_cache.empty()) {
    YAML::Emitter cache;
    cache << YAML::DoubleQuoted << spec.channel_cache.string();
    o << "channel_cache: " << cache.c_str() << "\n";
  }
  o << "threads: " << spec.threads << "\n"
    << "map_finite: " << (spec.map_finite ? "true" : "false") << "\n"
    << "write_traces: " << (spec.write_traces ? "true" : "false") << "\n";
  return o.str();
}

void apply_env_overrides(ExperimentSpec& spec) {
  if (const char* dir = std::getenv("HYBRIDBF_OUTPUT_DIR"); dir && *dir) spec.output_dir = dir;
}

}  // namespace hybridbf
