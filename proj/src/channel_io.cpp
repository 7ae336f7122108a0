#include "hybridbf/channel_io.hpp"

#include <json.hpp>

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace hybridbf {

namespace {

constexpr const char* kFormat = "hybridbf-channels";

void put_f64(std::ostream& out, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  std::array<char, 8> buf{};
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  out.write(buf.data(), buf.size());
}

double get_f64(std::istream& in) {
  std::array<unsigned char, 8> buf{};
  in.read(reinterpret_cast<char*>(buf.data()), buf.size());
  if (!in) throw std::runtime_error("read_channels: truncated payload");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

void write_channels(std::ostream& out, const ChannelSet& channels) {
  const auto users = channels.h.size();
  if (users == 0) throw std::invalid_argument("write_channels: empty channel set");
  nlohmann::ordered_json header;
  header["format"] = kFormat;
  header["version"] = 1;
  header["num_users"] = users;
  header["num_rx"] = channels.h[0].rows();
  header["num_tx"] = channels.h[0].cols();
  header["num_paths"] = channels.params.num_paths;
  header["seed"] = channels.seed;
  header["layout"] = "column-major";
  header["scalar"] = "complex128-le";
  out << header.dump() << '\n';
  for (const auto& hk : channels.h) {
    for (Eigen::Index j = 0; j < hk.cols(); ++j) {
      for (Eigen::Index i = 0; i < hk.rows(); ++i) {
        put_f64(out, hk(i, j).real());
        put_f64(out, hk(i, j).imag());
      }
    }
  }
  for (const auto& user : channels.params.paths) {
    for (const auto& p : user) {
      put_f64(out, p.gain.real());
      put_f64(out, p.gain.imag());
      put_f64(out, p.arrival_angle);
      put_f64(out, p.departure_angle);
    }
  }
  if (!out) throw std::runtime_error("write_channels: stream error");
}

ChannelSet read_channels(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("read_channels: missing header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("read_channels: bad header: ") + e.what());
  }
  if (header.value("format", "") != kFormat || header.value("version", 0) != 1) {
    throw std::runtime_error("read_channels: unsupported format");
  }
  const auto users = header.at("num_users").get<int>();
  const auto rows = header.at("num_rx").get<Eigen::Index>();
  const auto cols = header.at("num_tx").get<Eigen::Index>();
  const auto paths = header.at("num_paths").get<int>();
  if (users <= 0 || rows <= 0 || cols <= 0 || paths < 0) {
    throw std::runtime_error("read_channels: invalid dimensions in header");
  }
  ChannelSet out;
  out.seed = header.at("seed").get<std::uint64_t>();
  out.params.num_paths = paths;
  out.h.reserve(users);
  for (int k = 0; k < users; ++k) {
    CMat hk(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
      for (Eigen::Index i = 0; i < rows; ++i) {
        const double re = get_f64(in);
        const double im = get_f64(in);
        hk(i, j) = {re, im};
      }
    }
    out.h.push_back(std::move(hk));
  }
  out.params.paths.resize(users);
  for (int k = 0; k < users; ++k) {
    out.params.paths[k].resize(paths);
    for (auto& p : out.params.paths[k]) {
      const double re = get_f64(in);
      const double im = get_f64(in);
      p.gain = {re, im};
      p.arrival_angle = get_f64(in);
      p.departure_angle = get_f64(in);
    }
  }
  return out;
}

void save_channels(const std::filesystem::path& path, const ChannelSet& channels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_channels: cannot open " + path.string());
  write_channels(out, channels);
}

ChannelSet load_channels(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_channels: cannot open " + path.string());
  return read_channels(in);
}

}  // namespace hybridbf
