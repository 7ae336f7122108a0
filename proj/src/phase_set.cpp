#include "hybridbf/phase_set.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace hybridbf {

namespace {

// Quarter-turn multiples are produced exactly so that 1, j, -1, -j carry no
// rounding residue.
std::complex<double> grid_point(int m, int count) {
  if ((4LL * m) % count == 0) {
    switch ((4LL * m / count) % 4) {
      case 0: return {1.0, 0.0};
      case 1: return {0.0, 1.0};
      case 2: return {-1.0, 0.0};
      default: return {0.0, -1.0};
    }
  }
  const double angle = 2.0 * std::numbers::pi * m / count;
  return {std::cos(angle), std::sin(angle)};
}

}  // namespace

PhaseSet PhaseSet::finite(int bits) {
  if (bits < 1 || bits > 20) {
    throw std::invalid_argument("PhaseSet: bits must lie in [1, 20], got " + std::to_string(bits));
  }
  PhaseSet p;
  p.bits_ = bits;
  const int count = 1 << bits;
  p.values_.reserve(count);
  for (int m = 0; m < count; ++m) p.values_.push_back(grid_point(m, count));
  return p;
}

std::size_t PhaseSet::nearest_index(std::complex<double> x) const {
  if (!is_finite()) throw std::logic_error("PhaseSet::nearest_index on infinite set");
  std::size_t best = 0;
  double best_dist = std::abs(x - values_[0]);
  for (std::size_t m = 1; m < values_.size(); ++m) {
    const double dist = std::abs(x - values_[m]);
    if (dist < best_dist - 1e-12) {
      best = m;
      best_dist = dist;
    }
  }
  return best;
}

bool PhaseSet::contains(std::complex<double> x, double tol) const {
  if (!std::isfinite(x.real()) || !std::isfinite(x.imag())) return false;
  if (std::abs(std::abs(x) - 1.0) > tol) return false;
  if (!is_finite()) return true;
  return std::abs(x - values_[nearest_index(x)]) <= tol;
}

std::string PhaseSet::to_string() const {
  return bits_ ? std::to_string(*bits_) : std::string("inf");
}

PhaseSet PhaseSet::parse(const std::string& text) {
  if (text == "inf" || text == "infinite" || text == "Inf") return infinite();
  std::size_t pos = 0;
  int bits = 0;
  try {
    bits = std::stoi(text, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("PhaseSet: expected 'inf' or a bit count, got '" + text + "'");
  }
  if (pos != text.size()) {
    throw std::invalid_argument("PhaseSet: expected 'inf' or a bit count, got '" + text + "'");
  }
  return finite(bits);
}

}  // namespace hybridbf
