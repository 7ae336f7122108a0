#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace hybridbf {

/// Admissible values of one phase shifter: any unit-modulus complex number
/// ("infinite" resolution), or the 2^b points exp(j 2 pi m / 2^b).
class PhaseSet {
 public:
  PhaseSet() = default;  // infinite

  static PhaseSet infinite() { return PhaseSet{}; }
  static PhaseSet finite(int bits);

  bool is_finite() const { return bits_.has_value(); }
  std::optional<int> bits() const { return bits_; }
  const std::vector<std::complex<double>>& values() const { return values_; }

  /// Index into values() nearest to `x` (smallest index on ties).
  std::size_t nearest_index(std::complex<double> x) const;

  /// True if |x| = 1 within `tol` and, when finite, x is within `tol` of a grid point.
  bool contains(std::complex<double> x, double tol = 1e-9) const;

  /// "inf" or the decimal bit count.
  std::string to_string() const;
  static PhaseSet parse(const std::string& text);

  friend bool operator==(const PhaseSet& a, const PhaseSet& b) { return a.bits_ == b.bits_; }

 private:
  std::optional<int> bits_;
  std::vector<std::complex<double>> values_;
};

}  // namespace hybridbf
