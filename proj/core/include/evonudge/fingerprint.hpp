#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "evonudge/expr.hpp"

namespace evonudge {

inline constexpr std::size_t kProbeCount = 32;
inline constexpr double kProbeLow = 1.0;
inline constexpr double kProbeHigh = 5.0;

// Fixed probe points per arity, drawn once from [1,5]^arity with a global seed.
class ProbeSet {
 public:
  static const ProbeSet& for_arity(int arity);

  int arity() const noexcept { return arity_; }
  std::span<const DataPoint> points() const noexcept { return points_; }

 private:
  explicit ProbeSet(int arity);
  int arity_;
  std::vector<DataPoint> points_;
};

// Values below this magnitude quantize to zero; everything else keeps ~30 mantissa bits
// (relative precision 2^-30, just under 1e-9).
inline constexpr double kZeroFloor = 1e-10;
inline constexpr int kMantissaBits = 30;

std::int64_t quantize(double value) noexcept;

struct Fingerprint {
  std::array<std::int64_t, kProbeCount> quantized{};
  std::uint32_t undefined_mask = 0;
  bool operator==(const Fingerprint&) const = default;
};

struct FingerprintHash {
  std::size_t operator()(const Fingerprint& fp) const noexcept;
};

// `probe_values` has one entry per probe point, NaN for undefined.
Fingerprint make_fingerprint(std::span<const double> probe_values);
Fingerprint fingerprint_of(const ExprTree& tree, int arity);

}  // namespace evonudge
