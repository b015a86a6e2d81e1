#include "evonudge/fingerprint.hpp"

#include <cmath>
#include <stdexcept>

#include "evonudge/random.hpp"

namespace evonudge {

namespace {
constexpr std::uint64_t kProbeSeed = 0x9b1d5a3c70e4f281ULL;
}

ProbeSet::ProbeSet(int arity) : arity_(arity) {
  Rng rng(mix_seed(kProbeSeed, static_cast<std::uint64_t>(arity)));
  std::uniform_real_distribution<double> u(kProbeLow, kProbeHigh);
  points_.resize(kProbeCount);
  for (auto& p : points_) {
    p.x.resize(static_cast<std::size_t>(arity));
    for (auto& v : p.x) v = u(rng);
  }
}

const ProbeSet& ProbeSet::for_arity(int arity) {
  if (arity < 1 || arity > kMaxVariables) throw std::invalid_argument("probe arity out of range");
  static const auto sets = [] {
    std::vector<ProbeSet> v;
    for (int a = 1; a <= kMaxVariables; ++a) v.push_back(ProbeSet(a));
    return v;
  }();
  return sets[static_cast<std::size_t>(arity - 1)];
}

std::int64_t quantize(double value) noexcept {
  if (!std::isfinite(value)) return std::numeric_limits<std::int64_t>::min();
  if (std::fabs(value) < kZeroFloor) return 0;
  int exponent = 0;
  const double mantissa = std::frexp(value, &exponent);  // |mantissa| in [0.5, 1)
  std::int64_t q = std::llround(std::ldexp(mantissa, kMantissaBits));
  constexpr std::int64_t top = std::int64_t{1} << kMantissaBits;
  if (q == top || q == -top) {
    q /= 2;
    ++exponent;
  }
  return static_cast<std::int64_t>(exponent) * (std::int64_t{1} << 32) + q;
}

std::size_t FingerprintHash::operator()(const Fingerprint& fp) const noexcept {
  std::uint64_t h = splitmix64(fp.undefined_mask);
  for (std::int64_t q : fp.quantized) h = splitmix64(h ^ static_cast<std::uint64_t>(q));
  return static_cast<std::size_t>(h);
}

Fingerprint make_fingerprint(std::span<const double> probe_values) {
  if (probe_values.size() != kProbeCount) throw std::invalid_argument("fingerprint needs one value per probe");
  Fingerprint fp;
  for (std::size_t i = 0; i < kProbeCount; ++i) {
    if (is_undefined(probe_values[i]) || !std::isfinite(probe_values[i])) {
      fp.undefined_mask |= std::uint32_t{1} << i;
      fp.quantized[i] = std::numeric_limits<std::int64_t>::min();
    } else {
      fp.quantized[i] = quantize(probe_values[i]);
    }
  }
  return fp;
}

Fingerprint fingerprint_of(const ExprTree& tree, int arity) {
  const auto values = evaluate_all(tree, ProbeSet::for_arity(arity).points());
  return make_fingerprint(values);
}

}  // namespace evonudge
