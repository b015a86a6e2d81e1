#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "evonudge/expr.hpp"

namespace evonudge {

// Negated derivative of the MSE loss with respect to the output of one subtree, per
// training example. Examples where the parent or any partial on the path is undefined
// are marked invalid and take no part in quality().
struct SubtreeGradient {
  std::vector<double> g;
  std::vector<std::uint8_t> valid;
  std::size_t valid_count() const noexcept;
};

SubtreeGradient subtree_gradient(const ExprTree& parent, std::size_t node_index, std::span<const DataPoint> dataset);

inline constexpr double kQualityEps = 1e-12;
// Returned for an unchanged or undefined displacement.
inline constexpr double kWorstQuality = std::numeric_limits<double>::lowest();

// Cosine between s' - s and g over the valid examples.
double quality(std::span<const double> s, std::span<const double> s_prime, const SubtreeGradient& g);

struct DonorChoice {
  std::size_t index = 0;  // pre-order node in the donor tree
  double quality = kWorstQuality;
};

// Best subtree of `donor` to replace node `node_index` of `parent`; ties go to the smaller
// subtree, then the lower index.
DonorChoice choose_donor(const ExprTree& parent, std::size_t node_index, const ExprTree& donor,
                         std::span<const DataPoint> dataset);

// Picks a uniform node of p1 and splices in the best-aligned subtree of p2. The height
// limit is left to the caller.
ExprTree gradient_matched_crossover(const ExprTree& p1, const ExprTree& p2, std::span<const DataPoint> dataset,
                                    Rng& rng);

}  // namespace evonudge
