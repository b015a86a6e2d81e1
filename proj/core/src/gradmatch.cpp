#include "evonudge/gradmatch.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace evonudge {

std::size_t SubtreeGradient::valid_count() const noexcept {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), std::uint8_t{1}));
}

namespace {

struct PathStep {
  std::size_t node;   // ancestor
  int which;          // child slot leading towards the subtree
  std::size_t left;   // first child
  std::size_t right;  // second child, unused for unary
};

// Ancestors of `target` from the root down, with the child slot taken at each.
std::vector<PathStep> path_to(const ExprTree& tree, std::size_t target) {
  std::vector<PathStep> path;
  std::size_t at = 0;
  const auto nodes = tree.nodes();
  while (at != target) {
    const Op op = static_cast<Op>(nodes[at].code);
    const std::size_t left = at + 1;
    const std::size_t right = arity(op) == 2 ? tree.subtree_end(left) : left;
    const int which = (arity(op) == 2 && target >= right) ? 1 : 0;
    path.push_back({at, which, left, right});
    at = which == 0 ? left : right;
  }
  return path;
}

}  // namespace

SubtreeGradient subtree_gradient(const ExprTree& parent, std::size_t node_index, std::span<const DataPoint> dataset) {
  if (node_index >= parent.size()) throw std::out_of_range("subtree_gradient: node index out of range");
  if (dataset.empty()) throw std::invalid_argument("subtree_gradient needs a non-empty dataset");
  const auto path = path_to(parent, node_index);
  const auto nodes = parent.nodes();
  const double n = static_cast<double>(dataset.size());
  SubtreeGradient out{std::vector<double>(dataset.size(), 0.0), std::vector<std::uint8_t>(dataset.size(), 0)};
  for (std::size_t j = 0; j < dataset.size(); ++j) {
    const auto v = evaluate_nodes(parent, dataset[j].x);
    const double f = v[0];
    if (!std::isfinite(f) || !std::isfinite(v[node_index])) continue;
    double dfdz = 1.0;
    for (const auto& s : path) {
      const Op op = static_cast<Op>(nodes[s.node].code);
      dfdz *= op_partial(op, s.which, v[s.left], arity(op) == 2 ? v[s.right] : 0.0);
    }
    const double g = -(2.0 / n) * (f - dataset[j].y) * dfdz;
    if (!std::isfinite(g)) continue;
    out.g[j] = g;
    out.valid[j] = 1;
  }
  return out;
}

double quality(std::span<const double> s, std::span<const double> s_prime, const SubtreeGradient& g) {
  if (s.size() != s_prime.size() || s.size() != g.g.size()) throw std::invalid_argument("quality: length mismatch");
  // Both vectors are divided by their largest entry first so the norms cannot overflow;
  // eps is rescaled to keep dot / (|d| |g| + eps).
  double md = 0.0, mg = 0.0;
  for (std::size_t j = 0; j < s.size(); ++j) {
    if (!g.valid[j]) continue;
    const double d = s_prime[j] - s[j];
    if (!std::isfinite(d)) return kWorstQuality;
    md = std::max(md, std::fabs(d));
    mg = std::max(mg, std::fabs(g.g[j]));
  }
  if (md == 0.0) return kWorstQuality;
  if (mg == 0.0) return 0.0;
  double dot = 0.0, dd = 0.0, gg = 0.0;
  for (std::size_t j = 0; j < s.size(); ++j) {
    if (!g.valid[j]) continue;
    const double d = (s_prime[j] - s[j]) / md;
    const double gj = g.g[j] / mg;
    dot += d * gj;
    dd += d * d;
    gg += gj * gj;
  }
  return dot / (std::sqrt(dd) * std::sqrt(gg) + kQualityEps / md / mg);
}

DonorChoice choose_donor(const ExprTree& parent, std::size_t node_index, const ExprTree& donor,
                         std::span<const DataPoint> dataset) {
  const SubtreeGradient g = subtree_gradient(parent, node_index, dataset);
  const std::size_t n = dataset.size();
  // Column j of each matrix holds the per-node values for example j.
  std::vector<double> s(n);
  std::vector<std::vector<double>> donor_values(n);
  for (std::size_t j = 0; j < n; ++j) {
    s[j] = evaluate_nodes(parent, dataset[j].x)[node_index];
    donor_values[j] = evaluate_nodes(donor, dataset[j].x);
  }
  DonorChoice best;
  std::size_t best_size = 0;
  std::vector<double> sp(n);
  for (std::size_t i = 0; i < donor.size(); ++i) {
    for (std::size_t j = 0; j < n; ++j) sp[j] = donor_values[j][i];
    const double q = quality(s, sp, g);
    const std::size_t size = donor.subtree_end(i) - i;
    if (i == 0 || q > best.quality || (q == best.quality && size < best_size)) {
      best = {i, q};
      best_size = size;
    }
  }
  return best;
}

ExprTree gradient_matched_crossover(const ExprTree& p1, const ExprTree& p2, std::span<const DataPoint> dataset,
                                    Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, p1.size() - 1);
  const std::size_t at = pick(rng);
  const DonorChoice d = choose_donor(p1, at, p2, dataset);
  return splice(p1, at, p2.subtree(d.index));
}

}  // namespace evonudge
