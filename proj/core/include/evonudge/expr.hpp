#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "evonudge/dsl.hpp"

namespace evonudge {

using Rng = std::mt19937_64;

enum class NodeKind : std::uint8_t { Variable, Constant, Apply };

// Immutable expression tree stored as a pre-order node array. Node indices used by
// splice(), subtree() and the GP operators refer to this pre-order position.
class ExprTree {
 public:
  struct Node {
    NodeKind kind;
    std::uint8_t code;  // variable index, constant index or Op
    bool operator==(const Node&) const = default;
  };

  ExprTree() = default;

  static ExprTree variable(int index);
  static ExprTree constant(int index);
  static ExprTree apply(Op op, const ExprTree& child);
  static ExprTree apply(Op op, const ExprTree& left, const ExprTree& right);
  // Takes ownership of an already-valid pre-order sequence.
  static ExprTree from_nodes(std::vector<Node> nodes);

  std::span<const Node> nodes() const noexcept { return nodes_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  bool empty() const noexcept { return nodes_.empty(); }

  // One past the last pre-order index of the subtree rooted at `index`.
  std::size_t subtree_end(std::size_t index) const;
  ExprTree subtree(std::size_t index) const;
  int height() const;
  // -1 for variable-free trees.
  int max_variable_index() const noexcept;

  bool operator==(const ExprTree&) const = default;

 private:
  std::vector<Node> nodes_;
};

struct Measure {
  int height;
  std::size_t size;
};
Measure measure(const ExprTree& tree);

// Depth of every node, pre-order.
std::vector<int> node_depths(const ExprTree& tree);

// Replace the subtree at pre-order `index`. Throws std::out_of_range.
ExprTree splice(const ExprTree& parent, std::size_t index, const ExprTree& replacement);

// ---------------------------------------------------------------------------
// Text format: prefix s-expressions, e.g. (+ (sin x1) (* 2 pi)).
// Variables are x1..x10 (1-based), constants 0 1 2 3 pi.

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : std::runtime_error(what + " at offset " + std::to_string(position)), position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

std::string to_text(const ExprTree& tree);
ExprTree parse_expr(std::string_view text);

// ---------------------------------------------------------------------------
// Evaluation. Domain violations and non-finite results yield the undefined marker,
// which is std::nullopt at the scalar API and NaN inside vectors.

struct DataPoint {
  std::vector<double> x;
  double y = 0.0;
};

using EvalResult = std::optional<double>;

inline constexpr double kWorstFitness = std::numeric_limits<double>::max();

inline bool is_undefined(double v) noexcept { return v != v; }

// Applies `op`; `b` is ignored for unary operators. Returns NaN on domain violation.
double apply_op(Op op, double a, double b = 0.0) noexcept;
// Partial derivative of op(a, b) with respect to argument `which` (0 or 1).
double op_partial(Op op, int which, double a, double b = 0.0) noexcept;

EvalResult evaluate(const ExprTree& tree, std::span<const double> x);
inline EvalResult evaluate(const ExprTree& tree, const DataPoint& point) {
  return evaluate(tree, std::span<const double>(point.x));
}

// Output for every point; NaN marks undefined points.
std::vector<double> evaluate_all(const ExprTree& tree, std::span<const DataPoint> dataset);

// Per-node outputs (pre-order) for a single input vector.
std::vector<double> evaluate_nodes(const ExprTree& tree, std::span<const double> x);

// Mean squared error; kWorstFitness if any point is undefined or the sum overflows.
double mse(const ExprTree& tree, std::span<const DataPoint> dataset);

// ---------------------------------------------------------------------------

enum class GrowMethod { Grow, Full };

// Terminals are drawn uniformly from x1..x_arity and the DSL constants; operators
// uniformly from the DSL operators. Grow picks uniformly from the union of both.
ExprTree random_tree(const Dsl& dsl, int arity, int height, GrowMethod method, Rng& rng);

}  // namespace evonudge
