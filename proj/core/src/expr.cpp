#include "evonudge/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace evonudge {

namespace {

int node_arity(const ExprTree::Node& node) noexcept {
  return node.kind == NodeKind::Apply ? arity(static_cast<Op>(node.code)) : 0;
}

}  // namespace

// ---------------------------------------------------------------------------
// Construction

ExprTree ExprTree::variable(int index) {
  if (index < 0 || index >= kMaxVariables) throw std::out_of_range("variable index out of range");
  ExprTree t;
  t.nodes_.push_back({NodeKind::Variable, static_cast<std::uint8_t>(index)});
  return t;
}

ExprTree ExprTree::constant(int index) {
  if (index < 0 || index >= static_cast<int>(constant_table().size())) {
    throw std::out_of_range("constant index out of range");
  }
  ExprTree t;
  t.nodes_.push_back({NodeKind::Constant, static_cast<std::uint8_t>(index)});
  return t;
}

ExprTree ExprTree::apply(Op op, const ExprTree& child) {
  if (arity(op) != 1) throw std::invalid_argument("operator is not unary");
  ExprTree t;
  t.nodes_.reserve(child.size() + 1);
  t.nodes_.push_back({NodeKind::Apply, static_cast<std::uint8_t>(op)});
  t.nodes_.insert(t.nodes_.end(), child.nodes_.begin(), child.nodes_.end());
  return t;
}

ExprTree ExprTree::apply(Op op, const ExprTree& left, const ExprTree& right) {
  if (arity(op) != 2) throw std::invalid_argument("operator is not binary");
  ExprTree t;
  t.nodes_.reserve(left.size() + right.size() + 1);
  t.nodes_.push_back({NodeKind::Apply, static_cast<std::uint8_t>(op)});
  t.nodes_.insert(t.nodes_.end(), left.nodes_.begin(), left.nodes_.end());
  t.nodes_.insert(t.nodes_.end(), right.nodes_.begin(), right.nodes_.end());
  return t;
}

ExprTree ExprTree::from_nodes(std::vector<Node> nodes) {
  ExprTree t;
  t.nodes_ = std::move(nodes);
  if (!t.nodes_.empty() && t.subtree_end(0) != t.nodes_.size()) {
    throw std::invalid_argument("node sequence is not a single well-formed tree");
  }
  return t;
}

std::size_t ExprTree::subtree_end(std::size_t index) const {
  if (index >= nodes_.size()) throw std::out_of_range("node index out of range");
  std::size_t pending = 1;
  std::size_t i = index;
  while (pending > 0) {
    if (i >= nodes_.size()) throw std::invalid_argument("truncated expression tree");
    pending += static_cast<std::size_t>(node_arity(nodes_[i])) - 1;
    ++i;
  }
  return i;
}

ExprTree ExprTree::subtree(std::size_t index) const {
  ExprTree t;
  t.nodes_.assign(nodes_.begin() + static_cast<std::ptrdiff_t>(index),
                  nodes_.begin() + static_cast<std::ptrdiff_t>(subtree_end(index)));
  return t;
}

int ExprTree::height() const {
  if (nodes_.empty()) return 0;
  // Reverse pre-order scan: children are complete before their parent is reached.
  std::vector<int> stack;
  stack.reserve(nodes_.size());
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    const int k = node_arity(*it);
    int h = 0;
    for (int c = 0; c < k; ++c) {
      h = std::max(h, stack.back() + 1);
      stack.pop_back();
    }
    stack.push_back(h);
  }
  return stack.back();
}

int ExprTree::max_variable_index() const noexcept {
  int best = -1;
  for (const auto& n : nodes_) {
    if (n.kind == NodeKind::Variable) best = std::max(best, static_cast<int>(n.code));
  }
  return best;
}

Measure measure(const ExprTree& tree) { return {tree.height(), tree.size()}; }

std::vector<int> node_depths(const ExprTree& tree) {
  std::vector<int> depths(tree.size(), 0);
  // Open slots per ancestor; the top of the stack is the current parent.
  std::vector<std::pair<int, int>> open;  // (depth, remaining children)
  for (std::size_t i = 0; i < tree.size(); ++i) {
    while (!open.empty() && open.back().second == 0) open.pop_back();
    const int d = open.empty() ? 0 : open.back().first + 1;
    if (!open.empty()) --open.back().second;
    depths[i] = d;
    const int k = node_arity(tree.nodes()[i]);
    if (k > 0) open.emplace_back(d, k);
  }
  return depths;
}

ExprTree splice(const ExprTree& parent, std::size_t index, const ExprTree& replacement) {
  if (index >= parent.size()) throw std::out_of_range("splice index out of range");
  const std::size_t end = parent.subtree_end(index);
  const auto src = parent.nodes();
  std::vector<ExprTree::Node> out;
  out.reserve(parent.size() - (end - index) + replacement.size());
  out.insert(out.end(), src.begin(), src.begin() + static_cast<std::ptrdiff_t>(index));
  out.insert(out.end(), replacement.nodes().begin(), replacement.nodes().end());
  out.insert(out.end(), src.begin() + static_cast<std::ptrdiff_t>(end), src.end());
  return ExprTree::from_nodes(std::move(out));
}

// ---------------------------------------------------------------------------
// Text

namespace {

void write_text(const ExprTree& tree, std::size_t& i, std::string& out) {
  const auto& node = tree.nodes()[i++];
  switch (node.kind) {
    case NodeKind::Variable:
      out += 'x';
      out += std::to_string(node.code + 1);
      return;
    case NodeKind::Constant:
      out += constant_table()[node.code].name;
      return;
    case NodeKind::Apply: {
      const Op op = static_cast<Op>(node.code);
      out += '(';
      out += symbol(op);
      for (int c = 0; c < arity(op); ++c) {
        out += ' ';
        write_text(tree, i, out);
      }
      out += ')';
      return;
    }
  }
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  ExprTree parse() {
    std::vector<ExprTree::Node> nodes;
    parse_expr(nodes);
    skip_space();
    if (pos_ != text_.size()) throw ParseError("trailing input", pos_);
    return ExprTree::from_nodes(std::move(nodes));
  }

 private:
  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  std::string_view atom() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) && text_[pos_] != '(' &&
           text_[pos_] != ')') {
      ++pos_;
    }
    return text_.substr(start, pos_ - start);
  }

  void parse_expr(std::vector<ExprTree::Node>& nodes) {
    skip_space();
    if (pos_ >= text_.size()) throw ParseError("unexpected end of input", pos_);
    if (text_[pos_] == ')') throw ParseError("unexpected ')'", pos_);
    if (text_[pos_] == '(') {
      ++pos_;
      skip_space();
      const std::size_t at = pos_;
      const auto name = atom();
      const auto op = op_from_symbol(name);
      if (!op) throw ParseError("unknown operator '" + std::string(name) + "'", at);
      nodes.push_back({NodeKind::Apply, static_cast<std::uint8_t>(*op)});
      for (int c = 0; c < arity(*op); ++c) parse_expr(nodes);
      skip_space();
      if (pos_ >= text_.size() || text_[pos_] != ')') {
        throw ParseError("expected ')' closing '" + std::string(name) + "'", pos_);
      }
      ++pos_;
      return;
    }
    const std::size_t at = pos_;
    const auto name = atom();
    if (name.size() >= 2 && name[0] == 'x') {
      int index = 0;
      for (std::size_t k = 1; k < name.size(); ++k) {
        if (!std::isdigit(static_cast<unsigned char>(name[k]))) throw ParseError("bad variable name", at);
        index = index * 10 + (name[k] - '0');
        if (index > kMaxVariables) break;
      }
      if (index < 1 || index > kMaxVariables) throw ParseError("variable index out of range", at);
      nodes.push_back({NodeKind::Variable, static_cast<std::uint8_t>(index - 1)});
      return;
    }
    if (const auto c = constant_from_name(name)) {
      nodes.push_back({NodeKind::Constant, static_cast<std::uint8_t>(*c)});
      return;
    }
    throw ParseError("unknown terminal '" + std::string(name) + "'", at);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string to_text(const ExprTree& tree) {
  std::string out;
  if (tree.empty()) return out;
  std::size_t i = 0;
  write_text(tree, i, out);
  return out;
}

ExprTree parse_expr(std::string_view text) { return Parser(text).parse(); }

// ---------------------------------------------------------------------------
// Evaluation

double apply_op(Op op, double a, double b) noexcept {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  double r;
  switch (op) {
    case Op::Add: r = a + b; break;
    case Op::Sub: r = a - b; break;
    case Op::Mul: r = a * b; break;
    case Op::Div:
      if (b == 0.0) return nan;
      r = a / b;
      break;
    case Op::Sqrt:
      if (a < 0.0) return nan;
      r = std::sqrt(a);
      break;
    case Op::Square: r = a * a; break;
    case Op::Cube: r = a * a * a; break;
    case Op::Sin: r = std::sin(a); break;
    case Op::Cos: r = std::cos(a); break;
    case Op::Log:
      if (a <= 0.0) return nan;
      r = std::log(a);
      break;
    case Op::Exp: r = std::exp(a); break;
    default: return nan;
  }
  return std::isfinite(r) ? r : nan;
}

double op_partial(Op op, int which, double a, double b) noexcept {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  switch (op) {
    case Op::Add: return 1.0;
    case Op::Sub: return which == 0 ? 1.0 : -1.0;
    case Op::Mul: return which == 0 ? b : a;
    case Op::Div:
      if (b == 0.0) return nan;
      return which == 0 ? 1.0 / b : -a / (b * b);
    case Op::Sqrt: return a > 0.0 ? 0.5 / std::sqrt(a) : nan;
    case Op::Square: return 2.0 * a;
    case Op::Cube: return 3.0 * a * a;
    case Op::Sin: return std::cos(a);
    case Op::Cos: return -std::sin(a);
    case Op::Log: return a > 0.0 ? 1.0 / a : nan;
    case Op::Exp: return std::exp(a);
  }
  return nan;
}

namespace {

double terminal_value(const ExprTree::Node& node, std::span<const double> x) {
  if (node.kind == NodeKind::Variable) return x[node.code];
  return constant_table()[node.code].value;
}

}  // namespace

EvalResult evaluate(const ExprTree& tree, std::span<const double> x) {
  if (tree.max_variable_index() >= static_cast<int>(x.size())) {
    throw std::invalid_argument("data point has fewer inputs than the tree references");
  }
  std::vector<double> stack;
  stack.reserve(tree.size());
  const auto nodes = tree.nodes();
  for (auto it = nodes.rbegin(); it != nodes.rend(); ++it) {
    if (it->kind != NodeKind::Apply) {
      stack.push_back(terminal_value(*it, x));
      continue;
    }
    const Op op = static_cast<Op>(it->code);
    if (arity(op) == 1) {
      stack.back() = apply_op(op, stack.back());
    } else {
      const double left = stack.back();
      stack.pop_back();
      stack.back() = apply_op(op, left, stack.back());
    }
  }
  if (stack.empty() || is_undefined(stack.back())) return std::nullopt;
  return stack.back();
}

std::vector<double> evaluate_all(const ExprTree& tree, std::span<const DataPoint> dataset) {
  const std::size_t n = dataset.size();
  if (tree.empty() || n == 0) return std::vector<double>(n, std::numeric_limits<double>::quiet_NaN());
  const int max_var = tree.max_variable_index();
  for (const auto& p : dataset) {
    if (static_cast<int>(p.x.size()) <= max_var) {
      throw std::invalid_argument("data point has fewer inputs than the tree references");
    }
  }
  // Column stack: slot s occupies [s*n, (s+1)*n).
  std::vector<double> arena(tree.size() * n);
  std::size_t top = 0;
  const auto nodes = tree.nodes();
  for (auto it = nodes.rbegin(); it != nodes.rend(); ++it) {
    if (it->kind == NodeKind::Variable) {
      double* dst = arena.data() + top * n;
      for (std::size_t j = 0; j < n; ++j) dst[j] = dataset[j].x[it->code];
      ++top;
    } else if (it->kind == NodeKind::Constant) {
      std::fill_n(arena.data() + top * n, n, constant_table()[it->code].value);
      ++top;
    } else {
      const Op op = static_cast<Op>(it->code);
      if (arity(op) == 1) {
        double* a = arena.data() + (top - 1) * n;
        for (std::size_t j = 0; j < n; ++j) a[j] = apply_op(op, a[j]);
      } else {
        // Left operand is on top (it was pushed last in the reverse scan).
        double* right = arena.data() + (top - 2) * n;
        const double* left = arena.data() + (top - 1) * n;
        for (std::size_t j = 0; j < n; ++j) right[j] = apply_op(op, left[j], right[j]);
        --top;
      }
    }
  }
  return {arena.begin(), arena.begin() + static_cast<std::ptrdiff_t>(n)};
}

std::vector<double> evaluate_nodes(const ExprTree& tree, std::span<const double> x) {
  std::vector<double> values(tree.size());
  const auto nodes = tree.nodes();
  std::vector<std::size_t> stack;
  stack.reserve(tree.size());
  for (std::size_t r = nodes.size(); r-- > 0;) {
    const auto& node = nodes[r];
    if (node.kind != NodeKind::Apply) {
      values[r] = terminal_value(node, x);
    } else {
      const Op op = static_cast<Op>(node.code);
      if (arity(op) == 1) {
        values[r] = apply_op(op, values[stack.back()]);
        stack.pop_back();
      } else {
        const std::size_t left = stack.back();
        stack.pop_back();
        const std::size_t right = stack.back();
        stack.pop_back();
        values[r] = apply_op(op, values[left], values[right]);
      }
    }
    stack.push_back(r);
  }
  return values;
}

double mse(const ExprTree& tree, std::span<const DataPoint> dataset) {
  if (dataset.empty()) throw std::invalid_argument("mse needs a non-empty dataset");
  const auto out = evaluate_all(tree, dataset);
  double sum = 0.0;
  for (std::size_t j = 0; j < out.size(); ++j) {
    if (is_undefined(out[j])) return kWorstFitness;
    const double r = out[j] - dataset[j].y;
    sum += r * r;
  }
  const double m = sum / static_cast<double>(dataset.size());
  return std::isfinite(m) ? m : kWorstFitness;
}

// ---------------------------------------------------------------------------
// Random trees

namespace {

void grow_into(std::vector<ExprTree::Node>& out, const Dsl& dsl, int arity_vars, int depth, int height,
               GrowMethod method, Rng& rng) {
  const auto ops = dsl.operators();
  const auto consts = dsl.constants();
  const std::size_t n_terminals = static_cast<std::size_t>(arity_vars) + consts.size();
  auto push_terminal = [&] {
    std::uniform_int_distribution<std::size_t> pick(0, n_terminals - 1);
    const std::size_t t = pick(rng);
    if (t < static_cast<std::size_t>(arity_vars)) {
      out.push_back({NodeKind::Variable, static_cast<std::uint8_t>(t)});
    } else {
      out.push_back({NodeKind::Constant, static_cast<std::uint8_t>(consts[t - arity_vars])});
    }
  };
  if (depth >= height) {
    push_terminal();
    return;
  }
  std::size_t choice;
  if (method == GrowMethod::Full) {
    choice = std::uniform_int_distribution<std::size_t>(0, ops.size() - 1)(rng);
  } else {
    choice = std::uniform_int_distribution<std::size_t>(0, ops.size() + n_terminals - 1)(rng);
    if (choice >= ops.size()) {
      // Uniform over the union; re-draw the terminal uniformly (same distribution).
      push_terminal();
      return;
    }
  }
  const Op op = ops[choice];
  out.push_back({NodeKind::Apply, static_cast<std::uint8_t>(op)});
  for (int c = 0; c < arity(op); ++c) grow_into(out, dsl, arity_vars, depth + 1, height, method, rng);
}

}  // namespace

ExprTree random_tree(const Dsl& dsl, int arity_vars, int height, GrowMethod method, Rng& rng) {
  if (height < 0) throw std::invalid_argument("height must be non-negative");
  if (arity_vars < 1 || arity_vars > dsl.max_variables()) throw std::invalid_argument("arity out of range");
  std::vector<ExprTree::Node> nodes;
  grow_into(nodes, dsl, arity_vars, 0, height, method, rng);
  return ExprTree::from_nodes(std::move(nodes));
}

}  // namespace evonudge
