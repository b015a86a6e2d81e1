#include "evonudge/dsl.hpp"

#include <algorithm>
#include <numbers>
#include <stdexcept>
#include <string>

namespace evonudge {

namespace {

constexpr std::array<std::string_view, kNumOps> kSymbols = {
    "+", "-", "*", "/", "sqrt", "sq", "cube", "sin", "cos", "log", "exp"};

}  // namespace

std::string_view symbol(Op op) noexcept { return kSymbols[static_cast<std::size_t>(op)]; }

std::optional<Op> op_from_symbol(std::string_view text) noexcept {
  for (std::size_t i = 0; i < kSymbols.size(); ++i) {
    if (kSymbols[i] == text) return static_cast<Op>(i);
  }
  return std::nullopt;
}

const std::array<Constant, 5>& constant_table() noexcept {
  static const std::array<Constant, 5> table = {{
      {"0", 0.0},
      {"1", 1.0},
      {"2", 2.0},
      {"3", 3.0},
      {"pi", std::numbers::pi},
  }};
  return table;
}

std::optional<int> constant_from_name(std::string_view text) noexcept {
  const auto& table = constant_table();
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (table[i].name == text) return static_cast<int>(i);
  }
  return std::nullopt;
}

Dsl::Dsl(std::vector<Op> operators, std::vector<int> constants, int max_variables)
    : operators_(std::move(operators)), constants_(std::move(constants)), max_variables_(max_variables) {
  if (operators_.empty()) throw std::invalid_argument("DSL needs at least one operator");
  if (constants_.empty()) throw std::invalid_argument("DSL needs at least one constant");
  if (max_variables_ < 1 || max_variables_ > kMaxVariables) {
    throw std::invalid_argument("DSL variable count must be in [1, " + std::to_string(kMaxVariables) + "]");
  }
  auto ops = operators_;
  std::sort(ops.begin(), ops.end());
  if (std::adjacent_find(ops.begin(), ops.end()) != ops.end()) {
    throw std::invalid_argument("duplicate operator in DSL");
  }
  auto consts = constants_;
  std::sort(consts.begin(), consts.end());
  if (std::adjacent_find(consts.begin(), consts.end()) != consts.end()) {
    throw std::invalid_argument("duplicate constant in DSL");
  }
  for (int c : constants_) {
    if (c < 0 || c >= static_cast<int>(constant_table().size())) {
      throw std::invalid_argument("unknown constant index in DSL");
    }
  }
}

const Dsl& Dsl::standard() {
  static const Dsl dsl(
      {Op::Add, Op::Sub, Op::Mul, Op::Div, Op::Sqrt, Op::Square, Op::Cube, Op::Sin, Op::Cos, Op::Log, Op::Exp},
      {0, 1, 2, 3, 4}, kMaxVariables);
  return dsl;
}

bool Dsl::enabled(Op op) const noexcept {
  return std::find(operators_.begin(), operators_.end(), op) != operators_.end();
}

}  // namespace evonudge
