#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace evonudge {

// The fixed instruction set. Enumerator values double as one-hot feature slots.
enum class Op : std::uint8_t { Add, Sub, Mul, Div, Sqrt, Square, Cube, Sin, Cos, Log, Exp };

inline constexpr int kNumOps = 11;
inline constexpr int kMaxVariables = 10;

constexpr int arity(Op op) noexcept { return op <= Op::Div ? 2 : 1; }

std::string_view symbol(Op op) noexcept;
std::optional<Op> op_from_symbol(std::string_view text) noexcept;

struct Constant {
  std::string_view name;
  double value;
};

// Constants available to every DSL; trees store an index into this table.
const std::array<Constant, 5>& constant_table() noexcept;
std::optional<int> constant_from_name(std::string_view text) noexcept;

// Enabled operators and constants plus the maximum number of input variables.
class Dsl {
 public:
  Dsl(std::vector<Op> operators, std::vector<int> constants, int max_variables);

  // + - * / sqrt sq cube sin cos log exp over constants 0 1 2 3 pi, up to 6 variables.
  static const Dsl& standard();

  std::span<const Op> operators() const noexcept { return operators_; }
  std::span<const int> constants() const noexcept { return constants_; }
  int max_variables() const noexcept { return max_variables_; }
  bool enabled(Op op) const noexcept;

 private:
  std::vector<Op> operators_;
  std::vector<int> constants_;
  int max_variables_;
};

}  // namespace evonudge
