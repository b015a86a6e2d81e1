#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evonudge/expr.hpp"

namespace evonudge {

enum class Split { Train, Validation, Test, External };

std::string_view split_name(Split split) noexcept;
Split split_from_name(std::string_view name);

// A symbolic-regression instance. `test` holds the held-out sample used to judge success;
// when it is empty, the training dataset stands in.
struct Problem {
  std::string id;
  int arity = 1;
  std::optional<ExprTree> target;
  std::vector<DataPoint> dataset;
  std::vector<DataPoint> test;
  Split split = Split::External;

  std::span<const DataPoint> test_or_train() const noexcept { return test.empty() ? dataset : test; }
};

}  // namespace evonudge
