#include "evonudge/problem.hpp"

#include <stdexcept>
#include <string>

namespace evonudge {

std::string_view split_name(Split split) noexcept {
  switch (split) {
    case Split::Train: return "train";
    case Split::Validation: return "validation";
    case Split::Test: return "test";
    case Split::External: return "external";
  }
  return "external";
}

Split split_from_name(std::string_view name) {
  if (name == "train") return Split::Train;
  if (name == "validation") return Split::Validation;
  if (name == "test") return Split::Test;
  if (name == "external") return Split::External;
  throw std::invalid_argument("unknown split '" + std::string(name) + "'");
}

}  // namespace evonudge
