#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evonudge/expr.hpp"

namespace evonudge {

struct LibraryEntry {
  ExprTree expr;
  int height = 0;
  bool operator==(const LibraryEntry&) const = default;
};

// Ordered, semantically distinct subexpressions extracted from a search graph.
class Library {
 public:
  Library() = default;
  explicit Library(std::vector<LibraryEntry> entries, std::string source = {});

  std::span<const LibraryEntry> entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const std::string& source() const noexcept { return source_; }
  void set_source(std::string source) { source_ = std::move(source); }

  // Indices of entries with exactly this height; empty when there are none.
  std::span<const std::size_t> with_height(int height) const noexcept;
  int max_height() const noexcept { return static_cast<int>(by_height_.size()) - 1; }

 private:
  std::vector<LibraryEntry> entries_;
  std::string source_;
  std::vector<std::vector<std::size_t>> by_height_;
};

// JSON array of {"expr": <prefix text>, "height": <int>}.
std::string library_to_json(const Library& library);
Library library_from_json(std::string_view json, std::string source = {});

}  // namespace evonudge
