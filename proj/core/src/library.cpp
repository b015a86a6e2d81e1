#include "evonudge/library.hpp"

#include <stdexcept>

#include <json.hpp>

namespace evonudge {

Library::Library(std::vector<LibraryEntry> entries, std::string source)
    : entries_(std::move(entries)), source_(std::move(source)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const int h = entries_[i].height;
    if (h < 0) throw std::invalid_argument("library entry with negative height");
    if (static_cast<std::size_t>(h) >= by_height_.size()) by_height_.resize(static_cast<std::size_t>(h) + 1);
    by_height_[static_cast<std::size_t>(h)].push_back(i);
  }
}

std::span<const std::size_t> Library::with_height(int height) const noexcept {
  if (height < 0 || static_cast<std::size_t>(height) >= by_height_.size()) return {};
  return by_height_[static_cast<std::size_t>(height)];
}

std::string library_to_json(const Library& library) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& e : library.entries()) out.push_back({{"expr", to_text(e.expr)}, {"height", e.height}});
  return out.dump(1);
}

Library library_from_json(std::string_view json, std::string source) {
  try {
    const auto doc = nlohmann::json::parse(json);
    if (!doc.is_array()) throw std::runtime_error("library file must hold a JSON array");
    std::vector<LibraryEntry> entries;
    entries.reserve(doc.size());
    for (const auto& item : doc) {
      ExprTree expr = parse_expr(item.at("expr").get<std::string>());
      const int height = item.contains("height") ? item.at("height").get<int>() : expr.height();
      if (height != expr.height()) throw std::runtime_error("library entry height does not match its expression");
      entries.push_back({std::move(expr), height});
    }
    return Library(std::move(entries), std::move(source));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("invalid library JSON: ") + e.what());
  }
}

}  // namespace evonudge
