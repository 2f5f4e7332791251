#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "btw/layout.hpp"

namespace btw::layout {

inline constexpr std::string_view kLayoutExtension = ".btwlayout";

// Named layouts: built-in presets plus any loaded from disk. A loaded layout
// replaces a built-in of the same name. Reads may run concurrently; writes are
// exclusive.
class LayoutStore {
 public:
  LayoutStore() = default;

  static LayoutStore with_builtins();

  LayoutStore(const LayoutStore& other);
  LayoutStore& operator=(const LayoutStore& other);

  // Validates, then inserts or replaces by name.
  void put(LayoutDocument doc);

  // Loads every *.btwlayout file in dir. Throws ValidationError with the file
  // name prefixed to the path on the first bad document.
  std::size_t load_directory(const std::filesystem::path& dir);

  std::optional<LayoutDocument> get(std::string_view name) const;
  std::vector<std::string> names() const;
  std::size_t size() const;

  // Best match by site_pattern: longest literal pattern, then lexicographic
  // name.
  std::optional<LayoutDocument> match(std::string_view url) const;

 private:
  mutable std::shared_mutex mu_;
  std::map<std::string, LayoutDocument, std::less<>> docs_;
};

std::optional<LayoutDocument> match_layout(std::string_view url,
                                           const LayoutStore& store);

LayoutDocument load_layout_file(const std::filesystem::path& file);

}  // namespace btw::layout
