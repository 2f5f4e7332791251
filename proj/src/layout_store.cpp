#include "btw/layout_store.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>
#include <sstream>

#include "btw/error.hpp"

namespace btw::layout {

LayoutStore LayoutStore::with_builtins() {
  LayoutStore store;
  for (const auto& doc : builtin_presets()) store.put(doc);
  return store;
}

LayoutStore::LayoutStore(const LayoutStore& other) {
  std::shared_lock lock(other.mu_);
  docs_ = other.docs_;
}

LayoutStore& LayoutStore::operator=(const LayoutStore& other) {
  if (this == &other) return *this;
  std::map<std::string, LayoutDocument, std::less<>> copy;
  {
    std::shared_lock lock(other.mu_);
    copy = other.docs_;
  }
  std::unique_lock lock(mu_);
  docs_ = std::move(copy);
  return *this;
}

void LayoutStore::put(LayoutDocument doc) {
  validate(doc);
  std::unique_lock lock(mu_);
  std::string name = doc.name;
  docs_.insert_or_assign(std::move(name), std::move(doc));
}

LayoutDocument load_layout_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kNotFound, "cannot open " + file.string());
  }
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return parse_layout(text.str());
  } catch (const ValidationError& e) {
    throw ValidationError(file.filename().string() + ":" + e.path(),
                          e.detail());
  }
}

std::size_t LayoutStore::load_directory(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() &&
        entry.path().extension() == kLayoutExtension) {
      files.push_back(entry.path());
    }
  }
  // Directory order is unspecified; later files win name clashes.
  std::sort(files.begin(), files.end());
  for (const auto& f : files) put(load_layout_file(f));
  return files.size();
}

std::optional<LayoutDocument> LayoutStore::get(std::string_view name) const {
  std::shared_lock lock(mu_);
  auto it = docs_.find(name);
  if (it == docs_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> LayoutStore::names() const {
  std::shared_lock lock(mu_);
  std::vector<std::string> out;
  for (const auto& [name, doc] : docs_) out.push_back(name);
  return out;
}

std::size_t LayoutStore::size() const {
  std::shared_lock lock(mu_);
  return docs_.size();
}

std::optional<LayoutDocument> LayoutStore::match(std::string_view url) const {
  std::shared_lock lock(mu_);
  const LayoutDocument* best = nullptr;
  std::size_t best_len = 0;
  // docs_ iterates in name order, so the first of equal length wins.
  for (const auto& [name, doc] : docs_) {
    if (!site_matches(doc.site_pattern, url)) continue;
    std::size_t len = literal_length(doc.site_pattern);
    if (!best || len > best_len) {
      best = &doc;
      best_len = len;
    }
  }
  if (!best) return std::nullopt;
  return *best;
}

std::optional<LayoutDocument> match_layout(std::string_view url,
                                           const LayoutStore& store) {
  return store.match(url);
}

}  // namespace btw::layout
