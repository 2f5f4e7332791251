#include "btw/decomposer.hpp"

#include <algorithm>
#include <cstring>
#include <string>

#include "btw/error.hpp"
#include "btw/hash.hpp"

namespace btw::decomposer {

namespace {

// Hash recorded for a panel whose region is scrolled out, so the off-viewport
// notice is sent once rather than every frame.
constexpr std::uint64_t kOffViewportHash = 0x6f66662d76696577ull;

}  // namespace

const ResolvedPanel* ResolvedLayout::find(std::string_view id) const {
  for (const auto& p : panels) {
    if (p.id == id) return &p;
  }
  return nullptr;
}

bool DeltaCache::update(const std::string& panel_id, std::uint64_t hash) {
  auto it = hashes_.find(panel_id);
  if (it != hashes_.end() && it->second == hash) return false;
  hashes_.insert_or_assign(panel_id, hash);
  return true;
}

std::optional<std::uint64_t> DeltaCache::last(
    const std::string& panel_id) const {
  auto it = hashes_.find(panel_id);
  if (it == hashes_.end()) return std::nullopt;
  return it->second;
}

ResolvedLayout resolve_layout(const layout::LayoutDocument& doc,
                              bridge::BrowserBridge& bridge,
                              const bridge::PageHandle& handle) {
  layout::validate(doc);
  ResolvedLayout out;
  out.name = doc.name;
  std::optional<core::ViewportMetrics> metrics;
  for (const auto& spec : doc.panels) {
    ResolvedPanel p;
    p.id = spec.id;
    p.display_name = spec.display_name;
    p.anchoring = spec.anchoring;
    p.role = spec.role;
    p.placement = spec.placement;
    p.interaction = spec.interaction;
    if (spec.region.rect) {
      p.rect = *spec.region.rect;
    } else {
      try {
        p.rect = bridge.resolve_selector(handle, *spec.region.selector);
        if (spec.anchoring == layout::Anchoring::kViewport) {
          // Selector bounds are document space; a fixed element sits at the
          // same viewport offset whatever the scroll.
          if (!metrics) metrics = bridge.query_metrics(handle);
          p.rect.x -= metrics->scroll_x;
          p.rect.y -= metrics->scroll_y;
        }
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kNotFound) throw;
        if (!spec.region.fallback) {
          throw Error(ErrorCode::kResolution,
                      "panel '" + spec.id + "': selector '" +
                          *spec.region.selector + "' did not resolve");
        }
        p.rect = *spec.region.fallback;
        p.used_fallback = true;
      }
    }
    out.panels.push_back(std::move(p));
  }
  return out;
}

Bitmap crop_bitmap(const Bitmap& src, const core::FrameRect& rect) {
  if (!rect.contained_in(src.width, src.height)) {
    throw Error(ErrorCode::kInternal, "crop rect outside source bitmap");
  }
  Bitmap out(rect.w, rect.h);
  const std::size_t row_bytes = std::size_t(rect.w) * 4;
  for (int y = 0; y < rect.h; ++y) {
    std::memcpy(out.pixel(0, y), src.pixel(rect.x, rect.y + y), row_bytes);
  }
  return out;
}

std::uint64_t content_hash(const Bitmap& src, const core::FrameRect& rect) {
  if (!rect.contained_in(src.width, src.height)) {
    throw Error(ErrorCode::kInternal, "hash rect outside source bitmap");
  }
  Fnv1a64 h;
  h.update_u64(static_cast<std::uint64_t>(rect.w));
  h.update_u64(static_cast<std::uint64_t>(rect.h));
  const std::size_t row_bytes = std::size_t(rect.w) * 4;
  for (int y = 0; y < rect.h; ++y) {
    h.update_words({src.pixel(rect.x, rect.y + y), row_bytes});
  }
  return h.digest();
}

std::uint64_t content_hash(const Bitmap& bitmap) {
  return content_hash(bitmap, {0, 0, bitmap.width, bitmap.height});
}

std::optional<core::FrameRect> panel_crop(const ResolvedPanel& panel,
                                          const core::ViewportMetrics& m) {
  if (panel.anchoring == layout::Anchoring::kViewport) {
    return core::crop_viewport_rect_in_frame(panel.rect, m);
  }
  return core::crop_rect_in_frame(panel.rect, m);
}

std::vector<PanelFrame> decompose_frame(const bridge::SourceFrame& f,
                                        const ResolvedLayout& rl,
                                        DeltaCache& cache) {
  std::vector<PanelFrame> out;
  for (const auto& panel : rl.panels) {
    PanelFrame pf;
    pf.panel_id = panel.id;
    pf.source_seq = f.seq;
    auto crop = panel_crop(panel, f.metrics);
    // The bitmap is authoritative for the frame bounds.
    if (crop && !crop->contained_in(f.bitmap.width, f.bitmap.height)) {
      const int x1 = std::min(crop->x + crop->w, f.bitmap.width);
      const int y1 = std::min(crop->y + crop->h, f.bitmap.height);
      crop->w = x1 - crop->x;
      crop->h = y1 - crop->y;
      if (crop->empty()) crop.reset();
    }
    std::uint64_t hash = kOffViewportHash;
    if (crop) {
      pf.crop = *crop;
      hash = content_hash(f.bitmap, *crop);
    } else {
      pf.off_viewport = true;
    }
    if (!cache.update(panel.id, hash)) continue;
    if (crop) pf.bitmap = crop_bitmap(f.bitmap, *crop);
    out.push_back(std::move(pf));
  }
  return out;
}

}  // namespace btw::decomposer
