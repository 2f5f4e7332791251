#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "btw/bitmap.hpp"
#include "btw/bridge.hpp"
#include "btw/geometry.hpp"
#include "btw/layout.hpp"

namespace btw::decomposer {

struct ResolvedPanel {
  std::string id;
  std::string display_name;
  // Document space for document anchoring, viewport space otherwise.
  core::RegionRect rect;
  layout::Anchoring anchoring = layout::Anchoring::kDocument;
  layout::Role role = layout::Role::kPrimaryContent;
  layout::PlacementHint placement;
  layout::InteractionHint interaction = layout::InteractionHint::kAuto;
  bool used_fallback = false;

  bool operator==(const ResolvedPanel&) const = default;
};

struct ResolvedLayout {
  std::string name;
  std::vector<ResolvedPanel> panels;

  const ResolvedPanel* find(std::string_view id) const;
};

struct PanelFrame {
  std::string panel_id;
  std::uint32_t source_seq = 0;
  Bitmap bitmap;  // empty when off_viewport
  core::FrameRect crop;
  bool off_viewport = false;
};

// Last emitted content hash per panel; one per session.
class DeltaCache {
 public:
  // True when the hash differs from the last one stored (and stores it).
  bool update(const std::string& panel_id, std::uint64_t hash);
  std::optional<std::uint64_t> last(const std::string& panel_id) const;
  void clear() { hashes_.clear(); }

 private:
  std::map<std::string, std::uint64_t, std::less<>> hashes_;
};

// Validates doc, then resolves selector regions through the bridge. Rect
// regions pass through without bridge calls. Throws Error{kResolution} naming
// the panel when a selector matches nothing and no fallback rect exists.
ResolvedLayout resolve_layout(const layout::LayoutDocument& doc,
                              bridge::BrowserBridge& bridge,
                              const bridge::PageHandle& handle);

// Bit-exact sub-rectangle copy. rect must lie inside src.
Bitmap crop_bitmap(const Bitmap& src, const core::FrameRect& rect);

// Crop hash used for delta suppression; covers dimensions and pixels. The
// two-argument form hashes rect of src in place and equals
// content_hash(crop_bitmap(src, rect)).
std::uint64_t content_hash(const Bitmap& bitmap);
std::uint64_t content_hash(const Bitmap& src, const core::FrameRect& rect);

// Every emitted PanelFrame carries f.seq. Panels whose content hash matches
// the cache are omitted.
std::vector<PanelFrame> decompose_frame(const bridge::SourceFrame& f,
                                        const ResolvedLayout& rl,
                                        DeltaCache& cache);

// Crop of one panel in f (nullopt when off-viewport); no caching.
std::optional<core::FrameRect> panel_crop(const ResolvedPanel& panel,
                                          const core::ViewportMetrics& m);

}  // namespace btw::decomposer
