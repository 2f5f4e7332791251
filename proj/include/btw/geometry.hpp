#pragma once

// Coordinate spaces shared by every stage of the mirror pipeline:
//
//   document  CSS px, origin at the document top-left (PagePoint, RegionRect)
//   viewport  CSS px, origin at the visible top-left (ViewportPoint)
//   frame     integer device px inside a captured bitmap (FrameRect)
//   panel     normalized [0,1]^2, origin at the panel top-left (UnitPoint)

#include <optional>

namespace btw::core {

struct PagePoint {
  double x = 0;
  double y = 0;

  bool operator==(const PagePoint&) const = default;
};

struct RegionRect {
  double x = 0;
  double y = 0;
  double w = 0;
  double h = 0;

  bool operator==(const RegionRect&) const = default;

  // w > 0, h > 0 and all components finite.
  bool valid() const;
};

struct ViewportPoint {
  double x = 0;
  double y = 0;

  bool operator==(const ViewportPoint&) const = default;
};

struct UnitPoint {
  double u = 0;
  double v = 0;

  bool operator==(const UnitPoint&) const = default;

  bool valid() const;
};

struct ViewportMetrics {
  double scroll_x = 0;
  double scroll_y = 0;
  double viewport_w = 1280;
  double viewport_h = 800;
  double device_scale = 1;
  double document_w = 1280;
  double document_h = 800;

  bool operator==(const ViewportMetrics&) const = default;

  double max_scroll_x() const;
  double max_scroll_y() const;

  // Captured bitmap size in device px: viewport * device_scale, rounded.
  int frame_width() const;
  int frame_height() const;
};

struct FrameRect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  bool operator==(const FrameRect&) const = default;

  bool empty() const { return w <= 0 || h <= 0; }
  bool contained_in(int width, int height) const {
    return x >= 0 && y >= 0 && w >= 0 && h >= 0 && x + w <= width &&
           y + h <= height;
  }
};

struct ViewportHit {
  ViewportPoint point;
  bool visible = false;
};

// Throws Error{kInvalidInput} when p is outside the unit square or r is
// degenerate.
PagePoint panel_local_to_doc(UnitPoint p, const RegionRect& r);

// Inverse of panel_local_to_doc for points inside r.
UnitPoint doc_to_panel_local(PagePoint p, const RegionRect& r);

// Visibility uses the closed viewport rectangle [0, w] x [0, h] so that the
// far edge of a full-viewport region stays addressable.
ViewportHit doc_to_viewport(PagePoint p, const ViewportMetrics& m);

// Region (document space) -> integer crop inside the captured frame. Origin
// rounds down and the far edge rounds up; the result is clipped to the frame.
std::optional<FrameRect> crop_rect_in_frame(const RegionRect& r,
                                            const ViewportMetrics& m);

// Same, for a rect already expressed in viewport coordinates (fixed bars).
std::optional<FrameRect> crop_viewport_rect_in_frame(const RegionRect& r,
                                                     const ViewportMetrics& m);

// Scroll offsets clamped to [0, document - viewport] per axis.
ViewportMetrics clamp_scroll(ViewportMetrics m, double scroll_x,
                             double scroll_y);

}  // namespace btw::core
