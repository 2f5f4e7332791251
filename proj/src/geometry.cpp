#include "btw/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "btw/error.hpp"

namespace btw::core {

bool RegionRect::valid() const {
  return std::isfinite(x) && std::isfinite(y) && std::isfinite(w) &&
         std::isfinite(h) && w > 0 && h > 0;
}

bool UnitPoint::valid() const {
  return u >= 0 && u <= 1 && v >= 0 && v <= 1;  // NaN fails both
}

double ViewportMetrics::max_scroll_x() const {
  return std::max(0.0, document_w - viewport_w);
}

double ViewportMetrics::max_scroll_y() const {
  return std::max(0.0, document_h - viewport_h);
}

int ViewportMetrics::frame_width() const {
  return static_cast<int>(std::lround(viewport_w * device_scale));
}

int ViewportMetrics::frame_height() const {
  return static_cast<int>(std::lround(viewport_h * device_scale));
}

PagePoint panel_local_to_doc(UnitPoint p, const RegionRect& r) {
  if (!p.valid()) {
    throw Error(ErrorCode::kInvalidInput,
                "unit point (" + std::to_string(p.u) + ", " +
                    std::to_string(p.v) + ") outside the unit square");
  }
  if (!r.valid()) {
    throw Error(ErrorCode::kInvalidInput, "degenerate region");
  }
  return {r.x + p.u * r.w, r.y + p.v * r.h};
}

UnitPoint doc_to_panel_local(PagePoint p, const RegionRect& r) {
  return {(p.x - r.x) / r.w, (p.y - r.y) / r.h};
}

ViewportHit doc_to_viewport(PagePoint p, const ViewportMetrics& m) {
  ViewportPoint vp{p.x - m.scroll_x, p.y - m.scroll_y};
  bool visible = vp.x >= 0 && vp.x <= m.viewport_w && vp.y >= 0 &&
                 vp.y <= m.viewport_h;
  return {vp, visible};
}

namespace {

std::optional<FrameRect> to_frame(double left, double top, double right,
                                  double bottom, const ViewportMetrics& m) {
  const double s = m.device_scale;
  double x0 = std::floor(left * s);
  double y0 = std::floor(top * s);
  double x1 = std::ceil(right * s);
  double y1 = std::ceil(bottom * s);

  const double fw = m.frame_width();
  const double fh = m.frame_height();
  x0 = std::clamp(x0, 0.0, fw);
  y0 = std::clamp(y0, 0.0, fh);
  x1 = std::clamp(x1, 0.0, fw);
  y1 = std::clamp(y1, 0.0, fh);
  if (!(x1 > x0) || !(y1 > y0)) return std::nullopt;
  return FrameRect{static_cast<int>(x0), static_cast<int>(y0),
                   static_cast<int>(x1 - x0), static_cast<int>(y1 - y0)};
}

}  // namespace

std::optional<FrameRect> crop_rect_in_frame(const RegionRect& r,
                                            const ViewportMetrics& m) {
  return to_frame(r.x - m.scroll_x, r.y - m.scroll_y,
                  r.x + r.w - m.scroll_x, r.y + r.h - m.scroll_y, m);
}

std::optional<FrameRect> crop_viewport_rect_in_frame(const RegionRect& r,
                                                     const ViewportMetrics& m) {
  return to_frame(r.x, r.y, r.x + r.w, r.y + r.h, m);
}

ViewportMetrics clamp_scroll(ViewportMetrics m, double scroll_x,
                             double scroll_y) {
  m.scroll_x = std::clamp(scroll_x, 0.0, m.max_scroll_x());
  m.scroll_y = std::clamp(scroll_y, 0.0, m.max_scroll_y());
  return m;
}

}  // namespace btw::core
