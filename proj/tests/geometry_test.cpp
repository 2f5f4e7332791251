#include <random>

#include "doctest.h"
#include "btw/error.hpp"
#include "btw/geometry.hpp"
#include "oracles.hpp"

using namespace btw::core;

TEST_CASE("panel_local_to_doc maps corners and midpoint") {
  const RegionRect r{100, 200, 400, 300};
  CHECK(panel_local_to_doc({0, 0}, r) == PagePoint{100, 200});
  CHECK(panel_local_to_doc({0.5, 0.5}, r) == PagePoint{300, 350});
  CHECK(panel_local_to_doc({1, 1}, {0, 0, 1280, 800}) == PagePoint{1280, 800});
}

TEST_CASE("panel_local_to_doc rejects points outside the unit square") {
  const RegionRect r{0, 0, 10, 10};
  for (UnitPoint p : {UnitPoint{-0.01, 0.5}, UnitPoint{0.5, 1.0001},
                      UnitPoint{std::nan(""), 0}}) {
    try {
      panel_local_to_doc(p, r);
      FAIL("expected invalid-input");
    } catch (const btw::Error& e) {
      CHECK(e.code() == btw::ErrorCode::kInvalidInput);
    }
  }
  CHECK_THROWS_AS(panel_local_to_doc({0.5, 0.5}, {0, 0, 0, 10}), btw::Error);
}

TEST_CASE("doc_to_panel_local inverts panel_local_to_doc") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(0, 1), pos(-500, 500),
      size(1, 900);
  for (int i = 0; i < 1000; ++i) {
    RegionRect r{pos(rng), pos(rng), size(rng), size(rng)};
    UnitPoint p{unit(rng), unit(rng)};
    UnitPoint back = doc_to_panel_local(panel_local_to_doc(p, r), r);
    CHECK(back.u == doctest::Approx(p.u).epsilon(1e-12));
    CHECK(back.v == doctest::Approx(p.v).epsilon(1e-12));
  }
}

TEST_CASE("doc_to_viewport subtracts scroll and reports visibility") {
  ViewportMetrics m;
  auto hit = doc_to_viewport({300, 350}, m);
  CHECK(hit.point == ViewportPoint{300, 350});
  CHECK(hit.visible);

  m.scroll_y = 400;
  hit = doc_to_viewport({300, 350}, m);
  CHECK(hit.point == ViewportPoint{300, -50});
  CHECK_FALSE(hit.visible);

  ViewportMetrics small{25, 25, 100, 100, 1, 1000, 1000};
  hit = doc_to_viewport({50, 50}, small);
  CHECK(hit.point == ViewportPoint{25, 25});
  CHECK(hit.visible);
}

TEST_CASE("doc_to_viewport visibility matches a point-in-rect scan") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> coord(-50, 250), scroll(0, 100);
  for (int i = 0; i < 2000; ++i) {
    ViewportMetrics m{double(scroll(rng)), double(scroll(rng)), 100, 80, 1,
                      400, 400};
    PagePoint p{double(coord(rng)), double(coord(rng))};
    const double vx = p.x - m.scroll_x, vy = p.y - m.scroll_y;
    bool inside = false;
    for (int x = 0; x <= 100 && !inside; ++x) {
      for (int y = 0; y <= 80 && !inside; ++y) inside = (x == vx && y == vy);
    }
    CHECK(doc_to_viewport(p, m).visible == inside);
  }
}

TEST_CASE("crop_rect_in_frame examples") {
  ViewportMetrics m;
  CHECK(crop_rect_in_frame({0, 0, 100, 100}, m) == FrameRect{0, 0, 100, 100});
  m.device_scale = 2;
  CHECK(crop_rect_in_frame({0, 0, 100, 100}, m) == FrameRect{0, 0, 200, 200});
  m.device_scale = 1;
  CHECK_FALSE(crop_rect_in_frame({0, 900, 100, 100}, m).has_value());
  // Partially visible regions are clipped.
  CHECK(crop_rect_in_frame({1200, 700, 200, 200}, m) ==
        FrameRect{1200, 700, 80, 100});
}

TEST_CASE("crop_rect_in_frame matches the overlapping-pixel oracle") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> pos(-200, 700), size(0.25, 400),
      scroll(0, 300);
  std::uniform_int_distribution<int> scale_pick(0, 2);
  const double scales[] = {1, 2, 1.5};
  for (int i = 0; i < 500; ++i) {
    ViewportMetrics m{scroll(rng), scroll(rng), 320, 240,
                      scales[scale_pick(rng)], 2000, 3000};
    RegionRect r{pos(rng), pos(rng), size(rng), size(rng)};
    CHECK(crop_rect_in_frame(r, m) == oracle::doc_region_crop(r, m));
    CHECK(crop_viewport_rect_in_frame(r, m) ==
          oracle::overlapping_pixels(r.x, r.y, r.x + r.w, r.y + r.h, m));
  }
}

TEST_CASE("clamp_scroll keeps offsets inside the document") {
  ViewportMetrics m{0, 0, 1280, 800, 1, 2000, 3000};
  CHECK(clamp_scroll(m, -5, 99999).scroll_x == 0);
  CHECK(clamp_scroll(m, -5, 99999).scroll_y == 2200);
  CHECK(clamp_scroll(m, 900, 10).scroll_x == 720);
  ViewportMetrics tiny{0, 0, 1280, 800, 1, 100, 100};
  CHECK(clamp_scroll(tiny, 50, 50).scroll_x == 0);
}

TEST_CASE("frame size rounds viewport times scale") {
  ViewportMetrics m{0, 0, 1280, 800, 1.5, 2000, 3000};
  CHECK(m.frame_width() == 1920);
  CHECK(m.frame_height() == 1200);
}
