#include <array>
#include <numbers>

#include "sosvn/phantoms.hpp"

namespace sosvn {

namespace {

struct Row {
  bool circle;
  double z_mm, x_mm;
  double a_mm, b_mm;  // radius, or rectangle half depth / half width
  double angle_deg;
  double contrast_pct;
  double background;
  double variation_pct;
  double blur_mm;
};

// Depth, size, edge smoothness, contrast sign and level, background level
// and tilt are varied across the table; rectangles also vary orientation.
constexpr std::array<Row, 32> kSuite{{
    {true, 10, 19.2, 3, 0, 0, 5, 1507, 0, 0},     {true, 10, 10, 4, 0, 0, -5, 1500, 0, 0},
    {true, 12, 28, 5, 0, 0, 3, 1515, 0, 1},       {true, 15, 19.2, 6, 0, 0, -3, 1495, 0.3, 0},
    {true, 15, 12, 2.5, 0, 0, 8, 1507, 0, 0},     {true, 18, 26, 4, 0, 0, -8, 1520, 0, 1},
    {true, 20, 19.2, 7, 0, 0, 2, 1507, 0.3, 0},   {true, 20, 9, 3, 0, 0, -2, 1490, 0, 1},
    {true, 22, 30, 5, 0, 0, 6, 1510, 0.3, 0},     {true, 25, 19.2, 4, 0, 0, -6, 1507, 0, 0},
    {true, 25, 14, 6, 0, 0, 4, 1500, 0, 1},       {true, 25, 25, 3, 0, 0, -4, 1525, 0.3, 0},
    {true, 28, 19.2, 5, 0, 0, 10, 1507, 0, 0},    {true, 28, 10, 4, 0, 0, -10, 1505, 0, 1},
    {true, 30, 28, 7, 0, 0, 5, 1495, 0.3, 1},     {true, 30, 19.2, 2.5, 0, 0, -5, 1507, 0, 0},
    {true, 32, 12, 5, 0, 0, 3, 1515, 0, 0},       {true, 33, 26, 4, 0, 0, -3, 1507, 0.3, 1},
    {true, 35, 19.2, 6, 0, 0, 7, 1500, 0, 0},     {true, 36, 9, 3, 0, 0, -7, 1510, 0, 1},
    {true, 38, 29, 5, 0, 0, 2, 1507, 0.3, 0},     {true, 40, 19.2, 7, 0, 0, -2, 1490, 0, 0},
    {true, 40, 14, 4, 0, 0, 6, 1520, 0, 1},       {true, 42, 24, 3, 0, 0, -6, 1507, 0.3, 0},
    {true, 44, 19.2, 5, 0, 0, 4, 1507, 0, 1},     {true, 45, 10, 6, 0, 0, -4, 1500, 0.3, 0},
    {true, 46, 28, 4, 0, 0, 9, 1512, 0, 0},       {true, 47, 19.2, 2.5, 0, 0, -9, 1507, 0, 1},
    {false, 15, 19.2, 3, 6, 0, 5, 1507, 0, 0},    {false, 25, 19.2, 4, 4, 30, -5, 1500, 0, 0},
    {false, 35, 15, 2.5, 8, 60, 3, 1515, 0, 1},   {false, 40, 24, 5, 3, 90, -3, 1507, 0.3, 0},
}};

}  // namespace

std::vector<PrimitiveSpec> default_test_suite() {
  std::vector<PrimitiveSpec> out;
  out.reserve(kSuite.size());
  for (const Row& r : kSuite) {
    PrimitiveSpec s;
    s.kind = r.circle ? PrimitiveKind::circle : PrimitiveKind::rectangle;
    s.center = {r.z_mm * 1e-3, r.x_mm * 1e-3};
    if (r.circle) {
      s.radius = r.a_mm * 1e-3;
    } else {
      s.half_depth = r.a_mm * 1e-3;
      s.half_width = r.b_mm * 1e-3;
    }
    s.angle = r.angle_deg * std::numbers::pi / 180.0;
    s.contrast = r.contrast_pct * 1e-2;
    s.background = r.background;
    s.background_variation = r.variation_pct * 1e-2;
    s.blur_sigma = r.blur_mm * 1e-3;
    out.push_back(s);
  }
  return out;
}

}  // namespace sosvn
