#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "sosvn/grid.hpp"

namespace sosvn {

struct Window {
  double lo = 1470.0;  // m/s mapped to 0
  double hi = 1530.0;  // m/s mapped to 255
};

/// Linear windowing with clamping to 8 bits.
std::uint8_t window_pixel(double value, const Window& w);

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major, top row first
};

/// Map image: depth runs down the rows, lateral position across the columns.
GrayImage render_map(std::span<const double> values, const Grid& grid, const Window& w);
/// Side-by-side montage with a `gap` column of zeros between panels.
GrayImage montage(std::span<const GrayImage> panels, int gap = 2);

void write_pgm(const std::filesystem::path& file, const GrayImage& img);
GrayImage read_pgm(const std::filesystem::path& file);

}  // namespace sosvn
