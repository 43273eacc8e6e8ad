#include "sosvn/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

#include "sosvn/container.hpp"

namespace sosvn {

std::uint8_t window_pixel(double value, const Window& w) {
  if (!(w.hi > w.lo)) throw std::invalid_argument("window minimum must be below its maximum");
  const double t = std::clamp((value - w.lo) / (w.hi - w.lo), 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(255.0 * t));
}

GrayImage render_map(std::span<const double> values, const Grid& grid, const Window& w) {
  if (values.size() != grid.cells()) throw std::invalid_argument("map size does not match the grid");
  GrayImage img{grid.n_x, grid.n_z, std::vector<std::uint8_t>(values.size())};
  for (std::size_t i = 0; i < values.size(); ++i) img.pixels[i] = window_pixel(values[i], w);
  return img;
}

GrayImage montage(std::span<const GrayImage> panels, int gap) {
  if (panels.empty()) throw std::invalid_argument("montage needs at least one panel");
  GrayImage out;
  for (const auto& p : panels) {
    out.height = std::max(out.height, p.height);
    out.width += p.width;
  }
  out.width += gap * static_cast<int>(panels.size() - 1);
  out.pixels.assign(static_cast<std::size_t>(out.width) * out.height, 0);
  int x0 = 0;
  for (const auto& p : panels) {
    for (int r = 0; r < p.height; ++r)
      std::copy_n(p.pixels.begin() + static_cast<std::size_t>(r) * p.width, p.width,
                  out.pixels.begin() + static_cast<std::size_t>(r) * out.width + x0);
    x0 += p.width + gap;
  }
  return out;
}

void write_pgm(const std::filesystem::path& file, const GrayImage& img) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (!out) throw std::runtime_error("write failed: " + file.string());
}

GrayImage read_pgm(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw MissingFileError("cannot open " + file.string());
  std::string magic;
  int maxval = 0;
  GrayImage img;
  in >> magic >> img.width >> img.height >> maxval;
  if (magic != "P5" || maxval != 255 || img.width <= 0 || img.height <= 0)
    throw std::runtime_error("not an 8-bit binary PGM: " + file.string());
  in.get();
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (!in) throw std::runtime_error("truncated PGM: " + file.string());
  return img;
}

}  // namespace sosvn
