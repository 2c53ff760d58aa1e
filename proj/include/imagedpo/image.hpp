#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace imagedpo {

// Grayscale raster, row-major doubles in [0, 1].
struct ImageGrid {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;

  ImageGrid() = default;
  ImageGrid(int w, int h, double value = 0.0);

  double at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  double& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }

  bool same_pixels(const ImageGrid& other) const;  // bitwise comparison
};

void validate_image(const ImageGrid& img);

/// Mean over the half-open pixel rectangle [x0,x1) x [y0,y1).
/// A uniform tile returns its value bit-exactly, which keeps tile-based
/// operators (pixelate, resize) idempotent.
double tile_mean(const ImageGrid& img, int x0, int y0, int x1, int y1);

/// Binary PGM (P5, maxval 255). Read maps byte v -> v/255; write rounds.
ImageGrid read_pgm(const std::filesystem::path& path);
void write_pgm(const ImageGrid& img, const std::filesystem::path& path);

}  // namespace imagedpo
