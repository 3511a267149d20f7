#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace camsearch {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};
static_assert(sizeof(Rgb) == 3);

/// Row-major RGB8 raster.
class Image {
 public:
  Image() = default;
  Image(int width, int height, Rgb fill = {}) : width_(width), height_(height), pixels_(std::size_t(width) * height, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return pixels_.empty(); }

  Rgb& at(int x, int y) { return pixels_[std::size_t(y) * width_ + x]; }
  const Rgb& at(int x, int y) const { return pixels_[std::size_t(y) * width_ + x]; }
  const std::vector<Rgb>& pixels() const { return pixels_; }
  Rgb* data() { return pixels_.data(); }

  bool operator==(const Image&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<Rgb> pixels_;
};

/// Writes an 8-bit RGB PNG without timestamps or text chunks, so identical
/// rasters produce identical files. Throws std::runtime_error on I/O failure.
void write_png(const Image& image, const std::filesystem::path& path);
/// Reads any 8-bit PNG and converts it to RGB. Throws std::runtime_error.
Image read_png(const std::filesystem::path& path);

}  // namespace camsearch
