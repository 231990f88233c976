#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace orbitforge {

// Row-major raster with `Channels` interleaved samples per pixel.
template <typename T, int Channels>
class Raster {
 public:
  static constexpr int channels = Channels;

  Raster() = default;
  Raster(std::uint32_t width, std::uint32_t height, T fill = T{})
      : width_(width), height_(height), data_(static_cast<std::size_t>(width) * height * Channels, fill) {}

  std::uint32_t width() const { return width_; }
  std::uint32_t height() const { return height_; }
  bool empty() const { return data_.empty(); }

  T& at(std::uint32_t x, std::uint32_t y, int c = 0) { return data_[index(x, y) + c]; }
  const T& at(std::uint32_t x, std::uint32_t y, int c = 0) const { return data_[index(x, y) + c]; }

  std::span<T> pixels() { return data_; }
  std::span<const T> pixels() const { return data_; }

  bool operator==(const Raster&) const = default;

 private:
  std::size_t index(std::uint32_t x, std::uint32_t y) const {
    return (static_cast<std::size_t>(y) * width_ + x) * Channels;
  }

  std::uint32_t width_ = 0;
  std::uint32_t height_ = 0;
  std::vector<T> data_;
};

using RgbImage = Raster<std::uint8_t, 3>;
using GrayImage = Raster<std::uint8_t, 1>;
using DepthImage = Raster<float, 1>;
using FloatRgbImage = Raster<double, 3>;  // working precision for filters

// PNG codec (libpng). Grayscale, palette and alpha inputs are converted to RGB8.
std::vector<std::uint8_t> encode_png(const RgbImage& img);
std::vector<std::uint8_t> encode_png(const GrayImage& img);
RgbImage decode_png_rgb(std::span<const std::uint8_t> bytes);
GrayImage decode_png_gray(std::span<const std::uint8_t> bytes);

// Reads PNG or JPEG by magic bytes.
RgbImage read_image_rgb(const std::filesystem::path& path);

// Depth raster: "ODPT", u32 width, u32 height, u32 reserved (0), then
// width*height little-endian float32 values, row-major.
std::vector<std::uint8_t> encode_depth(const DepthImage& depth);
DepthImage decode_depth(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
// Prefix of in-flight temp files; directory listings skip these.
inline constexpr std::string_view kTempPrefix = ".~of-";
// Writes to a sibling temp file and renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace orbitforge
