#include <png.h>
#include <unistd.h>

#include <atomic>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <jpeglib.h>

#include "orbitforge/error.hpp"
#include "orbitforge/image.hpp"

namespace orbitforge {

namespace fs = std::filesystem;

namespace {

template <typename Img>
std::vector<std::uint8_t> encode_png_impl(const Img& img, png_uint_32 format) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = img.width();
  image.height = img.height();
  image.format = format;

  png_alloc_size_t size = 0;
  const auto* buffer = img.pixels().data();
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, buffer, 0, nullptr)) {
    throw Error(ErrorKind::io, std::string("png encode failed: ") + image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, buffer, 0, nullptr)) {
    throw Error(ErrorKind::io, std::string("png encode failed: ") + image.message);
  }
  out.resize(size);
  return out;
}

template <typename Img>
Img decode_png_impl(std::span<const std::uint8_t> bytes, png_uint_32 format) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw Error(ErrorKind::parse, std::string("png decode failed: ") + image.message);
  }
  image.format = format;
  Img img(image.width, image.height);
  if (!png_image_finish_read(&image, nullptr, img.pixels().data(), 0, nullptr)) {
    png_image_free(&image);
    throw Error(ErrorKind::parse, std::string("png decode failed: ") + image.message);
  }
  return img;
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

// No C++ objects with destructors live across the setjmp in this function.
bool decode_jpeg_into(const std::uint8_t* data, std::size_t size, RgbImage* out, char* message) {
  jpeg_decompress_struct cinfo;
  JpegErrorManager err;
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  if (setjmp(err.jump)) {
    std::strncpy(message, err.message, JMSG_LENGTH_MAX);
    jpeg_destroy_decompress(&cinfo);
    return false;
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, data, static_cast<unsigned long>(size));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  *out = RgbImage(cinfo.output_width, cinfo.output_height);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = &out->at(0, cinfo.output_scanline);
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return true;
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[at + i]) << (8 * i);
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode_png(const RgbImage& img) { return encode_png_impl(img, PNG_FORMAT_RGB); }
std::vector<std::uint8_t> encode_png(const GrayImage& img) { return encode_png_impl(img, PNG_FORMAT_GRAY); }

RgbImage decode_png_rgb(std::span<const std::uint8_t> bytes) {
  return decode_png_impl<RgbImage>(bytes, PNG_FORMAT_RGB);
}

GrayImage decode_png_gray(std::span<const std::uint8_t> bytes) {
  return decode_png_impl<GrayImage>(bytes, PNG_FORMAT_GRAY);
}

RgbImage read_image_rgb(const fs::path& path) {
  const auto bytes = read_file(path);
  if (bytes.size() >= 8 && bytes[0] == 0x89 && bytes[1] == 'P' && bytes[2] == 'N' && bytes[3] == 'G') {
    return decode_png_rgb(bytes);
  }
  if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF) {
    RgbImage img;
    char message[JMSG_LENGTH_MAX] = {};
    if (!decode_jpeg_into(bytes.data(), bytes.size(), &img, message)) {
      throw Error(ErrorKind::parse, path.string() + ": jpeg decode failed: " + message);
    }
    return img;
  }
  throw Error(ErrorKind::parse, path.string() + ": not a PNG or JPEG image");
}

std::vector<std::uint8_t> encode_depth(const DepthImage& depth) {
  std::vector<std::uint8_t> out;
  out.reserve(16 + depth.pixels().size() * 4);
  for (char c : {'O', 'D', 'P', 'T'}) out.push_back(static_cast<std::uint8_t>(c));
  put_u32(out, depth.width());
  put_u32(out, depth.height());
  put_u32(out, 0);
  for (float f : depth.pixels()) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(out, bits);
  }
  return out;
}

DepthImage decode_depth(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), "ODPT", 4) != 0) {
    throw Error(ErrorKind::parse, "depth raster: missing ODPT header");
  }
  const std::uint32_t w = get_u32(bytes, 4);
  const std::uint32_t h = get_u32(bytes, 8);
  if (bytes.size() != 16 + static_cast<std::size_t>(w) * h * 4) {
    throw Error(ErrorKind::parse, "depth raster: size does not match header");
  }
  DepthImage depth(w, h);
  auto px = depth.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) {
    const std::uint32_t bits = get_u32(bytes, 16 + 4 * i);
    std::memcpy(&px[i], &bits, 4);
  }
  return depth;
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorKind::io, "read failed: " + path.string());
  return bytes;
}

void write_file_atomic(const fs::path& path, std::span<const std::uint8_t> bytes) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  static std::atomic<std::uint64_t> counter{0};
  const fs::path tmp = path.parent_path() / (std::string(kTempPrefix) + path.filename().string() + "." +
                                             std::to_string(::getpid()) + "." + std::to_string(counter++));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw Error(ErrorKind::io, "write failed: " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) fs::remove(tmp);
  if (ec) throw Error(ErrorKind::io, "rename failed for " + path.string() + ": " + ec.message());
}

void write_file_atomic(const fs::path& path, const std::string& text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace orbitforge
