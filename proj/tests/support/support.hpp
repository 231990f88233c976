#pragma once

#include <cstdint>
#include <functional>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "orbitforge/image.hpp"
#include "orbitforge/imageset.hpp"
#include "orbitforge/mesh.hpp"
#include "orbitforge/storage.hpp"

namespace testsupport {

// Axis-aligned cube of edge `size`, centred on the origin, flat normals.
orbitforge::TriangleMesh make_cube(double size = 1.0);
// Square in the z = 0 plane facing +z.
orbitforge::TriangleMesh make_quad(double size = 1.0);
// Latitude/longitude sphere: 2 * slices * (stacks - 1) triangles.
orbitforge::TriangleMesh make_uv_sphere(double radius, int stacks, int slices);
std::string cube_obj(double size = 1.0);

std::vector<std::uint8_t> encode_jpeg(const orbitforge::RgbImage& img, int quality = 90);

using TagsOf = std::function<std::vector<std::string>(std::size_t)>;
// Tiny frames (size x size): frame i has a (1 + i % (size - 1)) px square
// target at x = 1, except every third frame, which is empty.
std::vector<orbitforge::FrameOutput> synthetic_frames(const std::string& sequence, std::size_t n,
                                                      const TagsOf& tags_of = {}, std::uint32_t size = 8);
// Writes root/{name} with an 8x8 camera.
orbitforge::ImagesetManifest write_synthetic_imageset(const std::filesystem::path& root, const std::string& name,
                                                      std::size_t n, const TagsOf& tags_of = {});

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

void write_text(const std::filesystem::path& p, const std::string& text);
std::string read_text(const std::filesystem::path& p);

// Every regular file below `dir`, relative path -> bytes.
std::map<std::string, std::string> tree(const std::filesystem::path& dir);

// In-process S3-compatible server: path-style buckets in memory, SigV4
// checking, ListObjectsV2 with small pages, and injectable 5xx failures.
class MockS3 {
 public:
  struct Options {
    std::string access_key_id = "AKIDMOCKEXAMPLE";
    std::string secret_key = "mock/secret/key";
    std::string region = "us-east-1";
    std::size_t page_size = 2;
  };

  MockS3();
  explicit MockS3(Options options);
  ~MockS3();

  std::string endpoint() const;
  orbitforge::S3Backend backend() const;
  // Backend with the wrong secret, for signature rejection tests.
  orbitforge::S3Backend backend_with_bad_secret() const;

  // The next `n` requests are answered with `status` before touching state.
  void fail_next(int n, int status = 503);

  // bucket -> key -> bytes
  std::map<std::string, std::map<std::string, std::string>> snapshot() const;
  int requests() const;
  int signature_failures() const;

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

}  // namespace testsupport
