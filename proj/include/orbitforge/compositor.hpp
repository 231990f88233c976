#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "orbitforge/image.hpp"
#include "orbitforge/renderer.hpp"
#include "orbitforge/rng.hpp"

namespace orbitforge {

enum class BackgroundMode { black, image, directory };

struct BackgroundStep {
  BackgroundMode mode = BackgroundMode::black;
  std::filesystem::path path;  // file for `image`, directory for `directory`
  bool strict = false;         // unreadable image: throw instead of falling back to black
};
struct BlurStep {
  double sigma = 0.0;  // px
};
struct BloomStep {
  double threshold = 0.8;  // fraction of full-scale luma
  double radius = 8.0;     // gaussian sigma, px
  double gain = 1.0;
};
struct StarStep {
  double threshold = 0.9;
  int num_streaks = 4;
  int length = 32;  // px
  double gain = 0.5;
};
struct ExposureStep {
  double scale = 1.0;
};

using AugmentationOp = std::variant<BackgroundStep, BlurStep, BloomStep, StarStep, ExposureStep>;

struct AugmentationStep {
  AugmentationOp op;
  double probability = 1.0;
  std::vector<std::string> tags;  // attached to frames on which this step fires
};

struct AugmentationSpec {
  std::vector<AugmentationStep> steps;
  void validate() const;
};

const char* step_name(const AugmentationOp& op);

// Lexicographically sorted PNG/JPEG files of a directory.
class BackgroundPool {
 public:
  explicit BackgroundPool(const std::filesystem::path& dir);
  const std::vector<std::filesystem::path>& files() const { return files_; }
  const std::filesystem::path& pick(DeterministicRng& rng) const { return files_[rng.bounded(files_.size())]; }

 private:
  std::vector<std::filesystem::path> files_;
};

RgbImage resize_bilinear(const RgbImage& src, std::uint32_t width, std::uint32_t height);

// Target pixels keep `color`; every other pixel comes from `background`,
// bilinearly rescaled to the frame size.
RgbImage composite_background(const RgbImage& color, const GrayImage& mask, const RgbImage& background);
inline RgbImage composite_background(const RenderOutput& render, const RgbImage& background) {
  return composite_background(render.color, render.mask, background);
}

// Normalized kernel of radius ceil(3 sigma); sigma 0 gives {1}.
std::vector<double> gaussian_kernel(double sigma);
// Separable gaussian with clamp-to-edge borders.
FloatRgbImage gaussian_blur(const FloatRgbImage& img, double sigma);
RgbImage gaussian_blur(const RgbImage& img, double sigma);

double luma(double r, double g, double b);
// Per pixel max(0, luma - threshold * 255), distributed over channels by c / luma.
FloatRgbImage bright_pass(const RgbImage& img, double threshold);

RgbImage bloom(const RgbImage& img, double threshold, double radius, double gain);
RgbImage star(const RgbImage& img, double threshold, int num_streaks, int length, double gain);
RgbImage exposure(const RgbImage& img, double scale);

FloatRgbImage to_float(const RgbImage& img);
// Rounds img + gain * extra and clamps to [0, 255].
RgbImage add_scaled(const RgbImage& img, const FloatRgbImage& extra, double gain);

struct AugmentResult {
  RgbImage color;
  std::vector<std::string> tags;      // tags of every step that fired
  std::vector<std::string> fired;     // step names, in order
  std::vector<std::string> warnings;  // e.g. unreadable background images
};

// Validated spec with directory pools resolved once, shared read-only by workers.
class AugmentationPipeline {
 public:
  explicit AugmentationPipeline(AugmentationSpec spec);

  // Each step draws one uniform from `rng` and fires iff it is below the
  // step probability; directory backgrounds then draw their pool index.
  AugmentResult apply(const RenderOutput& render, DeterministicRng& rng) const;

  const AugmentationSpec& spec() const { return spec_; }

 private:
  AugmentationSpec spec_;
  std::vector<std::optional<BackgroundPool>> pools_;
};

inline AugmentResult apply_pipeline(const RenderOutput& render, const AugmentationSpec& spec, DeterministicRng& rng) {
  return AugmentationPipeline(spec).apply(render, rng);
}

}  // namespace orbitforge
