#include "orbitforge/compositor.hpp"

#include <algorithm>
#include <cmath>

#include "orbitforge/error.hpp"

namespace orbitforge {

namespace fs = std::filesystem;

namespace {

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0))); }

void require(bool ok, const std::string& msg) {
  if (!ok) throw Error(ErrorKind::invalid_parameter, msg);
}

template <typename... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

}  // namespace

const char* step_name(const AugmentationOp& op) {
  return std::visit(overloaded{[](const BackgroundStep&) { return "background"; },
                               [](const BlurStep&) { return "gaussian_blur"; },
                               [](const BloomStep&) { return "bloom"; }, [](const StarStep&) { return "star"; },
                               [](const ExposureStep&) { return "exposure"; }},
                    op);
}

void AugmentationSpec::validate() const {
  for (const auto& step : steps) {
    const std::string name = step_name(step.op);
    require(step.probability >= 0.0 && step.probability <= 1.0, name + ": probability outside [0,1]");
    for (const auto& t : step.tags) {
      require(!t.empty() && t.find(',') == std::string::npos, name + ": tags must be non-empty and comma-free");
    }
    std::visit(overloaded{
                   [&](const BackgroundStep& s) {
                     require(s.mode == BackgroundMode::black || !s.path.empty(), name + ": path required");
                   },
                   [&](const BlurStep& s) { require(s.sigma >= 0.0, name + ": sigma must be >= 0"); },
                   [&](const BloomStep& s) {
                     require(s.threshold >= 0.0 && s.threshold <= 1.0, name + ": threshold outside [0,1]");
                     require(s.radius >= 0.0, name + ": radius must be >= 0");
                     require(s.gain >= 0.0, name + ": gain must be >= 0");
                   },
                   [&](const StarStep& s) {
                     require(s.threshold >= 0.0 && s.threshold <= 1.0, name + ": threshold outside [0,1]");
                     require(s.num_streaks >= 2, name + ": num_streaks must be >= 2");
                     require(s.length >= 1, name + ": length must be >= 1");
                     require(s.gain >= 0.0, name + ": gain must be >= 0");
                   },
                   [&](const ExposureStep& s) { require(s.scale > 0.0, name + ": scale must be > 0"); },
               },
               step.op);
  }
}

BackgroundPool::BackgroundPool(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw Error(ErrorKind::io, "background directory not found: " + dir.string());
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") files_.push_back(entry.path());
  }
  std::sort(files_.begin(), files_.end());
  if (files_.empty()) throw Error(ErrorKind::io, "background directory has no PNG/JPEG images: " + dir.string());
}

RgbImage resize_bilinear(const RgbImage& src, std::uint32_t width, std::uint32_t height) {
  if (src.width() == width && src.height() == height) return src;
  if (src.empty()) throw Error(ErrorKind::invalid_parameter, "cannot resize an empty image");
  RgbImage dst(width, height);
  const double sx = static_cast<double>(src.width()) / width;
  const double sy = static_cast<double>(src.height()) / height;
  const double max_x = src.width() - 1.0;
  const double max_y = src.height() - 1.0;
  for (std::uint32_t y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, max_y);
    const auto y0 = static_cast<std::uint32_t>(fy);
    const std::uint32_t y1 = std::min(y0 + 1, src.height() - 1);
    const double ty = fy - y0;
    for (std::uint32_t x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, max_x);
      const auto x0 = static_cast<std::uint32_t>(fx);
      const std::uint32_t x1 = std::min(x0 + 1, src.width() - 1);
      const double tx = fx - x0;
      for (int c = 0; c < 3; ++c) {
        const double top = src.at(x0, y0, c) * (1.0 - tx) + src.at(x1, y0, c) * tx;
        const double bottom = src.at(x0, y1, c) * (1.0 - tx) + src.at(x1, y1, c) * tx;
        dst.at(x, y, c) = to_byte(top * (1.0 - ty) + bottom * ty);
      }
    }
  }
  return dst;
}

RgbImage composite_background(const RgbImage& color, const GrayImage& mask, const RgbImage& background) {
  if (mask.width() != color.width() || mask.height() != color.height()) {
    throw Error(ErrorKind::invalid_parameter, "mask and color sizes differ");
  }
  const RgbImage bg = resize_bilinear(background, color.width(), color.height());
  RgbImage out = color;
  for (std::uint32_t y = 0; y < out.height(); ++y) {
    for (std::uint32_t x = 0; x < out.width(); ++x) {
      if (mask.at(x, y) == 255) continue;
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = bg.at(x, y, c);
    }
  }
  return out;
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma >= 0.0)) throw Error(ErrorKind::invalid_parameter, "sigma must be >= 0");
  if (sigma == 0.0) return {1.0};
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

FloatRgbImage gaussian_blur(const FloatRgbImage& img, double sigma) {
  const auto k = gaussian_kernel(sigma);
  if (k.size() == 1) return img;
  const int radius = static_cast<int>(k.size() / 2);
  const int w = static_cast<int>(img.width());
  const int h = static_cast<int>(img.height());

  FloatRgbImage tmp(img.width(), img.height());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) acc += k[i + radius] * img.at(std::clamp(x + i, 0, w - 1), y, c);
        tmp.at(x, y, c) = acc;
      }
    }
  }
  FloatRgbImage out(img.width(), img.height());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) acc += k[i + radius] * tmp.at(x, std::clamp(y + i, 0, h - 1), c);
        out.at(x, y, c) = acc;
      }
    }
  }
  return out;
}

FloatRgbImage to_float(const RgbImage& img) {
  FloatRgbImage out(img.width(), img.height());
  auto src = img.pixels();
  auto dst = out.pixels();
  std::transform(src.begin(), src.end(), dst.begin(), [](std::uint8_t v) { return static_cast<double>(v); });
  return out;
}

RgbImage add_scaled(const RgbImage& img, const FloatRgbImage& extra, double gain) {
  RgbImage out(img.width(), img.height());
  auto a = img.pixels();
  auto b = extra.pixels();
  auto o = out.pixels();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = to_byte(a[i] + gain * b[i]);
  return out;
}

RgbImage gaussian_blur(const RgbImage& img, double sigma) {
  if (sigma == 0.0) return img;
  return add_scaled(RgbImage(img.width(), img.height()), gaussian_blur(to_float(img), sigma), 1.0);
}

double luma(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

FloatRgbImage bright_pass(const RgbImage& img, double threshold) {
  FloatRgbImage out(img.width(), img.height());
  const double cut = threshold * 255.0;
  for (std::uint32_t y = 0; y < img.height(); ++y) {
    for (std::uint32_t x = 0; x < img.width(); ++x) {
      const double l = luma(img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2));
      const double excess = l - cut;
      if (!(excess > 0.0) || !(l > 0.0)) continue;
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = img.at(x, y, c) * excess / l;
    }
  }
  return out;
}

RgbImage bloom(const RgbImage& img, double threshold, double radius, double gain) {
  if (gain == 0.0) return img;
  return add_scaled(img, gaussian_blur(bright_pass(img, threshold), radius), gain);
}

RgbImage star(const RgbImage& img, double threshold, int num_streaks, int length, double gain) {
  if (num_streaks < 2 || length < 1) throw Error(ErrorKind::invalid_parameter, "star needs num_streaks >= 2, length >= 1");
  if (gain == 0.0) return img;
  const FloatRgbImage bright = bright_pass(img, threshold);
  const long w = img.width();
  const long h = img.height();
  std::vector<double> streaks(static_cast<std::size_t>(w) * h * 3, 0.0);

  std::vector<std::pair<double, double>> dirs;
  for (int k = 0; k < num_streaks; ++k) {
    const double theta = k * M_PI / num_streaks;
    dirs.emplace_back(std::cos(theta), std::sin(theta));
  }
  for (long y = 0; y < h; ++y) {
    for (long x = 0; x < w; ++x) {
      const double src[3] = {bright.at(x, y, 0), bright.at(x, y, 1), bright.at(x, y, 2)};
      if (src[0] == 0.0 && src[1] == 0.0 && src[2] == 0.0) continue;
      for (const auto& [dx, dy] : dirs) {
        for (int t = 1; t < length; ++t) {
          const double weight = 1.0 - static_cast<double>(t) / length;
          for (int sign : {1, -1}) {
            const long tx = x + std::lround(sign * t * dx);
            const long ty = y + std::lround(sign * t * dy);
            if (tx < 0 || ty < 0 || tx >= w || ty >= h) continue;
            double* dst = &streaks[(static_cast<std::size_t>(ty) * w + tx) * 3];
            for (int c = 0; c < 3; ++c) dst[c] += weight * src[c];
          }
        }
      }
    }
  }
  RgbImage out(img.width(), img.height());
  auto a = img.pixels();
  auto o = out.pixels();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = to_byte(a[i] + gain * streaks[i]);
  return out;
}

RgbImage exposure(const RgbImage& img, double scale) {
  if (!(scale > 0.0)) throw Error(ErrorKind::invalid_parameter, "exposure scale must be > 0");
  RgbImage out(img.width(), img.height());
  auto a = img.pixels();
  auto o = out.pixels();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = to_byte(a[i] * scale);
  return out;
}

AugmentationPipeline::AugmentationPipeline(AugmentationSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  for (const auto& step : spec_.steps) {
    const auto* bg = std::get_if<BackgroundStep>(&step.op);
    if (bg && bg->mode == BackgroundMode::directory) {
      pools_.emplace_back(BackgroundPool(bg->path));
    } else {
      pools_.emplace_back(std::nullopt);
    }
  }
}

AugmentResult AugmentationPipeline::apply(const RenderOutput& render, DeterministicRng& rng) const {
  AugmentResult result;
  result.color = render.color;
  for (std::size_t i = 0; i < spec_.steps.size(); ++i) {
    const auto& step = spec_.steps[i];
    if (!(rng.uniform() < step.probability)) continue;

    result.fired.emplace_back(step_name(step.op));
    result.tags.insert(result.tags.end(), step.tags.begin(), step.tags.end());
    RgbImage& img = result.color;
    std::visit(overloaded{
                   [&](const BackgroundStep& s) {
                     if (s.mode == BackgroundMode::black) {
                       img = composite_background(img, render.mask, RgbImage(1, 1));
                       return;
                     }
                     const fs::path path = s.mode == BackgroundMode::image ? s.path : pools_[i]->pick(rng);
                     try {
                       img = composite_background(img, render.mask, read_image_rgb(path));
                     } catch (const Error& e) {
                       if (s.strict) throw;
                       result.warnings.push_back(std::string("background skipped: ") + e.what());
                       img = composite_background(img, render.mask, RgbImage(1, 1));
                     }
                   },
                   [&](const BlurStep& s) { img = gaussian_blur(img, s.sigma); },
                   [&](const BloomStep& s) { img = bloom(img, s.threshold, s.radius, s.gain); },
                   [&](const StarStep& s) { img = star(img, s.threshold, s.num_streaks, s.length, s.gain); },
                   [&](const ExposureStep& s) { img = exposure(img, s.scale); },
               },
               step.op);
  }
  return result;
}

}  // namespace orbitforge
