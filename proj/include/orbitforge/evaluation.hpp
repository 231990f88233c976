#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace orbitforge {

// Axis-aligned box in real pixel coordinates; area is (xmax-xmin)*(ymax-ymin).
struct Box {
  double xmin = 0.0;
  double ymin = 0.0;
  double xmax = 0.0;
  double ymax = 0.0;

  double area() const { return (xmax - xmin) * (ymax - ymin); }
  bool well_ordered() const { return xmin < xmax && ymin < ymax; }
  auto operator<=>(const Box&) const = default;
};

struct GroundTruth {
  std::string image_id;
  bool present = false;
  std::optional<Box> bbox;  // required when present
};

struct Detection {
  std::string image_id;
  Box bbox;
  double confidence = 0.0;
};

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t n_images = 0;

  ConfusionCounts& operator+=(const ConfusionCounts& o);
  bool operator==(const ConfusionCounts&) const = default;
};

// Zero-denominator precision / recall / mean IoU are nullopt, never 0 or 1.
struct EvalReport {
  double accuracy = 0.0;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> mean_iou;
  double confidence_threshold = 0.0;
  double iou_threshold = 0.75;
  ConfusionCounts counts;
};

inline constexpr double kDefaultIouThreshold = 0.75;

// Degenerate boxes raise invalid_box.
double iou(const Box& a, const Box& b);

struct ImageOutcome {
  ConfusionCounts counts;      // n_images is 1
  std::optional<double> iou;   // set when the target is present and a detection passed the threshold
};

// Uses only the top detection (confidence, then area, then smallest box
// tuple). It counts iff its confidence is strictly above conf_t.
//   present + IoU >= iou_t          -> TP
//   present + no passing detection  -> FN
//   present + IoU <  iou_t          -> FN and FP
//   absent  + passing detection     -> FP
//   absent  + none                  -> TN
ImageOutcome classify_image(const GroundTruth& gt, std::span<const Detection> dets, double conf_t,
                            double iou_t = kDefaultIouThreshold);

EvalReport evaluate(std::span<const GroundTruth> gts, std::span<const Detection> dets, double conf_t,
                    double iou_t = kDefaultIouThreshold);

std::vector<double> default_threshold_grid();  // 0.00, 0.05, ..., 0.95

struct SweepResult {
  double best_threshold = 0.0;
  EvalReport best;
  std::vector<EvalReport> curve;  // one per grid point, grid order
};

// Accuracy-maximizing threshold; ties go to the lowest threshold.
SweepResult sweep_threshold(std::span<const GroundTruth> gts, std::span<const Detection> dets, double iou_t,
                            std::span<const double> grid);

// JSON-lines readers; a malformed line raises parse with its 1-based line number as status().
std::vector<GroundTruth> read_ground_truth_jsonl(std::istream& in, const std::string& source);
std::vector<Detection> read_detections_jsonl(std::istream& in, const std::string& source);
nlohmann::json to_json(const GroundTruth& gt);
nlohmann::json to_json(const Detection& det);

nlohmann::json to_json(const EvalReport& report);
std::string format_report(const EvalReport& report);
std::string sweep_csv(const SweepResult& sweep);

}  // namespace orbitforge
