#include "orbitforge/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <iomanip>
#include <map>
#include <sstream>

#include "orbitforge/error.hpp"

namespace orbitforge {

using nlohmann::json;

namespace {

void check_box(const Box& b) {
  if (!std::isfinite(b.xmin) || !std::isfinite(b.ymin) || !std::isfinite(b.xmax) || !std::isfinite(b.ymax) ||
      !b.well_ordered()) {
    throw Error(ErrorKind::invalid_box, "box must satisfy xmin < xmax and ymin < ymax");
  }
}

// Orders detections best-first.
bool better(const Detection& a, const Detection& b) {
  if (a.confidence != b.confidence) return a.confidence > b.confidence;
  if (a.bbox.area() != b.bbox.area()) return a.bbox.area() > b.bbox.area();
  return a.bbox < b.bbox;
}

Box box_from(const json& j) {
  if (!j.is_array() || j.size() != 4) throw Error(ErrorKind::validation, "bbox must be [xmin, ymin, xmax, ymax]");
  Box b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
  check_box(b);
  return b;
}

json box_json(const Box& b) { return json::array({b.xmin, b.ymin, b.xmax, b.ymax}); }

template <typename T, typename Fn>
std::vector<T> read_jsonl(std::istream& in, const std::string& source, Fn&& parse_line) {
  std::vector<T> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_line(json::parse(line)));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::parse, source + ":" + std::to_string(line_no) + ": " + e.what(), line_no);
    } catch (const Error& e) {
      throw Error(ErrorKind::parse, source + ":" + std::to_string(line_no) + ": " + e.what(), line_no);
    }
  }
  return out;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string fmt(const std::optional<double>& v) {
  if (!v) return "undefined";
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(4);
  os << *v;
  return os.str();
}

}  // namespace

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
  tp += o.tp;
  tn += o.tn;
  fp += o.fp;
  fn += o.fn;
  n_images += o.n_images;
  return *this;
}

double iou(const Box& a, const Box& b) {
  check_box(a);
  check_box(b);
  const double iw = std::min(a.xmax, b.xmax) - std::max(a.xmin, b.xmin);
  const double ih = std::min(a.ymax, b.ymax) - std::max(a.ymin, b.ymin);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

ImageOutcome classify_image(const GroundTruth& gt, std::span<const Detection> dets, double conf_t, double iou_t) {
  ImageOutcome out;
  out.counts.n_images = 1;

  const Detection* best = nullptr;
  for (const auto& d : dets) {
    if (!best || better(d, *best)) best = &d;
  }
  if (best && !(best->confidence > conf_t)) best = nullptr;

  if (!gt.present) {
    (best ? out.counts.fp : out.counts.tn) = 1;
    return out;
  }
  if (!gt.bbox) throw Error(ErrorKind::validation, gt.image_id + ": present target needs a bbox");
  if (!best) {
    out.counts.fn = 1;
    return out;
  }
  out.iou = iou(*gt.bbox, best->bbox);
  if (*out.iou >= iou_t) {
    out.counts.tp = 1;
  } else {
    out.counts.fn = 1;
    out.counts.fp = 1;
  }
  return out;
}

EvalReport evaluate(std::span<const GroundTruth> gts, std::span<const Detection> dets, double conf_t, double iou_t) {
  if (gts.empty()) throw Error(ErrorKind::input_mismatch, "no ground-truth records");
  std::map<std::string, std::vector<Detection>> by_image;
  for (const auto& gt : gts) {
    if (!by_image.try_emplace(gt.image_id).second) {
      throw Error(ErrorKind::input_mismatch, "duplicate ground-truth image_id '" + gt.image_id + "'");
    }
  }
  for (const auto& d : dets) {
    const auto it = by_image.find(d.image_id);
    if (it == by_image.end()) {
      throw Error(ErrorKind::input_mismatch, "detection for unknown image_id '" + d.image_id + "'");
    }
    it->second.push_back(d);
  }

  EvalReport report;
  report.confidence_threshold = conf_t;
  report.iou_threshold = iou_t;
  double iou_sum = 0.0;
  std::uint64_t iou_n = 0;
  for (const auto& gt : gts) {
    const ImageOutcome o = classify_image(gt, by_image[gt.image_id], conf_t, iou_t);
    report.counts += o.counts;
    if (o.iou) {
      iou_sum += *o.iou;
      ++iou_n;
    }
  }
  const auto& c = report.counts;
  report.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.n_images);
  if (c.tp + c.fp > 0) report.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn > 0) report.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  if (iou_n > 0) report.mean_iou = iou_sum / static_cast<double>(iou_n);
  return report;
}

std::vector<double> default_threshold_grid() {
  std::vector<double> grid;
  for (int i = 0; i < 20; ++i) grid.push_back(i / 20.0);
  return grid;
}

SweepResult sweep_threshold(std::span<const GroundTruth> gts, std::span<const Detection> dets, double iou_t,
                            std::span<const double> grid) {
  if (grid.empty()) throw Error(ErrorKind::invalid_parameter, "threshold grid is empty");
  SweepResult result;
  std::vector<double> sorted(grid.begin(), grid.end());
  std::sort(sorted.begin(), sorted.end());
  bool have_best = false;
  std::uint64_t best_correct = 0;
  for (double t : sorted) {
    EvalReport r = evaluate(gts, dets, t, iou_t);
    // n_images is constant across the sweep, so compare exact counts.
    const std::uint64_t correct = r.counts.tp + r.counts.tn;
    if (!have_best || correct > best_correct) {
      have_best = true;
      best_correct = correct;
      result.best_threshold = t;
      result.best = r;
    }
    result.curve.push_back(std::move(r));
  }
  return result;
}

std::vector<GroundTruth> read_ground_truth_jsonl(std::istream& in, const std::string& source) {
  return read_jsonl<GroundTruth>(in, source, [](const json& j) {
    GroundTruth gt;
    gt.image_id = j.at("image_id").get<std::string>();
    const bool has_box = j.contains("bbox") && !j.at("bbox").is_null();
    gt.present = j.contains("present") ? j.at("present").get<bool>() : has_box;
    if (gt.present) {
      if (!has_box) throw Error(ErrorKind::validation, "present target without bbox");
      gt.bbox = box_from(j.at("bbox"));
    }
    return gt;
  });
}

std::vector<Detection> read_detections_jsonl(std::istream& in, const std::string& source) {
  return read_jsonl<Detection>(in, source, [](const json& j) {
    Detection d;
    d.image_id = j.at("image_id").get<std::string>();
    d.bbox = box_from(j.at("bbox"));
    d.confidence = j.at("confidence").get<double>();
    if (!(d.confidence >= 0.0 && d.confidence <= 1.0)) throw Error(ErrorKind::validation, "confidence outside [0,1]");
    return d;
  });
}

json to_json(const GroundTruth& gt) {
  return {{"image_id", gt.image_id}, {"present", gt.present}, {"bbox", gt.bbox ? box_json(*gt.bbox) : json(nullptr)}};
}

json to_json(const Detection& det) {
  return {{"image_id", det.image_id}, {"bbox", box_json(det.bbox)}, {"confidence", det.confidence}};
}

json to_json(const EvalReport& r) {
  return {{"accuracy", r.accuracy},
          {"precision", optional_json(r.precision)},
          {"recall", optional_json(r.recall)},
          {"mean_iou", optional_json(r.mean_iou)},
          {"confidence_threshold", r.confidence_threshold},
          {"iou_threshold", r.iou_threshold},
          {"counts",
           {{"tp", r.counts.tp},
            {"tn", r.counts.tn},
            {"fp", r.counts.fp},
            {"fn", r.counts.fn},
            {"n_images", r.counts.n_images}}}};
}

std::string format_report(const EvalReport& r) {
  std::ostringstream os;
  os << "confidence threshold  " << fmt(r.confidence_threshold) << "\n"
     << "IoU threshold         " << fmt(r.iou_threshold) << "\n"
     << "images                " << r.counts.n_images << "\n"
     << "TP / TN / FP / FN     " << r.counts.tp << " / " << r.counts.tn << " / " << r.counts.fp << " / "
     << r.counts.fn << "\n"
     << "accuracy              " << fmt(r.accuracy) << "\n"
     << "precision             " << fmt(r.precision) << "\n"
     << "recall                " << fmt(r.recall) << "\n"
     << "mean IoU              " << fmt(r.mean_iou) << "\n";
  return os.str();
}

std::string sweep_csv(const SweepResult& sweep) {
  std::ostringstream os;
  os << std::setprecision(10);
  os << "threshold,accuracy,precision,recall,mean_iou,tp,tn,fp,fn\n";
  // Undefined metrics are empty cells.
  auto cell = [&os](const std::optional<double>& v) -> std::ostream& {
    if (v) os << *v;
    return os;
  };
  for (const auto& r : sweep.curve) {
    os << r.confidence_threshold << "," << r.accuracy << ",";
    cell(r.precision) << ",";
    cell(r.recall) << ",";
    cell(r.mean_iou) << "," << r.counts.tp << "," << r.counts.tn << "," << r.counts.fp << "," << r.counts.fn << "\n";
  }
  return os.str();
}

}  // namespace orbitforge
