#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "orbitforge/imageset.hpp"
#include "orbitforge/storage.hpp"
#include "orbitforge/util.hpp"

namespace orbitforge {

inline constexpr const char* kDatasetMetadataName = "dataset_metadata.json";
inline constexpr const char* kIndexName = "index.jsonl";

struct CurationMetadata {
  std::string created_by;
  std::string comments;
};

// Field names follow the YAML keys one to one.
struct CurationConfig {
  std::string dataset_name;
  bool local = true;                // read imagesets from a local directory instead of the store
  std::vector<std::string> imageset;
  bool overwrite_local = false;
  int kfolds = 0;
  double test_percent = 0.0;
  bool upload = false;
  bool delete_local = false;        // only honored after a verified upload
  CurationMetadata metadata;
  nlohmann::json plugin = nlohmann::json::object();  // handed to the transform untouched

  void validate() const;
};

enum class TagMode { AND, OR };

struct TagFilter {
  std::set<std::string> tags;
  TagMode mode = TagMode::AND;

  void validate() const;
  bool matches(const std::vector<std::string>& frame_tags) const;
};

struct FilterPlan {
  std::map<std::string, std::uint64_t> size_caps;  // imageset name -> max frames
  std::vector<TagFilter> tag_filters;               // subsets merged by union
  std::optional<std::uint64_t> final_cap;
  std::uint64_t seed = 0;                           // drives final_cap and the split shuffle
};

// A frame together with the imageset it came from.
struct SourceFrame {
  std::string imageset;
  FrameRecord record;

  // "{imageset}/{frame_id}", unique across a dataset.
  std::string uid() const { return imageset + "/" + record.frame_id; }
};

// Union over filters of the frames each one selects, in input order.
// No filters selects everything.
std::vector<SourceFrame> filter_by_tags(std::span<const SourceFrame> frames, std::span<const TagFilter> filters);

struct Splits {
  std::vector<std::string> train;  // sorted
  std::vector<std::string> test;   // sorted
  std::vector<std::vector<std::string>> folds;  // partition of train, each sorted

  bool operator==(const Splits&) const = default;
};

// round-half-up(test_percent * n)
std::size_t test_size(double test_percent, std::size_t n);

// Seeded Fisher-Yates shuffle, first test_size() ids to test, the rest to
// train; train is dealt round-robin into `kfolds` folds in shuffled order.
Splits split(std::span<const std::string> ids, double test_percent, int kfolds, std::uint64_t seed);

// One line of index.jsonl.
struct IndexRecord {
  std::string image_id;  // SourceFrame::uid()
  std::string imageset;
  std::string frame_id;
  std::string image;     // relative to the dataset directory
  std::string mask;
  bool present = false;
  std::optional<std::array<double, 4>> bbox;  // pixel edges: [xmin, ymin, xmax + 1, ymax + 1]
  ScenePose pose;
  std::vector<std::string> tags;
  std::string split;     // "train" | "test"
  std::optional<int> fold;
};

nlohmann::json to_json(const IndexRecord& rec);
IndexRecord index_record_for(const SourceFrame& frame);

// The format-conversion stage. The default copies images and masks and
// writes index.jsonl; other transforms may consume `plugin`.
class DatasetTransform {
 public:
  virtual ~DatasetTransform() = default;
  virtual void write(const ObjectStore& source, std::span<const SourceFrame> frames, std::vector<IndexRecord>& index,
                     const std::filesystem::path& dir, const nlohmann::json& plugin) const = 0;
};

class CopyTransform final : public DatasetTransform {
 public:
  explicit CopyTransform(unsigned threads = 4) : threads_(threads) {}
  void write(const ObjectStore& source, std::span<const SourceFrame> frames, std::vector<IndexRecord>& index,
             const std::filesystem::path& dir, const nlohmann::json& plugin) const override;

 private:
  unsigned threads_;
};

struct DatasetArtifact {
  std::string name;
  std::filesystem::path dir;  // empty once delete_local removed it
  Splits splits;
  std::vector<IndexRecord> index;
  nlohmann::json metadata;
  std::vector<std::string> uploaded_keys;
};

struct CurationContext {
  const ObjectStore* source = nullptr;  // imagesets bucket to read from
  std::filesystem::path output_root;    // datasets are written to output_root/{dataset_name}
  ObjectStore* upload_store = nullptr;  // required when config.upload
  const DatasetTransform* transform = nullptr;  // defaults to CopyTransform
  Clock clock;
  std::string git_commit = "unknown";
};

DatasetArtifact curate(const CurationConfig& config, const FilterPlan& plan, const CurationContext& ctx);

nlohmann::json to_json(const CurationConfig& config);
nlohmann::json to_json(const FilterPlan& plan);

}  // namespace orbitforge
