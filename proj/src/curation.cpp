#include "orbitforge/curation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "orbitforge/error.hpp"
#include "orbitforge/image.hpp"
#include "orbitforge/rng.hpp"

namespace orbitforge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename T>
void seeded_shuffle(std::vector<T>& items, std::uint64_t seed, std::uint64_t stream) {
  DeterministicRng rng(seed, stream);
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.bounded(i));
    std::swap(items[i - 1], items[j]);
  }
}

std::string lines(const std::vector<std::string>& ids) {
  std::string out;
  for (const auto& id : ids) out += id + "\n";
  return out;
}

void remove_tree(const fs::path& p) {
  std::error_code ec;
  fs::remove_all(p, ec);
  if (ec) throw Error(ErrorKind::io, "cannot remove " + p.string() + ": " + ec.message());
}

}  // namespace

void CurationConfig::validate() const {
  if (dataset_name.empty()) throw Error(ErrorKind::config, "dataset_name must be set");
  validate_key(dataset_name);
  if (dataset_name.find('/') != std::string::npos) throw Error(ErrorKind::config, "dataset_name may not contain '/'");
  if (imageset.empty()) throw Error(ErrorKind::config, "imageset must list at least one imageset");
  std::set<std::string> seen;
  for (const auto& name : imageset) {
    if (!seen.insert(name).second) throw Error(ErrorKind::config, "imageset '" + name + "' listed twice");
  }
  if (kfolds < 0) throw Error(ErrorKind::config, "kfolds must be >= 0");
  if (!(test_percent >= 0.0 && test_percent < 1.0)) throw Error(ErrorKind::config, "test_percent must be in [0, 1)");
  if (delete_local && !upload) throw Error(ErrorKind::config, "delete_local requires upload");
  if (!plugin.is_object()) throw Error(ErrorKind::config, "plugin must be a mapping");
}

void TagFilter::validate() const {
  if (tags.empty()) throw Error(ErrorKind::config, "tag filter needs at least one tag");
}

bool TagFilter::matches(const std::vector<std::string>& frame_tags) const {
  std::size_t hits = 0;
  for (const auto& t : tags) {
    if (std::find(frame_tags.begin(), frame_tags.end(), t) != frame_tags.end()) ++hits;
  }
  return mode == TagMode::AND ? hits == tags.size() : hits > 0;
}

std::vector<SourceFrame> filter_by_tags(std::span<const SourceFrame> frames, std::span<const TagFilter> filters) {
  for (const auto& f : filters) f.validate();
  std::vector<SourceFrame> out;
  for (const auto& frame : frames) {
    const bool keep = filters.empty() || std::any_of(filters.begin(), filters.end(), [&](const TagFilter& f) {
                        return f.matches(frame.record.tags);
                      });
    if (keep) out.push_back(frame);
  }
  return out;
}

std::size_t test_size(double test_percent, std::size_t n) {
  // The epsilon keeps products such as 0.35 * 10 = 3.4999999999999996 on the half.
  return static_cast<std::size_t>(std::floor(test_percent * static_cast<double>(n) + 0.5 + 1e-9));
}

Splits split(std::span<const std::string> ids, double test_percent, int kfolds, std::uint64_t seed) {
  if (ids.empty()) throw Error(ErrorKind::empty_dataset, "nothing to split");
  if (!(test_percent >= 0.0 && test_percent < 1.0)) throw Error(ErrorKind::invalid_parameter, "test_percent must be in [0, 1)");
  if (kfolds < 0) throw Error(ErrorKind::invalid_parameter, "kfolds must be >= 0");
  const std::size_t n_test = test_size(test_percent, ids.size());
  if (n_test >= ids.size()) {
    throw Error(ErrorKind::invalid_parameter, "test_percent " + std::to_string(test_percent) + " puts all " +
                                                  std::to_string(ids.size()) + " frames in the test split");
  }
  const std::size_t n_train = ids.size() - n_test;
  if (static_cast<std::size_t>(kfolds) > n_train) {
    throw Error(ErrorKind::invalid_parameter, "kfolds " + std::to_string(kfolds) + " exceeds the " +
                                                  std::to_string(n_train) + "-frame training pool");
  }

  std::vector<std::string> order(ids.begin(), ids.end());
  seeded_shuffle(order, seed, kSplitStream);

  Splits s;
  s.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  s.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  s.folds.resize(static_cast<std::size_t>(kfolds));
  for (std::size_t i = 0; i < s.train.size() && kfolds > 0; ++i) {
    s.folds[i % static_cast<std::size_t>(kfolds)].push_back(s.train[i]);
  }
  std::sort(s.test.begin(), s.test.end());
  std::sort(s.train.begin(), s.train.end());
  for (auto& f : s.folds) std::sort(f.begin(), f.end());
  return s;
}

IndexRecord index_record_for(const SourceFrame& frame) {
  const FrameRecord& r = frame.record;
  IndexRecord rec;
  rec.image_id = frame.uid();
  rec.imageset = frame.imageset;
  rec.frame_id = r.frame_id;
  rec.image = "images/" + frame.imageset + "/" + r.image;
  rec.mask = "masks/" + frame.imageset + "/" + r.mask;
  rec.present = r.labels.bbox.has_value();
  if (const auto& b = r.labels.bbox) {
    rec.bbox = std::array<double, 4>{double(b->xmin), double(b->ymin), double(b->xmax + 1), double(b->ymax + 1)};
  }
  rec.pose = r.pose;
  rec.tags = r.tags;
  return rec;
}

json to_json(const IndexRecord& rec) {
  return {{"image_id", rec.image_id},
          {"imageset", rec.imageset},
          {"frame_id", rec.frame_id},
          {"image", rec.image},
          {"mask", rec.mask},
          {"present", rec.present},
          {"bbox", rec.bbox ? json(*rec.bbox) : json(nullptr)},
          {"pose", to_json(rec.pose)},
          {"tags", rec.tags},
          {"split", rec.split},
          {"fold", rec.fold ? json(*rec.fold) : json(nullptr)}};
}

void CopyTransform::write(const ObjectStore& source, std::span<const SourceFrame> frames,
                          std::vector<IndexRecord>& index, const fs::path& dir, const json& /*plugin*/) const {
  std::vector<std::pair<std::string, fs::path>> jobs;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& f = frames[i];
    jobs.emplace_back(f.imageset + "/" + f.record.image, dir / index[i].image);
    jobs.emplace_back(f.imageset + "/" + f.record.mask, dir / index[i].mask);
  }
  for (const auto& j : jobs) fs::create_directories(j.second.parent_path());

  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        write_file_atomic(jobs[i].second, source.get(ObjectKey(BucketRole::imagesets, jobs[i].first)));
      } catch (...) {
        std::lock_guard lock(err_mu);
        if (!first_error) first_error = std::current_exception();
        next = jobs.size();
      }
    }
  };
  std::vector<std::thread> pool;
  const unsigned n = std::max(1u, std::min<unsigned>(threads_, static_cast<unsigned>(jobs.size())));
  for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);

  std::string out;
  for (const auto& rec : index) out += to_json(rec).dump() + "\n";
  write_file_atomic(dir / kIndexName, out);
}

json to_json(const CurationConfig& c) {
  return {{"dataset_name", c.dataset_name},
          {"local", c.local},
          {"imageset", c.imageset},
          {"overwrite_local", c.overwrite_local},
          {"kfolds", c.kfolds},
          {"test_percent", c.test_percent},
          {"upload", c.upload},
          {"delete_local", c.delete_local},
          {"metadata", {{"created_by", c.metadata.created_by}, {"comments", c.metadata.comments}}},
          {"plugin", c.plugin}};
}

json to_json(const FilterPlan& p) {
  json filters = json::array();
  for (const auto& f : p.tag_filters) {
    filters.push_back({{"mode", f.mode == TagMode::AND ? "AND" : "OR"}, {"tags", f.tags}});
  }
  return {{"size_caps", p.size_caps},
          {"tag_filters", filters},
          {"final_cap", p.final_cap ? json(*p.final_cap) : json(nullptr)},
          {"seed", p.seed}};
}

DatasetArtifact curate(const CurationConfig& config, const FilterPlan& plan, const CurationContext& ctx) {
  config.validate();
  for (const auto& f : plan.tag_filters) f.validate();
  for (const auto& [name, cap] : plan.size_caps) {
    if (std::find(config.imageset.begin(), config.imageset.end(), name) == config.imageset.end()) {
      throw Error(ErrorKind::config, "size cap for imageset '" + name + "' which is not a source");
    }
  }
  if (!ctx.source) throw Error(ErrorKind::internal, "curate needs a source store");
  if (config.upload && !ctx.upload_store) throw Error(ErrorKind::config, "upload requested without a storage backend");

  const fs::path final_dir = ctx.output_root / config.dataset_name;
  std::error_code ec;
  if (fs::exists(final_dir, ec) && !config.overwrite_local) {
    throw Error(ErrorKind::refused,
                "dataset " + final_dir.string() + " already exists (set overwrite_local to replace it)");
  }

  // (1) source selection, (2) metadata load
  std::vector<LoadedImageset> sources;
  for (const auto& name : config.imageset) sources.push_back(load_imageset(*ctx.source, name));

  // (3) size filter first, then tags, then the final cap
  std::vector<SourceFrame> pool;
  for (const auto& src : sources) {
    std::size_t take = src.records.size();
    if (const auto it = plan.size_caps.find(src.manifest.name); it != plan.size_caps.end()) {
      take = std::min<std::size_t>(take, it->second);
    }
    for (std::size_t i = 0; i < take; ++i) pool.push_back({src.manifest.name, src.records[i]});
  }
  std::vector<SourceFrame> selected = filter_by_tags(pool, plan.tag_filters);
  if (plan.final_cap && selected.size() > *plan.final_cap) {
    seeded_shuffle(selected, plan.seed, kFinalCapStream);
    selected.resize(*plan.final_cap);
  }
  std::sort(selected.begin(), selected.end(),
            [](const SourceFrame& a, const SourceFrame& b) { return a.uid() < b.uid(); });
  if (selected.empty()) {
    throw Error(ErrorKind::empty_dataset, "no frames left after filtering; refusing to write an empty dataset");
  }

  // (4) split
  std::vector<std::string> ids;
  for (const auto& f : selected) ids.push_back(f.uid());
  DatasetArtifact art;
  art.name = config.dataset_name;
  art.splits = split(ids, config.test_percent, config.kfolds, plan.seed);

  std::map<std::string, std::pair<std::string, std::optional<int>>> placement;
  for (const auto& id : art.splits.train) placement[id].first = "train";
  for (const auto& id : art.splits.test) placement[id].first = "test";
  for (std::size_t k = 0; k < art.splits.folds.size(); ++k) {
    for (const auto& id : art.splits.folds[k]) placement[id].second = static_cast<int>(k);
  }
  for (const auto& f : selected) {
    IndexRecord rec = index_record_for(f);
    std::tie(rec.split, rec.fold) = placement.at(rec.image_id);
    art.index.push_back(std::move(rec));
  }

  // (5) transform into a staging directory
  const fs::path staging = ctx.output_root / (std::string(kTempPrefix) + config.dataset_name + ".staging");
  remove_tree(staging);
  fs::create_directories(staging / "splits", ec);
  if (ec) throw Error(ErrorKind::io, "cannot create " + staging.string() + ": " + ec.message());
  const CopyTransform default_transform;
  const DatasetTransform& transform = ctx.transform ? *ctx.transform : default_transform;
  try {
    transform.write(*ctx.source, selected, art.index, staging, config.plugin);
    write_file_atomic(staging / "splits" / "train.txt", lines(art.splits.train));
    write_file_atomic(staging / "splits" / "test.txt", lines(art.splits.test));
    for (std::size_t k = 0; k < art.splits.folds.size(); ++k) {
      write_file_atomic(staging / "splits" / ("fold_" + std::to_string(k) + ".txt"), lines(art.splits.folds[k]));
    }

    // (6) metadata
    json source_manifests = json::array();
    for (const auto& s : sources) source_manifests.push_back(to_json(s.manifest));
    json folds = json::array();
    for (const auto& f : art.splits.folds) folds.push_back(f.size());
    art.metadata = {{"name", config.dataset_name},
                    {"created_by", config.metadata.created_by},
                    {"comments", config.metadata.comments},
                    {"created", ctx.clock.now_iso()},
                    {"git_commit", ctx.git_commit},
                    {"tool_version", kToolVersion},
                    {"config", to_json(config)},
                    {"filter_plan", to_json(plan)},
                    {"sources", source_manifests},
                    {"counts",
                     {{"selected", selected.size()},
                      {"train", art.splits.train.size()},
                      {"test", art.splits.test.size()},
                      {"folds", folds}}}};
    write_file_atomic(staging / kDatasetMetadataName, art.metadata.dump(2) + "\n");
  } catch (...) {
    std::error_code ignore;
    fs::remove_all(staging, ignore);
    throw;
  }

  // (7) output: swap the staging directory into place, then upload
  remove_tree(final_dir);
  fs::rename(staging, final_dir, ec);
  if (ec) throw Error(ErrorKind::io, "cannot move dataset into " + final_dir.string() + ": " + ec.message());
  art.dir = final_dir;

  if (config.upload) {
    const std::string prefix = config.dataset_name + "/";
    const auto stale = ctx.upload_store->list(BucketRole::datasets, prefix);
    art.uploaded_keys = upload_directory(*ctx.upload_store, BucketRole::datasets, final_dir, prefix);
    const std::set<std::string> fresh(art.uploaded_keys.begin(), art.uploaded_keys.end());
    for (const auto& key : stale) {
      if (!fresh.count(key)) ctx.upload_store->remove(ObjectKey(BucketRole::datasets, key));
    }
    // Verify before anything local is deleted.
    const auto listed = ctx.upload_store->list(BucketRole::datasets, prefix);
    if (std::set<std::string>(listed.begin(), listed.end()) != fresh) {
      throw Error(ErrorKind::transfer, "uploaded key set for " + prefix + " does not match the local dataset");
    }
    for (const auto& key : art.uploaded_keys) {
      const auto remote = ctx.upload_store->get(ObjectKey(BucketRole::datasets, key));
      if (remote != read_file(final_dir / key.substr(prefix.size()))) {
        throw Error(ErrorKind::transfer, "uploaded object " + key + " differs from the local file");
      }
    }
    if (config.delete_local) {
      remove_tree(final_dir);
      art.dir.clear();
    }
  }
  return art;
}

}  // namespace orbitforge
