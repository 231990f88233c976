#include "orbitforge/generate.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <set>
#include <thread>

#include "orbitforge/compositor.hpp"
#include "orbitforge/error.hpp"
#include "orbitforge/mesh.hpp"
#include "orbitforge/renderer.hpp"
#include "orbitforge/rng.hpp"
#include "orbitforge/sequences.hpp"

namespace orbitforge {

GenerateResult generate_imageset(const GenerationConfig& config, const GenerateOptions& options) {
  config.validate();
  if (config.upload && !options.upload_store) throw Error(ErrorKind::config, "upload requested without a storage backend");

  const TriangleMesh mesh = load_mesh(config.mesh);
  const std::vector<ScenePose> poses = build_sequence(config.sequence, config.ranges);
  const AugmentationPipeline pipeline(config.augmentations);

  ImagesetWriter writer(options.output_root, config.imageset_name, config.overwrite);
  std::vector<FrameRecord> records(poses.size());

  std::mutex mu;  // guards warnings, progress and first_error
  std::vector<std::string> warnings;
  std::exception_ptr first_error;
  std::size_t done = 0;
  std::atomic<std::size_t> next{0};

  auto work = [&] {
    for (std::size_t i = next++; i < poses.size(); i = next++) {
      try {
        const ResolvedScene scene = resolve_scene(poses[i], config.camera);
        const RenderOutput out = render(mesh, scene, config.camera);
        DeterministicRng rng(config.sequence.seed, kAugmentationStreamBase | i);
        AugmentResult aug = pipeline.apply(out, rng);

        FrameRecord rec = FrameRecord::make(config.sequence.name, i);
        rec.timestamp = options.clock.now_iso();
        std::set<std::string> tags(config.tags.begin(), config.tags.end());
        tags.insert(aug.tags.begin(), aug.tags.end());
        rec.tags.assign(tags.begin(), tags.end());
        rec.augmentations = aug.fired;
        rec.pose = poses[i];
        rec.labels = derive_labels(out, scene, config.camera, config.keypoints);
        writer.write_frame(rec, aug.color, out);
        records[i] = std::move(rec);

        std::lock_guard lock(mu);
        for (auto& w : aug.warnings) warnings.push_back(records[i].frame_id + ": " + w);
        ++done;
        if (options.progress) options.progress(done, poses.size(), records[i].frame_id);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!first_error) first_error = std::current_exception();
        next = poses.size();
      }
    }
  };

  const unsigned n = std::max(1u, std::min<unsigned>(config.workers, static_cast<unsigned>(poses.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);

  ImagesetManifest manifest;
  manifest.name = config.imageset_name;
  manifest.author = config.author;
  manifest.created = options.clock.now_iso();
  manifest.git_commit = options.git_commit;
  manifest.seed = config.sequence.seed;
  manifest.camera = config.camera;

  GenerateResult result;
  result.manifest = writer.commit(std::move(manifest), records);
  result.dir = writer.dir();
  result.warnings = std::move(warnings);
  if (config.upload) {
    result.uploaded_keys = upload_imageset(*options.upload_store, options.output_root, config.imageset_name);
  }
  return result;
}

}  // namespace orbitforge
