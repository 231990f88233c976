// orbitforge: synthetic imagery, dataset curation and detector evaluation.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "orbitforge/config.hpp"
#include "orbitforge/curation.hpp"
#include "orbitforge/error.hpp"
#include "orbitforge/evaluation.hpp"
#include "orbitforge/generate.hpp"
#include "orbitforge/imageset.hpp"
#include "orbitforge/registry.hpp"
#include "orbitforge/storage.hpp"
#include "orbitforge/util.hpp"

namespace fs = std::filesystem;
using namespace orbitforge;

namespace {

struct Globals {
  fs::path work_dir = "orbitforge-work";
  std::optional<std::string> fixed_clock;
  bool quiet = false;

  fs::path imagesets_dir() const { return work_dir / "imagesets"; }
  fs::path datasets_dir() const { return work_dir / "datasets"; }

  Clock clock() const {
    Clock c = Clock::from_environment();
    if (fixed_clock) c.fixed = fixed_clock;
    return c;
  }

  // Opened on demand so that validation failures never touch storage.
  ObjectStore& store() {
    if (!store_) store_ = open_store(StoreConfig::from_environment(work_dir / "store"));
    return *store_;
  }

 private:
  std::unique_ptr<ObjectStore> store_;
};

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::not_found, "cannot open " + path.string());
  return in;
}

int cmd_generate(Globals& g, const fs::path& config_path) {
  const GenerationConfig config = load_generation_config(config_path);
  GenerateOptions opts;
  opts.output_root = g.imagesets_dir();
  opts.clock = g.clock();
  opts.git_commit = git_commit();
  if (config.upload) opts.upload_store = &g.store();
  if (!g.quiet) {
    opts.progress = [](std::size_t done, std::size_t total, const std::string& id) {
      std::fprintf(stderr, "[%zu/%zu] %s\n", done, total, id.c_str());
    };
  }
  GenerateResult result;
  try {
    result = generate_imageset(config, opts);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::transfer) {
      std::cerr << "upload failed; the imageset is kept in " << (opts.output_root / config.imageset_name).string()
                << "\n";
    }
    throw;
  }
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << (result.dir / kManifestName).string() << "\n"
            << result.manifest.frame_count << " frames\n";
  if (config.upload) std::cout << "uploaded " << result.uploaded_keys.size() << " objects\n";
  return 0;
}

int cmd_curate(Globals& g, const fs::path& config_path, const std::optional<fs::path>& plan_path) {
  const CurationConfig config = load_curation_config(config_path);
  const FilterPlan plan = plan_path ? load_filter_plan(*plan_path) : FilterPlan{};

  std::optional<LocalStore> local_source;
  CurationContext ctx;
  if (config.local) {
    local_source.emplace(LocalStore::for_bucket_dir(BucketRole::imagesets, g.imagesets_dir()));
    ctx.source = &*local_source;
  } else {
    ctx.source = &g.store();
  }
  ctx.output_root = g.datasets_dir();
  if (config.upload) ctx.upload_store = &g.store();
  ctx.clock = g.clock();
  ctx.git_commit = git_commit();

  DatasetArtifact art;
  try {
    art = curate(config, plan, ctx);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::transfer) {
      std::cerr << "upload failed; the dataset is kept in " << (ctx.output_root / config.dataset_name).string()
                << "\n";
    }
    throw;
  }
  std::cout << "dataset " << art.name << ": " << art.index.size() << " frames (train " << art.splits.train.size()
            << ", test " << art.splits.test.size();
  if (!art.splits.folds.empty()) std::cout << ", " << art.splits.folds.size() << " folds";
  std::cout << ")\n";
  if (!art.dir.empty()) std::cout << art.dir.string() << "\n";
  if (config.upload) std::cout << "uploaded " << art.uploaded_keys.size() << " objects\n";
  return 0;
}

struct EvalArgs {
  fs::path gt;
  fs::path det;
  std::optional<double> conf;
  bool sweep = false;
  double iou = kDefaultIouThreshold;
  bool json = false;
  std::optional<fs::path> csv;
};

int cmd_eval(const EvalArgs& a) {
  auto gt_in = open_input(a.gt);
  auto det_in = open_input(a.det);
  const auto gts = read_ground_truth_jsonl(gt_in, a.gt.string());
  const auto dets = read_detections_jsonl(det_in, a.det.string());
  if (!(a.iou >= 0.0 && a.iou <= 1.0)) throw Error(ErrorKind::config, "--iou-threshold must be in [0, 1]");

  if (a.sweep) {
    const auto grid = default_threshold_grid();
    const SweepResult s = sweep_threshold(gts, dets, a.iou, grid);
    if (a.csv) write_file_atomic(*a.csv, sweep_csv(s));
    if (a.json) {
      std::cout << nlohmann::json{{"best_threshold", s.best_threshold}, {"report", to_json(s.best)}}.dump(2) << "\n";
    } else {
      std::cout << "best confidence threshold " << s.best_threshold << "\n" << format_report(s.best);
    }
    return 0;
  }
  const double conf = a.conf.value_or(0.5);
  if (!(conf >= 0.0 && conf <= 1.0)) throw Error(ErrorKind::config, "--conf-threshold must be in [0, 1]");
  const EvalReport r = evaluate(gts, dets, conf, a.iou);
  std::cout << (a.json ? to_json(r).dump(2) + "\n" : format_report(r));
  return 0;
}

int cmd_imageset_list(Globals& g, bool local) {
  std::optional<LocalStore> local_store;
  const ObjectStore* store = nullptr;
  if (local) {
    local_store.emplace(LocalStore::for_bucket_dir(BucketRole::imagesets, g.imagesets_dir()));
    store = &*local_store;
  } else {
    store = &g.store();
  }
  std::cout << std::left << std::setw(32) << "NAME" << std::setw(8) << "FRAMES" << std::setw(20) << "AUTHOR"
            << "CREATED\n";
  for (const auto& name : list_imagesets(*store)) {
    const auto text = store->get_text(ObjectKey(BucketRole::imagesets, name + "/" + kManifestName));
    try {
      const auto m = manifest_from_json(nlohmann::json::parse(text));
      std::cout << std::setw(32) << name << std::setw(8) << m.frame_count << std::setw(20) << m.author << m.created
                << "\n";
    } catch (const std::exception&) {
      std::cout << std::setw(32) << name << "(unreadable manifest)\n";
    }
  }
  return 0;
}

int cmd_model_list(Globals& g) {
  std::cout << std::left << std::setw(34) << "ID" << std::setw(20) << "NAME" << std::setw(26) << "TIMESTAMP"
            << std::setw(24) << "DATASET" << "STATUS\n";
  for (const auto& m : list_models(g.store())) {
    if (!m.entry) {
      std::cout << std::setw(34) << "-" << std::setw(20) << "-" << std::setw(26) << "-" << std::setw(24) << "-"
                << "parse-error " << m.metadata_key << "\n";
      continue;
    }
    const auto& e = *m.entry;
    std::cout << std::setw(34) << e.unique_id << std::setw(20) << e.model_name << std::setw(26) << e.metadata.timestamp
              << std::setw(24) << e.metadata.dataset_name << (e.incomplete ? "incomplete" : "ok") << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"orbitforge: synthetic spacecraft imagery, dataset curation and detector evaluation"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--work-dir", g.work_dir, "Local working directory (imagesets/, datasets/)")
      ->envname("ORBITFORGE_WORK_DIR");
  app.add_option("--fixed-clock", g.fixed_clock, "Use this timestamp for every clock reading");
  app.add_flag("-q,--quiet", g.quiet, "No per-frame progress");

  std::function<int()> run;

  auto* gen = app.add_subcommand("generate", "Render an imageset from a YAML configuration");
  fs::path gen_config;
  gen->add_option("config", gen_config, "Generation YAML")->required();
  gen->callback([&] { run = [&] { return cmd_generate(g, gen_config); }; });

  auto* cur = app.add_subcommand("curate", "Build a dataset from imagesets");
  fs::path cur_config;
  std::optional<fs::path> cur_plan;
  cur->add_option("config", cur_config, "Dataset YAML")->required();
  cur->add_option("filter_plan", cur_plan, "Filter plan YAML (size caps, tag filters, final cap, seed)");
  cur->callback([&] { run = [&] { return cmd_curate(g, cur_config, cur_plan); }; });

  auto* ev = app.add_subcommand("eval", "Score detections against ground truth");
  EvalArgs ea;
  ev->add_option("ground_truth", ea.gt, "Ground-truth JSON lines")->required();
  ev->add_option("detections", ea.det, "Detection JSON lines")->required();
  auto* conf_opt = ev->add_option("--conf-threshold", ea.conf, "Confidence threshold (default 0.5)");
  auto* sweep_opt = ev->add_flag("--sweep", ea.sweep, "Pick the accuracy-maximizing threshold on 0.00..0.95");
  conf_opt->excludes(sweep_opt);
  ev->add_option("--iou-threshold", ea.iou, "IoU needed for a true positive")->capture_default_str();
  ev->add_flag("--json", ea.json, "Print the report as JSON");
  ev->add_option("--csv", ea.csv, "With --sweep, write the curve as CSV");
  ev->callback([&] { run = [&] { return cmd_eval(ea); }; });

  auto* is = app.add_subcommand("imageset", "List, upload or download imagesets");
  is->require_subcommand(1);
  bool is_local = false;
  auto* is_list = is->add_subcommand("list", "List imagesets in the store");
  is_list->add_flag("--local", is_local, "List the working directory instead");
  is_list->callback([&] { run = [&] { return cmd_imageset_list(g, is_local); }; });
  std::string is_name;
  auto* is_up = is->add_subcommand("upload", "Upload an imageset from the working directory");
  is_up->add_option("name", is_name)->required();
  is_up->callback([&] {
    run = [&] {
      const auto keys = upload_imageset(g.store(), g.imagesets_dir(), is_name);
      std::cout << "uploaded " << keys.size() << " objects to " << g.store().describe() << "\n";
      return 0;
    };
  });
  auto* is_down = is->add_subcommand("download", "Download an imageset into the working directory");
  is_down->add_option("name", is_name)->required();
  is_down->callback([&] {
    run = [&] {
      const auto n = download_imageset(g.store(), is_name, g.imagesets_dir());
      std::cout << "downloaded " << n << " objects to " << (g.imagesets_dir() / is_name).string() << "\n";
      return 0;
    };
  });

  auto* md = app.add_subcommand("model", "Register, list or download trained models");
  md->require_subcommand(1);
  std::string m_name;
  fs::path m_file;
  std::optional<fs::path> m_extras;
  ModelMetadata m_meta;
  auto* m_reg = md->add_subcommand("register", "Store a model file with a generated id");
  m_reg->add_option("name", m_name)->required();
  m_reg->add_option("model_file", m_file)->required();
  m_reg->add_option("--extras", m_extras, "Directory mirrored under extras/{id}/");
  m_reg->add_option("--created-by", m_meta.created_by);
  m_reg->add_option("--comments", m_meta.comments);
  m_reg->add_option("--dataset", m_meta.dataset_name);
  m_reg->callback([&] {
    run = [&] {
      m_meta.timestamp = g.clock().now_iso();
      m_meta.git_commit = git_commit();
      RegisterOptions ro;
      ro.extras_dir = m_extras;
      const ModelEntry e = register_model(g.store(), m_name, m_file, m_meta, ro);
      std::cout << e.unique_id << "\n" << e.model_key << "\n" << e.metadata_key << "\n";
      return 0;
    };
  });
  auto* m_list = md->add_subcommand("list", "List registered models, newest first");
  m_list->callback([&] { run = [&] { return cmd_model_list(g); }; });
  std::string m_id;
  fs::path m_out = ".";
  auto* m_down = md->add_subcommand("download", "Fetch a model and its extras");
  m_down->add_option("id", m_id)->required();
  m_down->add_option("--out", m_out, "Destination directory")->capture_default_str();
  m_down->callback([&] {
    run = [&] {
      std::cout << download_model(g.store(), m_id, m_out).string() << "\n";
      return 0;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    return run ? run() : kExitInternal;
  } catch (const Error& e) {
    std::cerr << "orbitforge: " << to_string(e.kind()) << ": " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "orbitforge: io: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "orbitforge: internal: " << e.what() << "\n";
    return kExitInternal;
  }
}
