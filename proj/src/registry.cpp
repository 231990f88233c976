#include "orbitforge/registry.hpp"

#include <algorithm>
#include <cctype>

#include "orbitforge/error.hpp"
#include "orbitforge/image.hpp"

namespace orbitforge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kModelsDir = "models/";

void check_name(const std::string& name) {
  if (name.empty()) throw Error(ErrorKind::invalid_parameter, "model name must be non-empty");
  for (char c : name) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.' || c == '_';
    if (!ok) throw Error(ErrorKind::invalid_parameter, "model name may only contain [A-Za-z0-9._-]: '" + name + "'");
  }
}

bool is_hex_id(const std::string& id) {
  return id.size() == 32 && std::all_of(id.begin(), id.end(), [](char c) {
           return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
         });
}

void put_metadata(ObjectStore& store, const ModelEntry& e) {
  store.put_text(ObjectKey(BucketRole::models, e.metadata_key), to_json(e).dump(2) + "\n");
}

}  // namespace

std::string model_key(const std::string& name, const std::string& id, const std::string& ext) {
  return kModelsDir + name + "_" + id + ext;
}

std::string model_metadata_key(const std::string& name, const std::string& id) {
  return kModelsDir + name + "_" + id + ".json";
}

std::string extras_prefix(const std::string& id) { return "extras/" + id + "/"; }

std::optional<std::string> metadata_key_for_model(const std::string& key) {
  if (!key.starts_with(kModelsDir)) return std::nullopt;
  const std::string file = key.substr(std::string(kModelsDir).size());
  // {name}_{32 hex}{ext}, ext empty or starting with '.'; scan from the right.
  for (std::size_t pos = file.size(); pos-- > 0;) {
    if (file[pos] != '_' || pos + 33 > file.size() || !is_hex_id(file.substr(pos + 1, 32))) continue;
    const std::string rest = file.substr(pos + 33);
    if (pos > 0 && (rest.empty() || rest.front() == '.')) return kModelsDir + file.substr(0, pos + 33) + ".json";
  }
  return std::nullopt;
}

json to_json(const ModelEntry& e) {
  return {{"model_name", e.model_name},
          {"unique_id", e.unique_id},
          {"extension", e.extension},
          {"model_key", e.model_key},
          {"metadata_key", e.metadata_key},
          {"extras_prefix", e.extras_prefix},
          {"extras", e.extras},
          {"incomplete", e.incomplete},
          {"metadata",
           {{"created_by", e.metadata.created_by},
            {"comments", e.metadata.comments},
            {"dataset_name", e.metadata.dataset_name},
            {"timestamp", e.metadata.timestamp},
            {"git_commit", e.metadata.git_commit},
            {"plugin", e.metadata.plugin}}}};
}

ModelEntry model_entry_from_json(const json& j) {
  ModelEntry e;
  e.model_name = j.at("model_name").get<std::string>();
  e.unique_id = j.at("unique_id").get<std::string>();
  e.extension = j.at("extension").get<std::string>();
  e.model_key = j.at("model_key").get<std::string>();
  e.metadata_key = j.at("metadata_key").get<std::string>();
  e.extras_prefix = j.at("extras_prefix").get<std::string>();
  e.extras = j.at("extras").get<std::vector<std::string>>();
  e.incomplete = j.at("incomplete").get<bool>();
  const auto& m = j.at("metadata");
  e.metadata.created_by = m.at("created_by").get<std::string>();
  e.metadata.comments = m.at("comments").get<std::string>();
  e.metadata.dataset_name = m.at("dataset_name").get<std::string>();
  e.metadata.timestamp = m.at("timestamp").get<std::string>();
  e.metadata.git_commit = m.at("git_commit").get<std::string>();
  e.metadata.plugin = m.value("plugin", json::object());
  if (!is_hex_id(e.unique_id)) throw Error(ErrorKind::validation, "unique_id is not 32 hex digits");
  if (e.model_key != model_key(e.model_name, e.unique_id, e.extension) ||
      e.metadata_key != model_metadata_key(e.model_name, e.unique_id)) {
    throw Error(ErrorKind::validation, "model keys do not match name and id");
  }
  return e;
}

ModelEntry register_model(ObjectStore& store, const std::string& name, const fs::path& model_file,
                          ModelMetadata metadata, const RegisterOptions& options) {
  check_name(name);
  std::error_code ec;
  if (!fs::is_regular_file(model_file, ec)) {
    throw Error(ErrorKind::not_found, "model file " + model_file.string() + " does not exist");
  }
  if (options.extras_dir && !fs::is_directory(*options.extras_dir, ec)) {
    throw Error(ErrorKind::not_found, "extras directory " + options.extras_dir->string() + " does not exist");
  }
  const std::string ext = model_file.extension().string();
  if (ext == ".json") throw Error(ErrorKind::invalid_parameter, "a .json model file would collide with its metadata key");

  ModelEntry e;
  e.model_name = name;
  e.extension = ext;
  e.metadata = std::move(metadata);
  for (int attempt = 0;; ++attempt) {
    e.unique_id = options.id_source();
    if (!is_hex_id(e.unique_id)) throw Error(ErrorKind::internal, "generated id is not 32 hex digits");
    const auto keys = store.list(BucketRole::models, kModelsDir);
    const bool taken = !store.list(BucketRole::models, extras_prefix(e.unique_id)).empty() ||
                       std::any_of(keys.begin(), keys.end(), [&](const std::string& k) {
                         return k.find("_" + e.unique_id) != std::string::npos;
                       });
    if (!taken) break;
    if (attempt == 1) throw Error(ErrorKind::refused, "model id collision persisted after regeneration");
  }
  e.model_key = model_key(name, e.unique_id, ext);
  e.metadata_key = model_metadata_key(name, e.unique_id);
  e.extras_prefix = extras_prefix(e.unique_id);

  e.incomplete = true;
  put_metadata(store, e);
  store.put(ObjectKey(BucketRole::models, e.model_key), read_file(model_file));
  if (options.extras_dir) {
    e.extras = upload_directory(store, BucketRole::models, *options.extras_dir, e.extras_prefix);
  }
  e.incomplete = false;
  put_metadata(store, e);
  return e;
}

ModelEntry lookup_model(const ObjectStore& store, const std::string& id) {
  if (!is_hex_id(id)) throw Error(ErrorKind::not_found, "'" + id + "' is not a model id");
  for (const auto& key : store.list(BucketRole::models, kModelsDir)) {
    if (key.ends_with("_" + id + ".json")) {
      return model_entry_from_json(json::parse(store.get_text(ObjectKey(BucketRole::models, key))));
    }
  }
  throw Error(ErrorKind::not_found, "no model with id " + id);
}

std::vector<ListedModel> list_models(const ObjectStore& store) {
  std::vector<ListedModel> out;
  for (const auto& key : store.list(BucketRole::models, kModelsDir)) {
    if (!key.ends_with(".json")) continue;
    ListedModel lm;
    lm.metadata_key = key;
    try {
      lm.entry = model_entry_from_json(json::parse(store.get_text(ObjectKey(BucketRole::models, key))));
    } catch (const json::exception& e) {
      lm.error = e.what();
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::validation) throw;
      lm.error = e.what();
    }
    out.push_back(std::move(lm));
  }
  std::stable_sort(out.begin(), out.end(), [](const ListedModel& a, const ListedModel& b) {
    if (a.entry.has_value() != b.entry.has_value()) return a.entry.has_value();
    if (!a.entry) return a.metadata_key < b.metadata_key;
    if (a.entry->metadata.timestamp != b.entry->metadata.timestamp) {
      return a.entry->metadata.timestamp > b.entry->metadata.timestamp;
    }
    return a.metadata_key < b.metadata_key;
  });
  return out;
}

fs::path download_model(const ObjectStore& store, const std::string& id, const fs::path& dir) {
  const ModelEntry e = lookup_model(store, id);
  const fs::path file = dir / e.model_key.substr(std::string(kModelsDir).size());
  fs::create_directories(dir);
  write_file_atomic(file, store.get(ObjectKey(BucketRole::models, e.model_key)));
  download_prefix(store, BucketRole::models, e.extras_prefix, dir / "extras");
  return file;
}

}  // namespace orbitforge
