#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "orbitforge/storage.hpp"
#include "orbitforge/util.hpp"

namespace orbitforge {

struct ModelMetadata {
  std::string created_by;
  std::string comments;
  std::string dataset_name;
  std::string timestamp;
  std::string git_commit = "unknown";
  nlohmann::json plugin = nlohmann::json::object();
};

struct ModelEntry {
  std::string model_name;
  std::string unique_id;     // 32 lowercase hex digits
  std::string extension;     // model file extension, kept verbatim (may be empty)
  std::string model_key;     // models/{name}_{id}{ext}
  std::string metadata_key;  // models/{name}_{id}.json
  std::string extras_prefix; // extras/{id}/
  std::vector<std::string> extras;  // keys under extras_prefix
  ModelMetadata metadata;
  bool incomplete = false;
};

// Key layout inside the models bucket.
std::string model_key(const std::string& name, const std::string& id, const std::string& ext);
std::string model_metadata_key(const std::string& name, const std::string& id);
std::string extras_prefix(const std::string& id);
// Metadata key for a stored model key: swap the extension for ".json".
std::optional<std::string> metadata_key_for_model(const std::string& model_key);

nlohmann::json to_json(const ModelEntry& entry);
ModelEntry model_entry_from_json(const nlohmann::json& j);

struct RegisterOptions {
  std::optional<std::filesystem::path> extras_dir;
  std::function<std::string()> id_source = random_hex_id;  // replaceable for collision tests
};

// Uploads the model file, its metadata and the extras tree. The metadata is
// written first with "incomplete": true and rewritten once everything landed.
ModelEntry register_model(ObjectStore& store, const std::string& name, const std::filesystem::path& model_file,
                          ModelMetadata metadata, const RegisterOptions& options = {});

ModelEntry lookup_model(const ObjectStore& store, const std::string& id);

struct ListedModel {
  std::string metadata_key;
  std::optional<ModelEntry> entry;  // nullopt when the metadata did not parse
  std::string error;
};

// Newest first by metadata timestamp; unparseable entries go last, by key.
std::vector<ListedModel> list_models(const ObjectStore& store);

// Writes the model file and extras/ under `dir`; returns the model file path.
std::filesystem::path download_model(const ObjectStore& store, const std::string& id,
                                     const std::filesystem::path& dir);

}  // namespace orbitforge
