#include <algorithm>
#include <cstdlib>

#include "orbitforge/error.hpp"
#include "orbitforge/image.hpp"
#include "orbitforge/storage.hpp"

namespace orbitforge {

namespace fs = std::filesystem;

namespace {

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

void validate_prefix(std::string_view prefix) {
  std::size_t start = 0;
  while (start < prefix.size()) {
    const auto end = prefix.find('/', start);
    const auto seg = prefix.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    if (seg == "..") throw Error(ErrorKind::invalid_parameter, "'..' segment in prefix");
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
}

void prune_empty_dirs(fs::path dir, const fs::path& stop) {
  std::error_code ec;
  while (dir != stop && dir.string().size() > stop.string().size() && fs::is_empty(dir, ec) && !ec) {
    fs::remove(dir, ec);
    dir = dir.parent_path();
  }
}

}  // namespace

const char* to_string(BucketRole role) {
  switch (role) {
    case BucketRole::imagesets: return "imagesets";
    case BucketRole::datasets: return "datasets";
    case BucketRole::models: return "models";
  }
  return "?";
}

void validate_key(std::string_view key) {
  if (key.empty()) throw Error(ErrorKind::invalid_parameter, "empty object key");
  std::size_t start = 0;
  for (;;) {
    const auto end = key.find('/', start);
    const auto seg = key.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    if (seg.empty()) throw Error(ErrorKind::invalid_parameter, "empty segment in key '" + std::string(key) + "'");
    if (seg == "." || seg == "..") {
      throw Error(ErrorKind::invalid_parameter, "dot segment in key '" + std::string(key) + "'");
    }
    // Local stores hide these as in-flight temp files.
    if (seg.starts_with(kTempPrefix)) {
      throw Error(ErrorKind::invalid_parameter, "reserved segment prefix in key '" + std::string(key) + "'");
    }
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
}

ObjectKey::ObjectKey(BucketRole role, std::string key) : role_(role), key_(std::move(key)) { validate_key(key_); }

const std::string& BucketNames::name(BucketRole role) const {
  switch (role) {
    case BucketRole::imagesets: return imagesets;
    case BucketRole::datasets: return datasets;
    case BucketRole::models: return models;
  }
  return imagesets;
}

void BucketNames::validate() const {
  if (imagesets.empty() || datasets.empty() || models.empty()) {
    throw Error(ErrorKind::config, "bucket names must be non-empty");
  }
  if (imagesets == datasets || imagesets == models || datasets == models) {
    throw Error(ErrorKind::config, "bucket names must be distinct");
  }
}

StoreConfig StoreConfig::from_environment(const fs::path& default_local_root) {
  StoreConfig cfg;
  if (auto v = env("ORBITFORGE_BUCKET_IMAGESETS")) cfg.buckets.imagesets = *v;
  if (auto v = env("ORBITFORGE_BUCKET_DATASETS")) cfg.buckets.datasets = *v;
  if (auto v = env("ORBITFORGE_BUCKET_MODELS")) cfg.buckets.models = *v;
  if (auto v = env("ORBITFORGE_RETRY_BASE_MS")) {
    char* end = nullptr;
    const long long ms = std::strtoll(v->c_str(), &end, 10);
    if (v->empty() || *end != '\0' || ms < 0) {
      throw Error(ErrorKind::config, "ORBITFORGE_RETRY_BASE_MS must be a non-negative integer, got '" + *v + "'");
    }
    cfg.retry.base_delay = std::chrono::milliseconds(ms);
  }

  const auto endpoint = env("ORBITFORGE_STORAGE_ENDPOINT");
  if (endpoint && (endpoint->starts_with("http://") || endpoint->starts_with("https://"))) {
    S3Backend s3;
    s3.endpoint = *endpoint;
    s3.access_key_id = env("ORBITFORGE_ACCESS_KEY_ID").value_or("");
    s3.secret_key = env("ORBITFORGE_SECRET_KEY").value_or("");
    s3.region = env("ORBITFORGE_REGION").value_or("us-east-1");
    if (auto v = env("ORBITFORGE_PATH_STYLE")) s3.path_style = *v != "0" && *v != "false";
    if (s3.access_key_id.empty() || s3.secret_key.empty()) {
      throw Error(ErrorKind::config,
                  "S3 endpoint " + s3.endpoint + " needs ORBITFORGE_ACCESS_KEY_ID and ORBITFORGE_SECRET_KEY");
    }
    cfg.backend = s3;
  } else if (endpoint) {
    std::string root = *endpoint;
    if (root.starts_with("file://")) root = root.substr(7);
    cfg.backend = LocalBackend{root};
  } else {
    cfg.backend = LocalBackend{default_local_root};
  }
  cfg.buckets.validate();
  return cfg;
}

void ObjectStore::put_text(const ObjectKey& key, std::string_view text) {
  put(key, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string ObjectStore::get_text(const ObjectKey& key) const {
  const auto bytes = get(key);
  return std::string(bytes.begin(), bytes.end());
}

LocalStore::LocalStore(fs::path root, BucketNames buckets) : root_(std::move(root)) {
  buckets.validate();
  for (auto role : {BucketRole::imagesets, BucketRole::datasets, BucketRole::models}) {
    dirs_[static_cast<int>(role)] = root_ / buckets.name(role);
  }
}

LocalStore LocalStore::for_bucket_dir(BucketRole role, const fs::path& dir) {
  LocalStore store(dir.parent_path().empty() ? fs::path(".") : dir.parent_path());
  for (auto other : {BucketRole::imagesets, BucketRole::datasets, BucketRole::models}) {
    store.dirs_[static_cast<int>(other)] = dir.parent_path() / (".unused-" + std::string(to_string(other)));
  }
  store.dirs_[static_cast<int>(role)] = dir;
  return store;
}

fs::path LocalStore::bucket_dir(BucketRole role) const { return dirs_[static_cast<int>(role)]; }

fs::path LocalStore::path_of(const ObjectKey& key) const { return bucket_dir(key.role()) / fs::path(key.key()); }

void LocalStore::put(const ObjectKey& key, std::span<const std::uint8_t> bytes) {
  try {
    write_file_atomic(path_of(key), bytes);
  } catch (const fs::filesystem_error& e) {
    throw Error(ErrorKind::io, e.what());
  }
}

std::vector<std::uint8_t> LocalStore::get(const ObjectKey& key) const {
  const fs::path p = path_of(key);
  std::error_code ec;
  if (!fs::is_regular_file(p, ec)) {
    throw Error(ErrorKind::not_found, std::string(to_string(key.role())) + "/" + key.key() + " not found");
  }
  return read_file(p);
}

std::vector<std::string> LocalStore::list(BucketRole role, std::string_view prefix) const {
  validate_prefix(prefix);
  const fs::path base = bucket_dir(role);
  // Walk only the deepest directory implied by the prefix.
  const auto slash = prefix.rfind('/');
  const fs::path start = slash == std::string_view::npos ? base : base / fs::path(std::string(prefix.substr(0, slash)));
  std::vector<std::string> keys;
  std::error_code ec;
  if (!fs::is_directory(start, ec)) return keys;
  for (auto it = fs::recursive_directory_iterator(start, ec); !ec && it != fs::recursive_directory_iterator();
       it.increment(ec)) {
    if (!it->is_regular_file()) continue;
    if (it->path().filename().string().starts_with(kTempPrefix)) continue;
    std::string key = fs::relative(it->path(), base).generic_string();
    if (key.starts_with(prefix)) keys.push_back(std::move(key));
  }
  if (ec) throw Error(ErrorKind::io, "listing " + start.string() + ": " + ec.message());
  std::sort(keys.begin(), keys.end());
  return keys;
}

bool LocalStore::exists(const ObjectKey& key) const {
  std::error_code ec;
  return fs::is_regular_file(path_of(key), ec);
}

void LocalStore::remove(const ObjectKey& key) {
  const fs::path p = path_of(key);
  std::error_code ec;
  fs::remove(p, ec);
  if (ec) throw Error(ErrorKind::io, "delete " + p.string() + ": " + ec.message());
  prune_empty_dirs(p.parent_path(), bucket_dir(key.role()));
}

std::string LocalStore::describe() const { return "local:" + root_.string(); }

std::unique_ptr<ObjectStore> open_store(const StoreConfig& config) {
  config.buckets.validate();
  if (const auto* local = std::get_if<LocalBackend>(&config.backend)) {
    return std::make_unique<LocalStore>(local->root, config.buckets);
  }
  return std::make_unique<S3Store>(std::get<S3Backend>(config.backend), config.buckets, config.retry);
}

std::vector<std::string> upload_directory(ObjectStore& store, BucketRole role, const fs::path& dir,
                                          const std::string& prefix) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw Error(ErrorKind::io, "not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && !entry.path().filename().string().starts_with(kTempPrefix)) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<std::string> keys;
  for (const auto& f : files) {
    const std::string key = prefix + fs::relative(f, dir).generic_string();
    store.put(ObjectKey(role, key), read_file(f));
    keys.push_back(key);
  }
  return keys;
}

std::size_t download_prefix(const ObjectStore& store, BucketRole role, const std::string& prefix, const fs::path& dir) {
  const auto keys = store.list(role, prefix);
  for (const auto& key : keys) {
    write_file_atomic(dir / fs::path(key.substr(prefix.size())), store.get(ObjectKey(role, key)));
  }
  return keys.size();
}

}  // namespace orbitforge
