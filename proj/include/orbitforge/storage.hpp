#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace orbitforge {

// One bucket per pipeline stage.
enum class BucketRole { imagesets, datasets, models };

const char* to_string(BucketRole role);

// Slash-separated key inside one bucket: no empty, "." or ".." segments and
// no segment starting with kTempPrefix.
class ObjectKey {
 public:
  ObjectKey(BucketRole role, std::string key);

  BucketRole role() const { return role_; }
  const std::string& key() const { return key_; }

 private:
  BucketRole role_;
  std::string key_;
};

// Throws invalid_parameter unless `key` satisfies the ObjectKey rules.
void validate_key(std::string_view key);

struct BucketNames {
  std::string imagesets = "imagesets";
  std::string datasets = "datasets";
  std::string models = "models";

  const std::string& name(BucketRole role) const;
  void validate() const;
};

struct LocalBackend {
  std::filesystem::path root;
};

struct S3Backend {
  std::string endpoint;  // scheme://host[:port]
  std::string region = "us-east-1";
  std::string access_key_id;
  std::string secret_key;
  bool path_style = true;
};

// Initial attempt plus `retries` more, waiting base_delay * 2^k before retry k.
struct RetryPolicy {
  int retries = 3;
  std::chrono::milliseconds base_delay{1000};
};

struct StoreConfig {
  std::variant<LocalBackend, S3Backend> backend;
  BucketNames buckets;
  RetryPolicy retry;

  // ORBITFORGE_STORAGE_ENDPOINT selects the backend: http(s) URLs use S3 with
  // ORBITFORGE_ACCESS_KEY_ID / ORBITFORGE_SECRET_KEY / ORBITFORGE_REGION,
  // anything else (or unset) is a local root. Optional overrides:
  // ORBITFORGE_BUCKET_{IMAGESETS,DATASETS,MODELS}, ORBITFORGE_PATH_STYLE (0/1),
  // ORBITFORGE_RETRY_BASE_MS.
  static StoreConfig from_environment(const std::filesystem::path& default_local_root);
};

class ObjectStore {
 public:
  virtual ~ObjectStore() = default;

  virtual void put(const ObjectKey& key, std::span<const std::uint8_t> bytes) = 0;
  // Missing keys raise not_found.
  virtual std::vector<std::uint8_t> get(const ObjectKey& key) const = 0;
  // Keys starting with `prefix`, sorted lexicographically.
  virtual std::vector<std::string> list(BucketRole role, std::string_view prefix) const = 0;
  virtual bool exists(const ObjectKey& key) const = 0;
  // Deleting a missing key is not an error.
  virtual void remove(const ObjectKey& key) = 0;
  virtual std::string describe() const = 0;

  void put_text(const ObjectKey& key, std::string_view text);
  std::string get_text(const ObjectKey& key) const;
};

// {root}/{bucket}/{key}; put writes a hidden temp file and renames it.
// A key cannot also be a directory prefix of another key ("a" and "a/b");
// the second put fails with an io error.
class LocalStore final : public ObjectStore {
 public:
  LocalStore(std::filesystem::path root, BucketNames buckets = {});
  // Store whose `role` bucket is exactly `dir` (other buckets sit beside it, unused).
  static LocalStore for_bucket_dir(BucketRole role, const std::filesystem::path& dir);

  void put(const ObjectKey& key, std::span<const std::uint8_t> bytes) override;
  std::vector<std::uint8_t> get(const ObjectKey& key) const override;
  std::vector<std::string> list(BucketRole role, std::string_view prefix) const override;
  bool exists(const ObjectKey& key) const override;
  void remove(const ObjectKey& key) override;
  std::string describe() const override;

  std::filesystem::path path_of(const ObjectKey& key) const;
  std::filesystem::path bucket_dir(BucketRole role) const;

 private:
  std::filesystem::path root_;
  std::array<std::filesystem::path, 3> dirs_;
};

// S3 REST subset over HTTP(S), signed with SigV4. Safe for concurrent use;
// every call opens its own connection.
class S3Store final : public ObjectStore {
 public:
  S3Store(S3Backend backend, BucketNames buckets = {}, RetryPolicy retry = {});

  void put(const ObjectKey& key, std::span<const std::uint8_t> bytes) override;
  std::vector<std::uint8_t> get(const ObjectKey& key) const override;
  std::vector<std::string> list(BucketRole role, std::string_view prefix) const override;
  bool exists(const ObjectKey& key) const override;
  void remove(const ObjectKey& key) override;
  std::string describe() const override;

  struct Response {
    int status = 0;
    std::string body;
  };

 private:
  Response send(const std::string& method, BucketRole role, const std::string& key,
                const std::vector<std::pair<std::string, std::string>>& query, std::span<const std::uint8_t> body) const;

  S3Backend backend_;
  BucketNames buckets_;
  RetryPolicy retry_;
  std::string scheme_host_port_;
  std::string host_;  // host[:port] as sent in the Host header
};

std::unique_ptr<ObjectStore> open_store(const StoreConfig& config);

// Copies every regular file below `dir` to `{prefix}{relative path}`; returns the keys written.
std::vector<std::string> upload_directory(ObjectStore& store, BucketRole role, const std::filesystem::path& dir,
                                          const std::string& prefix);
// Writes every key under `prefix` to `dir/{key without prefix}`; returns the count.
std::size_t download_prefix(const ObjectStore& store, BucketRole role, const std::string& prefix,
                            const std::filesystem::path& dir);

// Parses <Key>, <IsTruncated> and <NextContinuationToken> from a ListObjectsV2 body.
struct ListPage {
  std::vector<std::string> keys;
  bool truncated = false;
  std::string continuation_token;
};
ListPage parse_list_objects_v2(std::string_view xml);

}  // namespace orbitforge
