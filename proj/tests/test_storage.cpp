#include <doctest.h>

#include <cstdlib>

#include "orbitforge/error.hpp"
#include "orbitforge/rng.hpp"
#include "orbitforge/storage.hpp"
#include "support.hpp"

using namespace orbitforge;
using testsupport::MockS3;
using testsupport::TempDir;

namespace {

RetryPolicy fast_retry(int retries = 3) { return {retries, std::chrono::milliseconds(1)}; }

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::internal;
}

// Exercise the common surface of any store.
void basic_contract(ObjectStore& store) {
  const ObjectKey k(BucketRole::imagesets, "set/a.txt");
  CHECK_FALSE(store.exists(k));
  CHECK(kind_of([&] { store.get(k); }) == ErrorKind::not_found);
  store.put_text(k, "hello");
  CHECK(store.exists(k));
  CHECK(store.get_text(k) == "hello");
  store.put_text(k, "replaced");
  CHECK(store.get_text(k) == "replaced");
  store.put_text({BucketRole::imagesets, "set/b/c.bin"}, std::string(3, '\0'));
  store.put_text({BucketRole::imagesets, "other.txt"}, "x");
  store.put_text({BucketRole::models, "set/a.txt"}, "other bucket");
  CHECK(store.list(BucketRole::imagesets, "set/") == std::vector<std::string>{"set/a.txt", "set/b/c.bin"});
  CHECK(store.list(BucketRole::imagesets, "") == std::vector<std::string>{"other.txt", "set/a.txt", "set/b/c.bin"});
  CHECK(store.list(BucketRole::datasets, "").empty());
  CHECK(store.get(ObjectKey(BucketRole::imagesets, "set/b/c.bin")).size() == 3);
  store.remove(k);
  store.remove(k);
  CHECK_FALSE(store.exists(k));
  CHECK(store.get_text({BucketRole::models, "set/a.txt"}) == "other bucket");
}

}  // namespace

TEST_SUITE("storage") {
  TEST_CASE("key validation") {
    for (std::string bad : {"", "/a", "a/", "a//b", "../a", "a/../b", "a/./b", ".", "x/.~of-tmp"}) {
      CHECK_MESSAGE(kind_of([&] { validate_key(bad); }) == ErrorKind::invalid_parameter, bad);
    }
    validate_key("a/b.c/d_e-f");
    validate_key("with space/é");
    BucketNames names;
    names.models = "imagesets";
    CHECK_THROWS_AS(names.validate(), Error);
  }

  TEST_CASE("local store contract") {
    TempDir dir("local");
    LocalStore store(dir.path());
    basic_contract(store);
    CHECK(std::filesystem::exists(dir.path() / "imagesets" / "set" / "b" / "c.bin"));
  }

  TEST_CASE("local store: a key cannot double as a directory") {
    TempDir dir("localdir");
    LocalStore store(dir.path());
    store.put_text({BucketRole::models, "a/b"}, "1");
    CHECK(kind_of([&] { store.put_text({BucketRole::models, "a"}, "2"); }) == ErrorKind::io);
    CHECK(kind_of([&] { store.put_text({BucketRole::models, "a/b/c"}, "3"); }) == ErrorKind::io);
    CHECK(store.list(BucketRole::models, "") == std::vector<std::string>{"a/b"});
  }

  TEST_CASE("local store hides in-flight temp files") {
    TempDir dir("localtmp");
    LocalStore store(dir.path());
    store.put_text({BucketRole::datasets, "d/x"}, "1");
    testsupport::write_text(dir.path() / "datasets" / "d" / ".~of-partial", "junk");
    CHECK(store.list(BucketRole::datasets, "") == std::vector<std::string>{"d/x"});
  }

  TEST_CASE("mock S3 store contract") {
    MockS3 mock;
    S3Store store(mock.backend(), {}, fast_retry());
    basic_contract(store);
    CHECK(mock.signature_failures() == 0);
  }

  TEST_CASE("listing follows continuation tokens") {
    MockS3 mock;  // two keys per page
    S3Store store(mock.backend(), {}, fast_retry());
    std::vector<std::string> expected;
    for (int i = 0; i < 7; ++i) {
      const std::string key = "p/k" + std::to_string(i);
      store.put_text({BucketRole::datasets, key}, key);
      expected.push_back(key);
    }
    store.put_text({BucketRole::datasets, "q/other"}, "");
    const int before = mock.requests();
    CHECK(store.list(BucketRole::datasets, "p/") == expected);
    CHECK(mock.requests() - before == 4);
  }

  TEST_CASE("keys with reserved characters survive signing") {
    MockS3 mock;
    S3Store store(mock.backend(), {}, fast_retry());
    const std::string key = "odd name/with+plus&amp=eq~tilde$(x).txt";
    store.put_text({BucketRole::models, key}, "v");
    CHECK(store.get_text({BucketRole::models, key}) == "v");
    CHECK(store.list(BucketRole::models, "odd name/") == std::vector<std::string>{key});
    CHECK(mock.signature_failures() == 0);
  }

  TEST_CASE("5xx responses are retried") {
    MockS3 mock;
    S3Store store(mock.backend(), {}, fast_retry(3));
    mock.fail_next(3);
    store.put_text({BucketRole::imagesets, "r"}, "ok");
    CHECK(store.get_text({BucketRole::imagesets, "r"}) == "ok");

    mock.fail_next(4);
    try {
      store.get_text({BucketRole::imagesets, "r"});
      FAIL("expected transfer error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::transfer);
      CHECK(e.status() == 503);
    }
  }

  TEST_CASE("wrong secret is a 403 transfer error, not retried") {
    MockS3 mock;
    S3Store store(mock.backend_with_bad_secret(), {}, fast_retry(3));
    const int before = mock.requests();
    try {
      store.put_text({BucketRole::imagesets, "x"}, "y");
      FAIL("expected transfer error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::transfer);
      CHECK(e.status() == 403);
    }
    CHECK(mock.requests() - before == 1);
    CHECK(mock.signature_failures() == 1);
    CHECK(mock.snapshot()["imagesets"].empty());
  }

  TEST_CASE("unreachable endpoint is a transfer error") {
    S3Backend backend{"http://127.0.0.1:1", "us-east-1", "a", "b", true};
    S3Store store(backend, {}, fast_retry(1));
    CHECK(kind_of([&] { store.exists({BucketRole::models, "x"}); }) == ErrorKind::transfer);
  }

  TEST_CASE("endpoint validation") {
    CHECK(kind_of([] { S3Store(S3Backend{"localhost:9000", "us-east-1", "a", "b", true}); }) == ErrorKind::config);
    CHECK(kind_of([] { S3Store(S3Backend{"http://host/path", "us-east-1", "a", "b", true}); }) == ErrorKind::config);
  }

  TEST_CASE("local and mock stores agree on random operation sequences") {
    TempDir dir("diff");
    MockS3 mock({"AKIDDIFF", "diff/secret", "eu-west-1", 3});
    LocalStore local(dir.path());
    S3Store remote(mock.backend(), {}, fast_retry());
    DeterministicRng rng(77, 0);
    // No key is a directory prefix of another; the local layout cannot hold both.
    const std::vector<std::string> names{"a/b", "a/c", "b/a", "b/b/c", "c.txt", "ab", "a-b", "a.b/x"};
    const BucketRole roles[] = {BucketRole::imagesets, BucketRole::datasets, BucketRole::models};
    for (int step = 0; step < 300; ++step) {
      const BucketRole role = roles[rng.bounded(3)];
      const ObjectKey key(role, names[rng.bounded(names.size())]);
      switch (rng.bounded(5)) {
        case 0:
        case 1: {
          std::string body(rng.bounded(20), '\0');
          for (auto& c : body) c = static_cast<char>(rng.bounded(256));
          local.put_text(key, body);
          remote.put_text(key, body);
          break;
        }
        case 2:
          local.remove(key);
          remote.remove(key);
          break;
        case 3: {
          const std::string prefix = names[rng.bounded(names.size())].substr(0, rng.bounded(3));
          REQUIRE(local.list(role, prefix) == remote.list(role, prefix));
          break;
        }
        default: {
          REQUIRE(local.exists(key) == remote.exists(key));
          if (local.exists(key)) REQUIRE(local.get(key) == remote.get(key));
        }
      }
    }
    for (auto role : roles) {
      const auto keys = local.list(role, "");
      REQUIRE(keys == remote.list(role, ""));
      for (const auto& k : keys) CHECK(local.get({role, k}) == remote.get({role, k}));
    }
    CHECK(mock.signature_failures() == 0);
  }

  TEST_CASE("upload_directory and download_prefix round trip") {
    TempDir src("up"), dst("down");
    testsupport::write_text(src / "x.txt", "1");
    std::filesystem::create_directories(src / "sub");
    testsupport::write_text(src / "sub" / "y.bin", "22");
    MockS3 mock;
    S3Store store(mock.backend(), {}, fast_retry());
    const auto keys = upload_directory(store, BucketRole::datasets, src.path(), "ds/");
    CHECK(keys.size() == 2);
    CHECK(download_prefix(store, BucketRole::datasets, "ds/", dst.path()) == 2);
    CHECK(testsupport::tree(src.path()) == testsupport::tree(dst.path()));
  }

  TEST_CASE("configuration from the environment") {
    TempDir dir("env");
    ::unsetenv("ORBITFORGE_STORAGE_ENDPOINT");
    auto cfg = StoreConfig::from_environment(dir.path());
    REQUIRE(std::holds_alternative<LocalBackend>(cfg.backend));
    CHECK(std::get<LocalBackend>(cfg.backend).root == dir.path());

    ::setenv("ORBITFORGE_STORAGE_ENDPOINT", "http://127.0.0.1:9000", 1);
    ::setenv("ORBITFORGE_ACCESS_KEY_ID", "id", 1);
    ::setenv("ORBITFORGE_SECRET_KEY", "secret", 1);
    ::setenv("ORBITFORGE_BUCKET_MODELS", "my-models", 1);
    ::setenv("ORBITFORGE_RETRY_BASE_MS", "5", 1);
    cfg = StoreConfig::from_environment(dir.path());
    REQUIRE(std::holds_alternative<S3Backend>(cfg.backend));
    CHECK(std::get<S3Backend>(cfg.backend).secret_key == "secret");
    CHECK(cfg.buckets.models == "my-models");
    CHECK(cfg.retry.base_delay == std::chrono::milliseconds(5));

    ::unsetenv("ORBITFORGE_SECRET_KEY");
    CHECK(kind_of([&] { StoreConfig::from_environment(dir.path()); }) == ErrorKind::config);
    for (const char* v : {"ORBITFORGE_STORAGE_ENDPOINT", "ORBITFORGE_ACCESS_KEY_ID", "ORBITFORGE_BUCKET_MODELS",
                          "ORBITFORGE_RETRY_BASE_MS"})
      ::unsetenv(v);
  }

  TEST_CASE("ListObjectsV2 parsing") {
    const auto page = parse_list_objects_v2(
        "<ListBucketResult><IsTruncated>true</IsTruncated><Contents><Key>a&amp;b</Key></Contents>"
        "<Contents><Key>c&#x41;</Key></Contents><NextContinuationToken>tok</NextContinuationToken></ListBucketResult>");
    CHECK(page.keys == std::vector<std::string>{"a&b", "cA"});
    CHECK(page.truncated);
    CHECK(page.continuation_token == "tok");
  }
}
