#include <doctest.h>

#include "orbitforge/error.hpp"
#include "orbitforge/registry.hpp"
#include "support.hpp"

using namespace orbitforge;
using testsupport::TempDir;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::internal;
}

const std::string kIdA = "ab" + std::string(28, '0') + "ef";
const std::string kIdB = std::string(31, '1') + "2";

std::function<std::string()> ids(std::vector<std::string> seq) {
  auto state = std::make_shared<std::pair<std::vector<std::string>, std::size_t>>(std::move(seq), 0);
  return [state] { return state->first.at(state->second++); };
}

ModelMetadata meta(const std::string& ts) {
  ModelMetadata m;
  m.created_by = "tester";
  m.comments = "c";
  m.dataset_name = "ds";
  m.timestamp = ts;
  m.plugin = {{"lr", 0.001}, {"arch", "ssd"}};
  return m;
}

// Forwards to a LocalStore but fails puts whose key contains `poison`.
class FlakyStore final : public ObjectStore {
 public:
  FlakyStore(LocalStore& inner, std::string poison) : inner_(inner), poison_(std::move(poison)) {}
  void put(const ObjectKey& key, std::span<const std::uint8_t> bytes) override {
    if (key.key().find(poison_) != std::string::npos) throw Error(ErrorKind::transfer, "injected failure", 500);
    inner_.put(key, bytes);
  }
  std::vector<std::uint8_t> get(const ObjectKey& key) const override { return inner_.get(key); }
  std::vector<std::string> list(BucketRole role, std::string_view prefix) const override {
    return inner_.list(role, prefix);
  }
  bool exists(const ObjectKey& key) const override { return inner_.exists(key); }
  void remove(const ObjectKey& key) override { inner_.remove(key); }
  std::string describe() const override { return "flaky"; }

 private:
  LocalStore& inner_;
  std::string poison_;
};

struct Fixture {
  TempDir dir{"reg"};
  LocalStore store{dir / "store"};
  std::filesystem::path model = dir / "model.bin";
  Fixture() { testsupport::write_text(model, "weights"); }
};

}  // namespace

TEST_SUITE("registry") {
  TEST_CASE("key templates") {
    CHECK(model_key("ssd", kIdA, ".bin") == "models/ssd_" + kIdA + ".bin");
    CHECK(model_metadata_key("ssd", kIdA) == "models/ssd_" + kIdA + ".json");
    CHECK(extras_prefix(kIdA) == "extras/" + kIdA + "/");
  }

  TEST_CASE("metadata key recovered from the model key alone") {
    CHECK(metadata_key_for_model("models/ssd_" + kIdA + ".bin") == "models/ssd_" + kIdA + ".json");
    CHECK(metadata_key_for_model("models/ssd_" + kIdA) == "models/ssd_" + kIdA + ".json");
    CHECK(metadata_key_for_model("models/ssd_" + kIdA + ".tar.gz") == "models/ssd_" + kIdA + ".json");
    // Names may themselves contain '_' and hex runs.
    const std::string tricky = "my_" + kIdB + "_net";
    CHECK(metadata_key_for_model("models/" + tricky + "_" + kIdA + ".pt") ==
          "models/" + tricky + "_" + kIdA + ".json");
    CHECK_FALSE(metadata_key_for_model("models/ssd.bin"));
    CHECK_FALSE(metadata_key_for_model("other/ssd_" + kIdA + ".bin"));
    CHECK_FALSE(metadata_key_for_model("models/_" + kIdA + ".bin"));
  }

  TEST_CASE("register, lookup and download round trip") {
    Fixture fx;
    std::filesystem::create_directories(fx.dir / "extras" / "plots");
    testsupport::write_text(fx.dir / "extras" / "log.txt", "loss 0.1");
    testsupport::write_text(fx.dir / "extras" / "plots" / "pr.csv", "p,r");
    RegisterOptions opts;
    opts.extras_dir = fx.dir / "extras";
    opts.id_source = ids({kIdA});
    const auto e = register_model(fx.store, "ssd", fx.model, meta("2026-01-02T00:00:00Z"), opts);
    CHECK(e.unique_id == kIdA);
    CHECK(e.model_key == "models/ssd_" + kIdA + ".bin");
    CHECK(metadata_key_for_model(e.model_key) == e.metadata_key);
    CHECK_FALSE(e.incomplete);
    CHECK(e.extras == std::vector<std::string>{"extras/" + kIdA + "/log.txt", "extras/" + kIdA + "/plots/pr.csv"});

    const auto back = lookup_model(fx.store, kIdA);
    CHECK(to_json(back) == to_json(e));
    CHECK(back.metadata.plugin["arch"] == "ssd");

    const auto file = download_model(fx.store, kIdA, fx.dir / "out");
    CHECK(testsupport::read_text(file) == "weights");
    CHECK(testsupport::tree(fx.dir / "out" / "extras") == testsupport::tree(fx.dir / "extras"));
  }

  TEST_CASE("no extras directory: no extras keys") {
    Fixture fx;
    std::filesystem::create_directories(fx.dir / "empty");
    RegisterOptions opts;
    opts.extras_dir = fx.dir / "empty";
    const auto e = register_model(fx.store, "m", fx.model, meta("t"), opts);
    CHECK(e.extras.empty());
    CHECK(fx.store.list(BucketRole::models, "extras/").empty());
    CHECK(e.unique_id.size() == 32);
    CHECK(lookup_model(fx.store, e.unique_id).unique_id == e.unique_id);
  }

  TEST_CASE("list: newest first, corrupted entries flagged and last") {
    Fixture fx;
    CHECK(list_models(fx.store).empty());
    RegisterOptions a, b;
    a.id_source = ids({kIdA});
    b.id_source = ids({kIdB});
    register_model(fx.store, "old", fx.model, meta("2026-01-01T00:00:00Z"), a);
    register_model(fx.store, "new", fx.model, meta("2026-03-01T00:00:00Z"), b);
    auto listed = list_models(fx.store);
    REQUIRE(listed.size() == 2);
    CHECK(listed[0].entry->model_name == "new");
    CHECK(listed[1].entry->model_name == "old");

    fx.store.put_text({BucketRole::models, "models/broken_" + std::string(32, 'c') + ".json"}, "{ nope");
    listed = list_models(fx.store);
    REQUIRE(listed.size() == 3);
    CHECK_FALSE(listed[2].entry.has_value());
    CHECK_FALSE(listed[2].error.empty());
    CHECK(listed[0].entry->model_name == "new");
  }

  TEST_CASE("id collisions regenerate once, then refuse") {
    Fixture fx;
    RegisterOptions first;
    first.id_source = ids({kIdA});
    register_model(fx.store, "m", fx.model, meta("t"), first);

    RegisterOptions retry;
    retry.id_source = ids({kIdA, kIdB});
    CHECK(register_model(fx.store, "other", fx.model, meta("t"), retry).unique_id == kIdB);

    RegisterOptions stuck;
    stuck.id_source = ids({kIdA, kIdB});
    const auto before = fx.store.list(BucketRole::models, "");
    CHECK(kind_of([&] { register_model(fx.store, "third", fx.model, meta("t"), stuck); }) == ErrorKind::refused);
    CHECK(fx.store.list(BucketRole::models, "") == before);
  }

  TEST_CASE("a failed model upload leaves the entry marked incomplete") {
    Fixture fx;
    FlakyStore flaky(fx.store, ".bin");
    RegisterOptions opts;
    opts.id_source = ids({kIdA});
    CHECK(kind_of([&] { register_model(flaky, "m", fx.model, meta("t"), opts); }) == ErrorKind::transfer);
    CHECK(lookup_model(fx.store, kIdA).incomplete);
  }

  TEST_CASE("input errors") {
    Fixture fx;
    CHECK(kind_of([&] { register_model(fx.store, "m", fx.dir / "nope.bin", meta("t")); }) == ErrorKind::not_found);
    CHECK(kind_of([&] { register_model(fx.store, "a/b", fx.model, meta("t")); }) == ErrorKind::invalid_parameter);
    CHECK(kind_of([&] { register_model(fx.store, "", fx.model, meta("t")); }) == ErrorKind::invalid_parameter);
    testsupport::write_text(fx.dir / "m.json", "{}");
    CHECK(kind_of([&] { register_model(fx.store, "m", fx.dir / "m.json", meta("t")); }) ==
          ErrorKind::invalid_parameter);
    RegisterOptions opts;
    opts.extras_dir = fx.dir / "missing";
    CHECK(kind_of([&] { register_model(fx.store, "m", fx.model, meta("t"), opts); }) == ErrorKind::not_found);
    CHECK(kind_of([&] { lookup_model(fx.store, kIdA); }) == ErrorKind::not_found);
    CHECK(kind_of([&] { lookup_model(fx.store, "xyz"); }) == ErrorKind::not_found);
    CHECK(fx.store.list(BucketRole::models, "").empty());
  }

  TEST_CASE("entry JSON is validated") {
    ModelEntry e;
    e.model_name = "m";
    e.unique_id = kIdA;
    e.extension = ".bin";
    e.model_key = model_key("m", kIdA, ".bin");
    e.metadata_key = model_metadata_key("m", kIdA);
    e.extras_prefix = extras_prefix(kIdA);
    CHECK(to_json(model_entry_from_json(to_json(e))) == to_json(e));
    auto j = to_json(e);
    j["unique_id"] = "short";
    CHECK(kind_of([&] { model_entry_from_json(j); }) == ErrorKind::validation);
    j = to_json(e);
    j["model_key"] = "models/other.bin";
    CHECK(kind_of([&] { model_entry_from_json(j); }) == ErrorKind::validation);
  }
}
