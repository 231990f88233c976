#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>

#include "json.hpp"
#include "orbitforge/error.hpp"
#include "support.hpp"

using testsupport::read_text;
using testsupport::TempDir;
using testsupport::write_text;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

std::string quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return q + "'";
}

// Runs the CLI with a scrubbed environment plus `env`, inside `dir`.
Run cli(const TempDir& dir, const std::string& args, const std::vector<std::string>& env = {}) {
  std::string cmd = "cd " + quote(dir.path().string()) + " && env -i PATH=/usr/bin:/bin";
  for (const auto& e : env) cmd += " " + quote(e);
  cmd += " " + quote(ORBITFORGE_CLI_PATH) + " -q --work-dir work " + args + " >stdout.txt 2>stderr.txt";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_text(dir / "stdout.txt");
  r.err = read_text(dir / "stderr.txt");
  return r;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("config errors exit 2") {
    TempDir tmp("cli");
    write_text(tmp / "bad.yaml", "imageset_name: x\nseeed: 1\n");
    auto r = cli(tmp, "generate bad.yaml");
    CHECK(r.code == orbitforge::kExitConfig);
    CHECK(r.err.find("seeed") != std::string::npos);
    CHECK(cli(tmp, "frobnicate").code == orbitforge::kExitConfig);
    CHECK(cli(tmp, "eval").code == orbitforge::kExitConfig);
    CHECK(cli(tmp, "imageset list", {"ORBITFORGE_STORAGE_ENDPOINT=http://127.0.0.1:1"}).code ==
          orbitforge::kExitConfig);
    CHECK(cli(tmp, "imageset list", {"ORBITFORGE_RETRY_BASE_MS=soon"}).code == orbitforge::kExitConfig);
  }

  TEST_CASE("missing inputs exit 3") {
    TempDir tmp("cli");
    CHECK(cli(tmp, "generate nothing.yaml").code == orbitforge::kExitIo);
    CHECK(cli(tmp, "model register net missing.bin").code == orbitforge::kExitIo);
    CHECK(cli(tmp, "eval a.jsonl b.jsonl").code == orbitforge::kExitIo);
    CHECK(cli(tmp, "model download 0123456789abcdef0123456789abcdef").code == orbitforge::kExitIo);
  }

  TEST_CASE("unreachable object store exits 4") {
    TempDir tmp("cli");
    write_text(tmp / "model.bin", "weights");
    const auto r = cli(tmp, "model register net model.bin",
                       {"ORBITFORGE_STORAGE_ENDPOINT=http://127.0.0.1:1", "ORBITFORGE_ACCESS_KEY_ID=AKID",
                        "ORBITFORGE_SECRET_KEY=secret", "ORBITFORGE_RETRY_BASE_MS=1"});
    CHECK(r.code == orbitforge::kExitStorage);
  }

  TEST_CASE("empty listings succeed") {
    TempDir tmp("cli");
    auto r = cli(tmp, "model list");
    CHECK(r.code == 0);
    CHECK(r.out.rfind("ID", 0) == 0);
    CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 1);
    r = cli(tmp, "imageset list");
    CHECK(r.code == 0);
    CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 1);
  }

  TEST_CASE("model register, list and download against the mock store") {
    TempDir tmp("cli");
    testsupport::MockS3 mock;
    const auto b = mock.backend();
    const std::vector<std::string> env{"ORBITFORGE_STORAGE_ENDPOINT=" + mock.endpoint(),
                                       "ORBITFORGE_ACCESS_KEY_ID=" + b.access_key_id,
                                       "ORBITFORGE_SECRET_KEY=" + b.secret_key, "ORBITFORGE_RETRY_BASE_MS=1"};
    write_text(tmp / "model.bin", "weights-v1");
    write_text(tmp / "extras" / "labels.txt", "sat\n");
    auto r = cli(tmp, "--fixed-clock 2024-05-01T00:00:00Z model register det model.bin --extras extras --dataset ds",
                 env);
    REQUIRE(r.code == 0);
    const std::string id = r.out.substr(0, r.out.find('\n'));
    CHECK(id.size() == 32);

    r = cli(tmp, "model list", env);
    CHECK(r.code == 0);
    CHECK(r.out.find(id) != std::string::npos);
    CHECK(r.out.find("2024-05-01T00:00:00Z") != std::string::npos);

    r = cli(tmp, "model download " + id + " --out got", env);
    REQUIRE(r.code == 0);
    const auto files = testsupport::tree(tmp / "got");
    bool model_ok = false, extra_ok = false;
    for (const auto& [rel, bytes] : files) {
      model_ok |= bytes == "weights-v1";
      extra_ok |= rel.ends_with("labels.txt") && bytes == "sat\n";
    }
    CHECK(model_ok);
    CHECK(extra_ok);
  }

  TEST_CASE("imageset upload and download round trip") {
    TempDir tmp("cli");
    testsupport::write_synthetic_imageset(tmp / "work" / "imagesets", "syn", 5);
    const auto before = testsupport::tree(tmp / "work" / "imagesets" / "syn");
    const std::vector<std::string> env{"ORBITFORGE_STORAGE_ENDPOINT=" + (tmp / "remote").string()};
    REQUIRE(cli(tmp, "imageset upload syn", env).code == 0);
    auto r = cli(tmp, "imageset list", env);
    CHECK(r.out.find("syn") != std::string::npos);
    std::filesystem::remove_all(tmp / "work" / "imagesets");
    REQUIRE(cli(tmp, "imageset download syn", env).code == 0);
    CHECK(testsupport::tree(tmp / "work" / "imagesets" / "syn") == before);
    CHECK(cli(tmp, "imageset download nope", env).code == orbitforge::kExitIo);
  }

  TEST_CASE("generate then curate") {
    TempDir tmp("cli");
    write_text(tmp / "cube.obj", testsupport::cube_obj(2.0));
    write_text(tmp / "gen.yaml", R"(imageset_name: cubes
author: tester
mesh: cube.obj
camera: {width: 32, height: 32, vertical_fov_deg: 40}
sequence: {name: r, seed: 1, mode: random, count: 10}
ranges: {distance: {min: 6, max: 10}}
tags: [cube]
workers: 2
)");
    auto r = cli(tmp, "--fixed-clock 2024-01-01T00:00:00Z generate gen.yaml");
    REQUIRE(r.code == 0);
    CHECK(r.out.find("10 frames") != std::string::npos);
    write_text(tmp / "ds.yaml", R"(dataset_name: ds
local: true
imageset: [cubes]
overwrite_local: true
kfolds: 0
test_percent: 0.2
upload: false
delete_local: false
)");
    r = cli(tmp, "curate ds.yaml");
    REQUIRE(r.code == 0);
    CHECK(r.out.find("10 frames (train 8, test 2") != std::string::npos);
  }

  TEST_CASE("eval prints reports and sweeps") {
    TempDir tmp("cli");
    write_text(tmp / "gt.jsonl", R"({"image_id": "a", "present": true, "bbox": [0, 0, 10, 10]}
{"image_id": "b", "present": false, "bbox": null}
{"image_id": "c", "present": true, "bbox": [5, 5, 15, 15]}
)");
    write_text(tmp / "det.jsonl", R"({"image_id": "a", "bbox": [0, 0, 10, 10], "confidence": 0.9}
{"image_id": "b", "bbox": [1, 1, 4, 4], "confidence": 0.3}
{"image_id": "c", "bbox": [5, 5, 15, 14], "confidence": 0.6}
)");
    auto r = cli(tmp, "eval gt.jsonl det.jsonl --json");
    REQUIRE(r.code == 0);
    auto j = nlohmann::json::parse(r.out);
    CHECK(j["counts"]["tp"] == 2);
    CHECK(j["counts"]["tn"] == 1);
    CHECK(j["accuracy"] == 1.0);

    r = cli(tmp, "eval gt.jsonl det.jsonl --sweep --csv curve.csv --json");
    REQUIRE(r.code == 0);
    j = nlohmann::json::parse(r.out);
    CHECK(j["best_threshold"].get<double>() == doctest::Approx(0.3));
    const auto csv = read_text(tmp / "curve.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 21);

    r = cli(tmp, "eval gt.jsonl det.jsonl");
    CHECK(r.out.find("accuracy              1.0000") != std::string::npos);

    write_text(tmp / "bad.jsonl", "{\"image_id\": \"a\", \"bbox\": [3, 0, 1, 1], \"confidence\": 0.5}\n");
    r = cli(tmp, "eval gt.jsonl bad.jsonl");
    CHECK(r.code == orbitforge::kExitConfig);
    CHECK(r.err.find("bad.jsonl:1") != std::string::npos);
    CHECK(cli(tmp, "eval gt.jsonl det.jsonl --iou-threshold 2").code == orbitforge::kExitConfig);
    CHECK(cli(tmp, "eval gt.jsonl det.jsonl --sweep --conf-threshold 0.4").code == orbitforge::kExitConfig);
  }
}
