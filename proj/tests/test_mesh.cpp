#include <doctest.h>

#include <cmath>

#include "orbitforge/error.hpp"
#include "orbitforge/mesh.hpp"
#include "support.hpp"

using namespace orbitforge;

namespace {

ErrorKind kind_of(std::string_view obj, int* line = nullptr) {
  try {
    parse_obj(obj, "test.obj");
  } catch (const Error& e) {
    if (line) *line = e.status();
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::internal;
}

}  // namespace

TEST_SUITE("mesh") {
  TEST_CASE("triangulated cube: 8 vertices, 12 triangles") {
    std::string obj;
    for (int dx : {0, 1})
      for (int dy : {0, 1})
        for (int dz : {0, 1}) obj += "v " + std::to_string(dx) + " " + std::to_string(dy) + " " + std::to_string(dz) + "\n";
    const int tris[12][3] = {{1, 2, 4}, {1, 4, 3}, {5, 7, 8}, {5, 8, 6}, {1, 5, 6}, {1, 6, 2},
                             {3, 4, 8}, {3, 8, 7}, {1, 3, 7}, {1, 7, 5}, {2, 6, 8}, {2, 8, 4}};
    for (const auto& t : tris) obj += "f " + std::to_string(t[0]) + " " + std::to_string(t[1]) + " " + std::to_string(t[2]) + "\n";
    const auto m = parse_obj(obj);
    CHECK(m.triangles.size() == 12);
    CHECK(m.vertices.size() == 8);
  }

  TEST_CASE("quad-faced cube fans to 12 triangles with unit normals") {
    const auto m = parse_obj(testsupport::cube_obj());
    CHECK(m.triangles.size() == 12);
    for (const auto& n : m.vertex_normals) CHECK(std::abs(norm(n) - 1) <= 1e-6);
    // Corner normals average the three adjacent faces, so they point diagonally outward.
    for (std::size_t i = 0; i < m.vertices.size(); ++i) CHECK(dot(m.vertices[i], m.vertex_normals[i]) > 0);
  }

  TEST_CASE("face forms and negative indices") {
    const auto m = parse_obj(
        "# comment\n"
        "o thing\ng group\ns off\nmtllib x.mtl\nusemtl y\n"
        "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\n"
        "vt 0 0\nvt 1 0\nvt 1 1\n"
        "vn 0 0 1\n"
        "f 1/1/1 2/2/1 3/3/1\n"
        "f -4//-1 -2//-1 -1//-1\n"
        "f 1/1 2/2 3/3\n"
        "l 1 2\n");
    CHECK(m.triangles.size() == 3);
    for (const auto& n : m.vertex_normals) CHECK(std::abs(n.z - 1) <= 1e-12);
  }

  TEST_CASE("(position, normal) corners are deduplicated") {
    const auto m = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nvn 0 0 -1\nf 1//1 2//1 3//1\nf 1//2 3//2 2//2\n");
    CHECK(m.vertices.size() == 6);
    const auto shared = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nvn 0 0 1\nf 1//1 2//1 3//1\nf 2//1 4//1 3//1\n");
    CHECK(shared.vertices.size() == 4);
  }

  TEST_CASE("index 0 is a parse error naming the line") {
    int line = 0;
    CHECK(kind_of("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n", &line) == ErrorKind::parse);
    CHECK(line == 4);
  }

  TEST_CASE("malformed input") {
    int line = 0;
    CHECK(kind_of("v 0 0\n", &line) == ErrorKind::parse);
    CHECK(line == 1);
    CHECK(kind_of("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n", &line) == ErrorKind::parse);
    CHECK(line == 4);
    CHECK(kind_of("v 0 0 0\nv 1 0 0\nf 1 2\n") == ErrorKind::parse);
    CHECK(kind_of("v 0 0 0\nbogus 1 2 3\n", &line) == ErrorKind::parse);
    CHECK(line == 2);
    CHECK(kind_of("v 0 0 x\n") == ErrorKind::parse);
  }

  TEST_CASE("no faces is an empty mesh") {
    CHECK(kind_of("v 0 0 0\nv 1 0 0\n") == ErrorKind::empty_mesh);
    CHECK(kind_of("") == ErrorKind::empty_mesh);
  }

  TEST_CASE("load_mesh reads files and reports missing ones") {
    testsupport::TempDir dir("mesh");
    testsupport::write_text(dir / "cube.obj", testsupport::cube_obj(2.0));
    CHECK(load_mesh(dir / "cube.obj").triangles.size() == 12);
    try {
      load_mesh(dir / "missing.obj");
      FAIL("expected io error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::io);
    }
  }

  TEST_CASE("mesh validation") {
    auto m = testsupport::make_quad();
    m.triangles.push_back({0, 1, 99});
    CHECK_THROWS_AS(m.validate(), Error);
    m = testsupport::make_quad();
    m.vertex_normals[0] = {0, 0, 2};
    CHECK_THROWS_AS(m.validate(), Error);
  }
}
