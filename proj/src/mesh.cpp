#include "orbitforge/mesh.hpp"

#include <charconv>
#include <map>
#include <optional>
#include <string>

#include "orbitforge/error.hpp"
#include "orbitforge/image.hpp"

namespace orbitforge {

namespace {

struct Corner {
  long position;
  long normal;  // -1 when absent
};

class ObjParser {
 public:
  ObjParser(std::string_view source) : source_(source) {}

  TriangleMesh parse(std::string_view text);

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorKind::parse, std::string(source_) + ":" + std::to_string(line_no_) + ": " + msg, line_no_);
  }

  static std::string_view next_token(std::string_view& rest) {
    const auto start = rest.find_first_not_of(" \t\r");
    if (start == std::string_view::npos) {
      rest = {};
      return {};
    }
    rest.remove_prefix(start);
    const auto end = rest.find_first_of(" \t\r");
    const auto tok = rest.substr(0, end);
    rest.remove_prefix(end == std::string_view::npos ? rest.size() : end);
    return tok;
  }

  double parse_double(std::string_view tok) const {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v)) {
      fail("bad number '" + std::string(tok) + "'");
    }
    return v;
  }

  Vec3 parse_vec3(std::string_view rest) const {
    Vec3 v;
    v.x = parse_double(require(next_token(rest)));
    v.y = parse_double(require(next_token(rest)));
    v.z = parse_double(require(next_token(rest)));
    return v;
  }

  std::string_view require(std::string_view tok) const {
    if (tok.empty()) fail("missing component");
    return tok;
  }

  // OBJ indices are 1-based; negatives count back from the latest element.
  long resolve_index(std::string_view tok, std::size_t count, const char* what) const {
    long idx = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), idx);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) fail(std::string("bad ") + what + " index");
    if (idx == 0) fail(std::string(what) + " index 0 (OBJ indices are 1-based)");
    const long resolved = idx > 0 ? idx - 1 : static_cast<long>(count) + idx;
    if (resolved < 0 || resolved >= static_cast<long>(count)) fail(std::string(what) + " index out of range");
    return resolved;
  }

  Corner parse_corner(std::string_view tok) const {
    const auto s1 = tok.find('/');
    Corner c{resolve_index(tok.substr(0, s1), positions_.size(), "vertex"), -1};
    if (s1 != std::string_view::npos) {
      const auto s2 = tok.find('/', s1 + 1);
      if (s2 != std::string_view::npos && s2 + 1 < tok.size()) {
        c.normal = resolve_index(tok.substr(s2 + 1), normals_.size(), "normal");
      }
    }
    return c;
  }

  std::string_view source_;
  int line_no_ = 0;
  std::vector<Vec3> positions_;
  std::vector<Vec3> normals_;
};

TriangleMesh ObjParser::parse(std::string_view text) {
  std::vector<std::vector<Corner>> faces;
  while (!text.empty()) {
    ++line_no_;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);

    std::string_view rest = line;
    const auto keyword = next_token(rest);
    if (keyword.empty()) continue;
    if (keyword == "v") {
      positions_.push_back(parse_vec3(rest));
    } else if (keyword == "vn") {
      normals_.push_back(parse_vec3(rest));
    } else if (keyword == "f") {
      std::vector<Corner> face;
      for (auto tok = next_token(rest); !tok.empty(); tok = next_token(rest)) face.push_back(parse_corner(tok));
      if (face.size() < 3) fail("face needs at least 3 corners");
      faces.push_back(std::move(face));
    } else if (keyword == "vt" || keyword == "vp" || keyword == "o" || keyword == "g" || keyword == "s" ||
               keyword == "usemtl" || keyword == "mtllib" || keyword == "l") {
      continue;
    } else {
      fail("unsupported record '" + std::string(keyword) + "'");
    }
  }
  if (faces.empty()) throw Error(ErrorKind::empty_mesh, std::string(source_) + ": mesh has no faces");

  TriangleMesh mesh;
  std::map<std::pair<long, long>, std::uint32_t> corner_ids;
  std::vector<Vec3> accumulated;
  auto vertex_for = [&](const Corner& c) {
    const auto [it, inserted] = corner_ids.try_emplace({c.position, c.normal}, 0);
    if (inserted) {
      it->second = static_cast<std::uint32_t>(mesh.vertices.size());
      mesh.vertices.push_back(positions_[c.position]);
      accumulated.push_back(c.normal >= 0 ? normals_[c.normal] : Vec3{});
    }
    return it->second;
  };

  for (const auto& face : faces) {
    for (std::size_t i = 1; i + 1 < face.size(); ++i) {
      const std::array<Corner, 3> corners{face[0], face[i], face[i + 1]};
      std::array<std::uint32_t, 3> tri{};
      for (int k = 0; k < 3; ++k) tri[k] = vertex_for(corners[k]);
      // Area-weighted face normal for corners lacking an explicit one.
      const Vec3 fn = cross(mesh.vertices[tri[1]] - mesh.vertices[tri[0]], mesh.vertices[tri[2]] - mesh.vertices[tri[0]]);
      for (int k = 0; k < 3; ++k) {
        if (corners[k].normal < 0) accumulated[tri[k]] = accumulated[tri[k]] + fn;
      }
      mesh.triangles.push_back(tri);
    }
  }

  mesh.vertex_normals.reserve(accumulated.size());
  for (const Vec3& n : accumulated) {
    const double len = norm(n);
    mesh.vertex_normals.push_back(len > 1e-300 ? n / len : Vec3{0.0, 0.0, 1.0});
  }
  mesh.validate();
  return mesh;
}

}  // namespace

void TriangleMesh::validate() const {
  if (triangles.empty()) throw Error(ErrorKind::empty_mesh, "mesh has no triangles");
  if (vertex_normals.size() != vertices.size()) {
    throw Error(ErrorKind::invalid_parameter, "one normal per vertex required");
  }
  for (const auto& tri : triangles) {
    for (auto idx : tri) {
      if (idx >= vertices.size()) throw Error(ErrorKind::invalid_parameter, "triangle index out of range");
    }
  }
  for (const auto& n : vertex_normals) {
    if (std::abs(norm(n) - 1.0) > 1e-6) throw Error(ErrorKind::invalid_parameter, "vertex normal not unit length");
  }
  auto check = [](const Rgb& c) {
    for (double v : {c.r, c.g, c.b}) {
      if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorKind::invalid_parameter, "albedo outside [0,1]");
    }
  };
  check(albedo);
  if (!face_albedo.empty() && face_albedo.size() != triangles.size()) {
    throw Error(ErrorKind::invalid_parameter, "face_albedo must have one entry per triangle");
  }
  for (const auto& c : face_albedo) check(c);
}

TriangleMesh parse_obj(std::string_view text, std::string_view source) { return ObjParser(source).parse(text); }

TriangleMesh load_mesh(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  const std::string source = path.string();
  return parse_obj(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()), source);
}

}  // namespace orbitforge
