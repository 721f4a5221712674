#include "proc3d/mesh_io.hpp"

#include <bit>
#include <charconv>
#include <cstdio>
#include <cstring>

namespace proc3d {

namespace {

static_assert(std::endian::native == std::endian::little, "frame encoder assumes a little-endian host");

void append_g9(std::string& out, double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.9g", v);
  out.append(buf, static_cast<std::size_t>(n));
}

std::string_view next_field(std::string_view& rest) {
  std::size_t i = 0;
  while (i < rest.size() && (rest[i] == ' ' || rest[i] == '\t')) ++i;
  std::size_t j = i;
  while (j < rest.size() && rest[j] != ' ' && rest[j] != '\t') ++j;
  std::string_view field = rest.substr(i, j - i);
  rest.remove_prefix(j);
  return field;
}

double parse_double(std::string_view s, int line) {
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw ObjParseError(line, "bad number '" + std::string(s) + "'");
  return v;
}

template <class T>
void put(std::vector<std::uint8_t>& out, T v) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  out.insert(out.end(), p, p + sizeof v);
}

template <class T>
T get(const std::uint8_t* data) {
  T v;
  std::memcpy(&v, data, sizeof v);
  return v;
}

}  // namespace

std::string export_obj(const Mesh& mesh) {
  std::string out = "# proc3d mesh\n# vertices " + std::to_string(mesh.vertices.size()) + " triangles " +
                    std::to_string(mesh.triangles.size()) + "\n";
  for (const auto& v : mesh.vertices) {
    out += "v ";
    append_g9(out, v.x);
    out += ' ';
    append_g9(out, v.y);
    out += ' ';
    append_g9(out, v.z);
    out += '\n';
  }
  const bool tagged = mesh.part_tags.size() == mesh.triangles.size() && !mesh.triangles.empty();
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    if (tagged && (t == 0 || mesh.part_tags[t] != mesh.part_tags[t - 1]))
      out += "g part_" + std::to_string(mesh.part_tags[t]) + "\n";
    const auto& tri = mesh.triangles[t];
    out += "f " + std::to_string(tri[0] + 1) + ' ' + std::to_string(tri[1] + 1) + ' ' + std::to_string(tri[2] + 1) + '\n';
  }
  return out;
}

Mesh import_obj(std::string_view text) {
  Mesh mesh;
  bool tagged = false;
  std::uint32_t tag = 0;
  int line_no = 0;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::string_view rest = line;
    const std::string_view key = next_field(rest);
    if (key.empty() || key[0] == '#') continue;
    if (key == "v") {
      Vec3 v;
      for (int k = 0; k < 3; ++k) {
        auto f = next_field(rest);
        if (f.empty()) throw ObjParseError(line_no, "vertex needs 3 coordinates");
        v[k] = parse_double(f, line_no);
      }
      mesh.vertices.push_back(v);
    } else if (key == "f") {
      std::vector<std::uint32_t> idx;
      for (auto f = next_field(rest); !f.empty(); f = next_field(rest)) {
        f = f.substr(0, f.find('/'));
        long long i = 0;
        auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), i);
        if (ec != std::errc() || p != f.data() + f.size() || i == 0)
          throw ObjParseError(line_no, "bad face index '" + std::string(f) + "'");
        const long long n = static_cast<long long>(mesh.vertices.size());
        const long long resolved = i > 0 ? i - 1 : n + i;
        if (resolved < 0 || resolved >= n) throw ObjParseError(line_no, "face index out of range");
        idx.push_back(static_cast<std::uint32_t>(resolved));
      }
      if (idx.size() < 3) throw ObjParseError(line_no, "face needs at least 3 vertices");
      for (std::size_t k = 1; k + 1 < idx.size(); ++k) {
        mesh.triangles.push_back({idx[0], idx[k], idx[k + 1]});
        mesh.part_tags.push_back(tag);
      }
    } else if (key == "g" || key == "o") {
      const auto name = next_field(rest);
      if (name.rfind("part_", 0) == 0) {
        auto digits = name.substr(5);
        std::uint32_t t = 0;
        auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), t);
        if (ec == std::errc() && p == digits.data() + digits.size()) {
          tag = t;
          tagged = true;
        }
      }
    }
  }
  if (!tagged) mesh.part_tags.clear();
  return mesh;
}

std::vector<std::uint8_t> encode_mesh_frame(const Mesh& mesh) {
  std::vector<std::uint8_t> out;
  out.reserve(8 + mesh.vertices.size() * 12 + mesh.triangles.size() * 12);
  put(out, static_cast<std::uint32_t>(mesh.vertices.size()));
  put(out, static_cast<std::uint32_t>(mesh.triangles.size()));
  for (const auto& v : mesh.vertices) {
    put(out, static_cast<float>(v.x));
    put(out, static_cast<float>(v.y));
    put(out, static_cast<float>(v.z));
  }
  for (const auto& t : mesh.triangles)
    for (auto i : t) put(out, i);
  return out;
}

Mesh decode_mesh_frame(const std::uint8_t* data, std::size_t size) {
  if (size < 8) throw std::invalid_argument("mesh frame shorter than its header");
  const auto nv = get<std::uint32_t>(data);
  const auto nt = get<std::uint32_t>(data + 4);
  const std::size_t expected = 8 + std::size_t{nv} * 12 + std::size_t{nt} * 12;
  if (size != expected)
    throw std::invalid_argument("mesh frame size " + std::to_string(size) + " != " + std::to_string(expected));
  Mesh mesh;
  mesh.vertices.resize(nv);
  const std::uint8_t* p = data + 8;
  for (auto& v : mesh.vertices) {
    v = {get<float>(p), get<float>(p + 4), get<float>(p + 8)};
    p += 12;
  }
  mesh.triangles.resize(nt);
  for (auto& t : mesh.triangles) {
    for (auto& i : t) {
      i = get<std::uint32_t>(p);
      if (i >= nv) throw std::invalid_argument("mesh frame index out of range");
      p += 4;
    }
  }
  return mesh;
}

}  // namespace proc3d
