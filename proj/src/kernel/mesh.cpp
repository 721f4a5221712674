#include "proc3d/mesh.hpp"

#include <algorithm>

namespace proc3d {

void Bounds::extend(const Vec3& p) {
  if (!valid) {
    lo = hi = p;
    valid = true;
    return;
  }
  lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
  hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
}

Bounds bounds_of(const std::vector<Vec3>& points) {
  Bounds b;
  for (const auto& p : points) b.extend(p);
  return b;
}

Bounds bounds_of(const Mesh& mesh) { return bounds_of(mesh.vertices); }

double signed_volume(const Mesh& mesh) {
  double v = 0.0;
  for (const auto& t : mesh.triangles) {
    const Vec3& a = mesh.vertices[t[0]];
    const Vec3& b = mesh.vertices[t[1]];
    const Vec3& c = mesh.vertices[t[2]];
    v += dot(a, cross(b, c));
  }
  return v / 6.0;
}

double surface_area(const Mesh& mesh) {
  double area = 0.0;
  for (const auto& t : mesh.triangles) {
    const Vec3& a = mesh.vertices[t[0]];
    area += 0.5 * norm(cross(mesh.vertices[t[1]] - a, mesh.vertices[t[2]] - a));
  }
  return area;
}

Vec3 area_vector(const std::vector<Vec3>& loop) {
  Vec3 n;
  const std::size_t count = loop.size();
  for (std::size_t i = 0; i < count; ++i) {
    const Vec3& p = loop[i];
    const Vec3& q = loop[(i + 1) % count];
    n.x += (p.y - q.y) * (p.z + q.z);
    n.y += (p.z - q.z) * (p.x + q.x);
    n.z += (p.x - q.x) * (p.y + q.y);
  }
  return n * 0.5;
}

Mesh concatenate(const std::vector<const Mesh*>& parts) {
  Mesh out;
  std::size_t nv = 0, nt = 0;
  bool tagged = false;
  for (const Mesh* m : parts) {
    nv += m->vertices.size();
    nt += m->triangles.size();
    tagged = tagged || !m->part_tags.empty();
  }
  out.vertices.reserve(nv);
  out.triangles.reserve(nt);
  if (tagged) out.part_tags.reserve(nt);
  for (const Mesh* m : parts) {
    const auto offset = static_cast<std::uint32_t>(out.vertices.size());
    out.vertices.insert(out.vertices.end(), m->vertices.begin(), m->vertices.end());
    for (const auto& t : m->triangles) out.triangles.push_back({t[0] + offset, t[1] + offset, t[2] + offset});
    if (tagged) {
      if (m->part_tags.empty())
        out.part_tags.insert(out.part_tags.end(), m->triangles.size(), 0u);
      else
        out.part_tags.insert(out.part_tags.end(), m->part_tags.begin(), m->part_tags.end());
    }
  }
  return out;
}

bool is_well_formed(const Mesh& mesh) {
  const auto n = mesh.vertices.size();
  for (const auto& t : mesh.triangles) {
    if (t[0] >= n || t[1] >= n || t[2] >= n) return false;
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) return false;
  }
  return mesh.part_tags.empty() || mesh.part_tags.size() == mesh.triangles.size();
}

}  // namespace proc3d
