#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "proc3d/math.hpp"

namespace proc3d {

using Triangle = std::array<std::uint32_t, 3>;

/// Indexed triangle mesh. `part_tags` is either empty or holds one label per triangle;
/// the evaluator tags each triangle with the ordinal of the node that created it.
struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;
  std::vector<std::uint32_t> part_tags;

  bool empty() const { return triangles.empty() && vertices.empty(); }
  std::size_t triangle_count() const { return triangles.size(); }

  friend bool operator==(const Mesh&, const Mesh&) = default;
};

/// Polyline. Closed curves do not repeat their first point.
struct Curve {
  std::vector<Vec3> points;
  bool closed = true;

  friend bool operator==(const Curve&, const Curve&) = default;
};

using MeshPtr = std::shared_ptr<const Mesh>;
using CurvePtr = std::shared_ptr<const Curve>;

struct Bounds {
  Vec3 lo{0, 0, 0};
  Vec3 hi{0, 0, 0};
  bool valid = false;

  void extend(const Vec3& p);
  Vec3 size() const { return hi - lo; }
  Vec3 center() const { return (lo + hi) * 0.5; }
};

Bounds bounds_of(const Mesh& mesh);
Bounds bounds_of(const std::vector<Vec3>& points);

/// Signed volume of a closed, consistently oriented mesh (positive for outward winding).
double signed_volume(const Mesh& mesh);
double surface_area(const Mesh& mesh);
/// Newell normal scaled by the enclosed area of a (possibly non-planar) closed loop.
Vec3 area_vector(const std::vector<Vec3>& loop);

/// Concatenates meshes with index offsetting. Tags are carried over; a mesh without tags
/// contributes zero tags when any input is tagged.
Mesh concatenate(const std::vector<const Mesh*>& parts);

/// True when every index is in range and no triangle repeats an index.
bool is_well_formed(const Mesh& mesh);

}  // namespace proc3d
