#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "proc3d/mesh.hpp"

namespace proc3d {

enum class EvalErrorCode {
  BindingTypeError,
  RangeError,
  UnknownParameter,
  NumericError,
  NonPlanarCurve,
  SelfIntersecting,
  OpenBoundaryAmbiguous,
  StructuralError,
};

std::string_view to_string(EvalErrorCode code);

/// Evaluation failure. `node` names the offending node when one is known.
class EvalError : public std::runtime_error {
 public:
  EvalError(EvalErrorCode code, std::string message, std::string node = {})
      : std::runtime_error(std::move(message)), code_(code), node_(std::move(node)) {}

  EvalErrorCode code() const { return code_; }
  const std::string& node() const { return node_; }

 private:
  EvalErrorCode code_;
  std::string node_;
};

// Geometry node semantics. Each mesh-producing function stamps `tag` on every triangle it
// creates. Errors are thrown as EvalError without a node id; the evaluator attaches it.

Mesh make_cube(const Vec3& size, std::uint32_t tag = 0);
Mesh make_cylinder(double radius, double depth, std::int64_t segments, std::uint32_t tag = 0);
Mesh make_sphere(double radius, std::int64_t rings, std::int64_t segments, std::uint32_t tag = 0);

Curve make_rectangle(double width, double height);
/// Replaces each corner with a circular arc of `count` points. The radius is clamped so the
/// tangent points never pass the midpoint of an adjacent segment.
Curve fillet_curve(const Curve& curve, double radius, std::int64_t count);

/// Ear-clipping triangulation of a closed planar simple polygon. Triangle winding follows the
/// curve's orientation, so a counterclockwise curve in z=0 faces +z.
Mesh fill_curve(const Curve& curve, std::uint32_t tag = 0);

/// Turns a planar cap into a closed prism offset along the cap normal.
Mesh extrude_mesh(const Mesh& cap, double offset_scale, std::uint32_t tag = 0);

/// v' = translation + Rz*Ry*Rx * (scale (*) v). Components equal to identity are skipped so an
/// identity transform returns its input bit for bit.
Mesh transform_mesh(const Mesh& mesh, const Vec3& translation, const Vec3& rotation, const Vec3& scale);
Curve transform_curve(const Curve& curve, const Vec3& translation, const Vec3& rotation, const Vec3& scale);

Mesh instance_on_points(const Curve& points, const Mesh& instance);

}  // namespace proc3d
