#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "proc3d/graph.hpp"
#include "proc3d/math.hpp"

namespace proc3d {

/// Oriented box: full extents along dir1, dir2 and dir1 x dir2.
struct Obb {
  Vec3 center;
  Vec3 size{1, 1, 1};
  Vec3 dir1{1, 0, 0};
  Vec3 dir2{0, 1, 0};
};

std::array<Vec3, 8> obb_corners(const Obb& box);

struct PartNode {
  std::string label;
  std::string full_label;  ///< Slash-joined labels from the root.
  std::vector<PartNode> children;
  std::optional<Obb> box;  ///< Present exactly on leaves.
};

class SchemaError : public std::runtime_error {
 public:
  SchemaError(std::string pointer, const std::string& message)
      : std::runtime_error(pointer + ": " + message), pointer_(std::move(pointer)) {}
  const std::string& pointer() const { return pointer_; }

 private:
  std::string pointer_;
};

class InvalidFrame : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Hierarchy document: {"label": str, "children": [...]} with leaves carrying
/// "box": [cx,cy,cz, sx,sy,sz, d1x,d1y,d1z, d2x,d2y,d2z]. Throws SchemaError.
PartNode load_hierarchy(const nlohmann::json& doc);
PartNode load_hierarchy_text(std::string_view text);
PartNode load_hierarchy_file(const std::filesystem::path& path);

struct TransformTriple {
  Vec3 translation;
  Vec3 rotation;  ///< XYZ Euler angles in radians (R = Rz*Ry*Rx).
  Vec3 scale{1, 1, 1};
};

/// Maps the canonical unit box corners (+-0.5)^3 through scale, rotation and translation.
std::array<Vec3, 8> transformed_unit_box(const TransformTriple& t);

struct RecoveredTransform {
  TransformTriple transform;
  Mat3 axes;  ///< Canonical frame as columns.
  /// Eigenvalues too close to order the axes. The vertex route then uses the identity frame;
  /// the box route does so only for axis-aligned boxes and otherwise keeps the box's own frame.
  bool degenerate = false;
  /// Extent below the minimum size and padded up to it.
  std::array<bool, 3> padded{};
};

inline constexpr double kMinExtent = 1e-4;
inline constexpr double kEigenGapTolerance = 1e-9;

/// Centroid translation, principal axes of the vertex covariance and the extents of the
/// centered points along those axes. Throws std::invalid_argument on an empty input.
RecoveredTransform extract_transform_from_vertices(const std::vector<Vec3>& vertices);

/// Same canonicalization applied directly to an OBB frame. Agrees with the vertex route on the
/// box's corners whenever that route is exact. Throws InvalidFrame.
RecoveredTransform extract_transform_from_box(const Obb& box);

/// Parses a signed axis mapping such as "xyz", "x-zy" or "none". Row i of the result picks
/// the source axis for destination axis i. Throws std::invalid_argument unless the result is
/// a proper rotation.
Mat3 parse_coord_rotation(std::string_view spec);

struct ExtractionConfig {
  Mat3 coord_rotation = Mat3::identity();
  bool merge_same_label = true;
  bool expose_global_rotation = true;
  /// Recover each leaf transform by PCA over its 8 box corners instead of reading the frame.
  bool recover_from_corners = false;
};

struct PartRecord {
  std::string path;     ///< full_label of the leaf.
  std::string node_id;  ///< Transform node wrapping the leaf cube.
  std::string cube_id;
  bool degenerate = false;
  std::array<bool, 3> padded{};
  Obb box;  ///< Box after the coordinate rotation.
};

struct Extraction {
  Graph graph;
  std::vector<PartRecord> parts;
  /// Depth-1 group label -> its Bool parameter.
  std::map<std::string, std::string> switch_params;
  /// Depth-1 group label -> cube node ids beneath it.
  std::map<std::string, std::vector<std::string>> group_cubes;

  nlohmann::json meta() const;
};

/// Builds a graph of one transformed cube per leaf, joined bottom-up through group transforms,
/// with a Bool switch per depth-1 group. Throws InvalidFrame naming the part path.
Extraction build_pcg(const PartNode& root, const ExtractionConfig& config = {});

/// Writes print_pcg(graph) through a temporary file renamed over `path`.
void save_graph(const Graph& graph, const std::filesystem::path& path);

}  // namespace proc3d
