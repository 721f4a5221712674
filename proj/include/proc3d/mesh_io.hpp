#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "proc3d/mesh.hpp"

namespace proc3d {

class ObjParseError : public std::runtime_error {
 public:
  ObjParseError(int line, const std::string& message)
      : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// Wavefront OBJ with 9 significant digits. Triangles are grouped as `g part_<tag>` runs when
/// the mesh carries part tags, so import restores the tags.
std::string export_obj(const Mesh& mesh);

/// Reads `v` and triangular or polygonal `f` records (polygons are fan-split). Texture and
/// normal indices are ignored; negative (relative) indices are supported.
Mesh import_obj(std::string_view text);

/// Wire format for mesh streaming, little-endian:
/// u32 vertex_count, u32 triangle_count, f32 xyz * vertex_count, u32 index * 3 * triangle_count.
std::vector<std::uint8_t> encode_mesh_frame(const Mesh& mesh);

/// Inverse of encode_mesh_frame (vertices come back at f32 precision). Throws std::invalid_argument.
Mesh decode_mesh_frame(const std::uint8_t* data, std::size_t size);

}  // namespace proc3d
