#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "proc3d/mesh.hpp"

namespace proc3d {

enum class ValueType { Float, Int, Bool, Vec3, Curve, Geometry };

std::string_view to_string(ValueType type);
std::optional<ValueType> parse_value_type(std::string_view name);

/// True when a value of type `from` may feed a port of type `to`. Int -> Float is the only
/// implicit conversion.
constexpr bool implicitly_converts(ValueType from, ValueType to) {
  return from == to || (from == ValueType::Int && to == ValueType::Float);
}

/// Runtime value flowing along graph edges. Geometry and curves are shared immutable buffers,
/// so copying a Value is cheap.
class Value {
 public:
  using Storage = std::variant<double, std::int64_t, bool, Vec3, CurvePtr, MeshPtr>;

  Value() : v_(0.0) {}
  Value(double d) : v_(d) {}
  Value(std::int64_t i) : v_(i) {}
  Value(int i) : v_(static_cast<std::int64_t>(i)) {}
  Value(bool b) : v_(b) {}
  Value(const Vec3& v) : v_(v) {}
  Value(CurvePtr c) : v_(std::move(c)) {}
  Value(MeshPtr m) : v_(std::move(m)) {}

  ValueType type() const;

  bool is_float() const { return std::holds_alternative<double>(v_); }
  bool is_int() const { return std::holds_alternative<std::int64_t>(v_); }
  bool is_bool() const { return std::holds_alternative<bool>(v_); }
  bool is_vec3() const { return std::holds_alternative<Vec3>(v_); }

  /// Float value; Int is widened.
  double as_float() const;
  std::int64_t as_int() const { return std::get<std::int64_t>(v_); }
  bool as_bool() const { return std::get<bool>(v_); }
  const Vec3& as_vec3() const { return std::get<Vec3>(v_); }
  const CurvePtr& as_curve() const { return std::get<CurvePtr>(v_); }
  const MeshPtr& as_mesh() const { return std::get<MeshPtr>(v_); }

  const Storage& storage() const { return v_; }

  /// Structural equality; geometry compares by content.
  friend bool operator==(const Value& a, const Value& b);

 private:
  Storage v_;
};

/// Empty geometry shared by every default-valued geometry port.
const MeshPtr& empty_mesh();

/// Shortest round-trip decimal for a double, always containing '.', 'e', "inf" or "nan" so it
/// never reads back as an integer.
std::string format_float(double value);

}  // namespace proc3d
