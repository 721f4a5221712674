#include "proc3d/value.hpp"

#include <array>
#include <charconv>
#include <cmath>

namespace proc3d {

std::string_view to_string(ValueType type) {
  switch (type) {
    case ValueType::Float: return "float";
    case ValueType::Int: return "int";
    case ValueType::Bool: return "bool";
    case ValueType::Vec3: return "vec3";
    case ValueType::Curve: return "curve";
    case ValueType::Geometry: return "geometry";
  }
  return "?";
}

std::optional<ValueType> parse_value_type(std::string_view name) {
  if (name == "float") return ValueType::Float;
  if (name == "int") return ValueType::Int;
  if (name == "bool") return ValueType::Bool;
  if (name == "vec3") return ValueType::Vec3;
  if (name == "curve") return ValueType::Curve;
  if (name == "geometry") return ValueType::Geometry;
  return std::nullopt;
}

ValueType Value::type() const {
  switch (v_.index()) {
    case 0: return ValueType::Float;
    case 1: return ValueType::Int;
    case 2: return ValueType::Bool;
    case 3: return ValueType::Vec3;
    case 4: return ValueType::Curve;
    default: return ValueType::Geometry;
  }
}

double Value::as_float() const {
  if (const auto* i = std::get_if<std::int64_t>(&v_)) return static_cast<double>(*i);
  return std::get<double>(v_);
}

bool operator==(const Value& a, const Value& b) {
  if (a.v_.index() != b.v_.index()) return false;
  if (const auto* m = std::get_if<MeshPtr>(&a.v_)) {
    const auto& n = std::get<MeshPtr>(b.v_);
    return m == &n || *m == n || (*m && n && **m == *n);
  }
  if (const auto* c = std::get_if<CurvePtr>(&a.v_)) {
    const auto& d = std::get<CurvePtr>(b.v_);
    return *c == d || (*c && d && **c == *d);
  }
  return a.v_ == b.v_;
}

const MeshPtr& empty_mesh() {
  static const MeshPtr empty = std::make_shared<const Mesh>();
  return empty;
}

std::string format_float(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  std::string s(buf.data(), end);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

}  // namespace proc3d
