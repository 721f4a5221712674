#include "proc3d/registry.hpp"

#include <algorithm>
#include <cctype>

namespace proc3d {
namespace {

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

InputPort port(std::string name, ValueType type, std::optional<Value> def = std::nullopt) {
  InputPort p;
  p.name = std::move(name);
  p.type = type;
  p.default_value = std::move(def);
  return p;
}

InputPort geometry_in(std::string name = "geometry") {
  InputPort p = port(std::move(name), ValueType::Geometry);
  p.accepts_curve = true;
  return p;
}

NodeKind kind(std::string name, std::vector<InputPort> inputs, std::vector<OutputPort> outputs, std::string summary) {
  NodeKind k;
  k.name = std::move(name);
  k.inputs = std::move(inputs);
  k.outputs = std::move(outputs);
  k.summary = std::move(summary);
  return k;
}

NodeRegistry make_builtin() {
  using VT = ValueType;
  const Vec3 zero{0, 0, 0};
  const Vec3 one{1, 1, 1};
  const OutputPort mesh_out{"mesh", VT::Geometry};
  const OutputPort geo_out{"geometry", VT::Geometry};
  const OutputPort curve_out{"curve", VT::Curve};
  const OutputPort value_out{"value", VT::Float};

  NodeRegistry r;

  NodeKind input = kind("input", {}, {{"value", VT::Float}}, "Declares an exposed graph parameter.");
  input.declaration_only = true;
  r.add(input);
  NodeKind output = kind("output", {port("geometry", VT::Geometry)}, {}, "Declares the graph result.");
  output.declaration_only = true;
  r.add(output);

  r.add(kind("cube", {port("size", VT::Vec3, Value(one))}, {mesh_out},
             "Axis-aligned box centered at the origin with the given side lengths."));
  r.add(kind("cylinder",
             {port("radius", VT::Float, Value(1.0)), port("depth", VT::Float, Value(2.0)),
              port("segments", VT::Int, Value(32))},
             {mesh_out}, "Closed cylinder along z, centered at the origin."));
  r.add(kind("sphere",
             {port("radius", VT::Float, Value(1.0)), port("rings", VT::Int, Value(16)),
              port("segments", VT::Int, Value(32))},
             {mesh_out}, "UV sphere centered at the origin."));

  NodeKind rect = kind("rectangle", {port("width", VT::Float), port("height", VT::Float)}, {curve_out},
                       "Closed rectangle in the z=0 plane, counterclockwise from (+,+).");
  rect.aliases = {"quadrilateral"};
  r.add(rect);
  r.add(kind("fillet",
             {port("curve", VT::Curve), port("radius", VT::Float), port("count", VT::Int, Value(20))},
             {curve_out}, "Rounds every corner of a curve with a circular arc of `count` points."));
  r.add(kind("fill", {port("curve", VT::Curve)}, {mesh_out}, "Triangulates a closed planar curve."));
  r.add(kind("extrude", {port("mesh", VT::Geometry), port("offset_scale", VT::Float, Value(1.0))}, {mesh_out},
             "Extrudes a planar cap along its normal into a closed prism."));

  r.add(kind("transform",
             {geometry_in(), port("translation", VT::Vec3, Value(zero)), port("rotation", VT::Vec3, Value(zero)),
              port("scale", VT::Vec3, Value(one))},
             {geo_out}, "Scales, then rotates (XYZ Euler, radians), then translates."));
  r.add(kind("translate", {geometry_in(), port("t", VT::Vec3, Value(zero))}, {geo_out}, "Moves geometry."));
  r.add(kind("rotate", {geometry_in(), port("r", VT::Vec3, Value(zero))}, {geo_out},
             "Rotates geometry by XYZ Euler angles in radians."));
  r.add(kind("scale", {geometry_in(), port("s", VT::Vec3, Value(one))}, {geo_out}, "Scales geometry per axis."));

  InputPort join_in = port("geometry", VT::Geometry);
  join_in.variadic = true;
  r.add(kind("join", {join_in}, {geo_out}, "Concatenates geometries without welding."));
  r.add(kind("switch",
             {port("flag", VT::Bool), port("on_true", VT::Geometry), port("on_false", VT::Geometry, Value(empty_mesh()))},
             {geo_out}, "Selects one of two geometries; the other branch is not evaluated."));
  r.add(kind("combine_xyz",
             {port("x", VT::Float, Value(0.0)), port("y", VT::Float, Value(0.0)), port("z", VT::Float, Value(0.0))},
             {{"vector", VT::Vec3}}, "Builds a vector from three scalars."));
  r.add(kind("instance_on_points", {port("points", VT::Curve), port("instance", VT::Geometry)}, {geo_out},
             "Places a translated copy of the instance at every curve point."));

  for (const char* op : {"add", "subtract", "multiply", "divide"})
    r.add(kind(op, {port("a", VT::Float), port("b", VT::Float)}, {value_out}, "Scalar arithmetic."));
  return r;
}

}  // namespace

const InputPort* NodeKind::find_input(std::string_view p) const {
  const int i = input_index(p);
  return i < 0 ? nullptr : &inputs[static_cast<std::size_t>(i)];
}

int NodeKind::input_index(std::string_view p) const {
  for (std::size_t i = 0; i < inputs.size(); ++i)
    if (inputs[i].name == p) return static_cast<int>(i);
  return -1;
}

int NodeKind::output_index(std::string_view p) const {
  for (std::size_t i = 0; i < outputs.size(); ++i)
    if (outputs[i].name == p) return static_cast<int>(i);
  return -1;
}

int NodeKind::polymorphic_input() const {
  for (std::size_t i = 0; i < inputs.size(); ++i)
    if (inputs[i].accepts_curve) return static_cast<int>(i);
  return -1;
}

void NodeRegistry::add(NodeKind kind) {
  auto same = [&](const NodeKind& k) { return iequals(k.name, kind.name); };
  if (auto it = std::find_if(kinds_.begin(), kinds_.end(), same); it != kinds_.end())
    *it = std::move(kind);
  else
    kinds_.push_back(std::move(kind));
}

const NodeKind* NodeRegistry::find(std::string_view name) const {
  for (const auto& k : kinds_) {
    if (iequals(k.name, name)) return &k;
    for (const auto& a : k.aliases)
      if (iequals(a, name)) return &k;
  }
  return nullptr;
}

const NodeRegistry& NodeRegistry::builtin() {
  static const NodeRegistry registry = make_builtin();
  return registry;
}

}  // namespace proc3d
