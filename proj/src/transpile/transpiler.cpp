#include "proc3d/transpiler.hpp"

#include <set>
#include <unordered_map>

#include "proc3d/json_io.hpp"

namespace proc3d {

namespace {

struct PortMap {
  std::string port;     // PCG input port
  std::string socket;   // Blender input key; digits are emitted as integer keys
  std::optional<std::string> fallback;  // written when the PCG arg is unset and Blender's default differs
};

struct KindMap {
  std::string node;     // Nodes.<node>
  std::vector<PortMap> ports;
  std::string attrs;    // literal attrs dict body
  std::string output;   // non-empty: reference `.outputs["<output>"]`
};

const std::unordered_map<std::string, KindMap>& blender_kinds() {
  static const std::unordered_map<std::string, KindMap> table = [] {
    std::unordered_map<std::string, KindMap> t;
    t["cube"] = {"MeshCube", {{"size", "Size", {}}}, "", "Mesh"};
    t["cylinder"] = {"Cylinder", {{"radius", "Radius", {}}, {"depth", "Depth", {}}, {"segments", "Vertices", {}}}, "", "Mesh"};
    t["sphere"] = {"MeshUVSphere", {{"radius", "Radius", {}}, {"rings", "Rings", {}}, {"segments", "Segments", {}}}, "", "Mesh"};
    t["rectangle"] = {"Quadrilateral", {{"width", "Width", {}}, {"height", "Height", {}}}, "", ""};
    t["fillet"] = {"FilletCurve", {{"curve", "Curve", {}}, {"count", "Count", "20"}, {"radius", "Radius", {}}}, "'mode': 'POLY'", ""};
    t["fill"] = {"FillCurve", {{"curve", "Curve", {}}}, "'mode': 'NGONS'", ""};
    t["extrude"] = {"ExtrudeMesh", {{"mesh", "Mesh", {}}, {"offset_scale", "Offset Scale", {}}}, "", "Mesh"};
    t["transform"] = {"Transform",
                      {{"geometry", "Geometry", {}}, {"translation", "Translation", {}}, {"rotation", "Rotation", {}},
                       {"scale", "Scale", {}}},
                      "", ""};
    t["translate"] = {"Transform", {{"geometry", "Geometry", {}}, {"t", "Translation", {}}}, "", ""};
    t["rotate"] = {"Transform", {{"geometry", "Geometry", {}}, {"r", "Rotation", {}}}, "", ""};
    t["scale"] = {"Transform", {{"geometry", "Geometry", {}}, {"s", "Scale", {}}}, "", ""};
    t["join"] = {"JoinGeometry", {{"geometry", "Geometry", {}}}, "", ""};
    t["switch"] = {"Switch", {{"flag", "Switch", {}}, {"on_false", "False", {}}, {"on_true", "True", {}}},
                   "'input_type': 'GEOMETRY'", ""};
    t["combine_xyz"] = {"CombineXYZ", {{"x", "X", {}}, {"y", "Y", {}}, {"z", "Z", {}}}, "", ""};
    t["instance_on_points"] = {"InstanceOnPoints", {{"points", "Points", {}}, {"instance", "Instance", {}}}, "", ""};
    for (const char* op : {"add", "subtract", "multiply", "divide"}) {
      std::string upper = op;
      for (auto& c : upper) c = static_cast<char>(c - 'a' + 'A');
      t[op] = {"Math", {{"a", "0", {}}, {"b", "1", {}}}, "'operation': '" + upper + "'", ""};
    }
    return t;
  }();
  return table;
}

const std::set<std::string, std::less<>>& python_reserved() {
  static const std::set<std::string, std::less<>> words = {
      "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class", "continue", "def", "del",
      "elif", "else", "except", "finally", "for", "from", "global", "if", "import", "in", "is", "lambda", "nonlocal",
      "not", "or", "pass", "raise", "return", "try", "while", "with", "yield", "match", "case", "type",
      // names the script itself binds
      "nw", "group_input", "group_output", "Nodes", "NodeWrangler", "bpy", "mathutils", "uniform", "normal",
      "randint", "node_utils", "color_category", "surface", "geometry_nodes", "apply", "obj", "selection", "kwargs"};
  return words;
}

std::string py_string(std::string_view s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\\' || c == '\'') out += '\\';
    out += c;
  }
  return out + "'";
}

std::string py_literal(const Value& v) {
  switch (v.type()) {
    case ValueType::Float: return format_float(v.as_float());
    case ValueType::Int: return std::to_string(v.as_int());
    case ValueType::Bool: return v.as_bool() ? "True" : "False";
    case ValueType::Vec3: {
      const Vec3& x = v.as_vec3();
      return "(" + format_float(x.x) + ", " + format_float(x.y) + ", " + format_float(x.z) + ")";
    }
    default: return "None";
  }
}

std::string socket_type(ValueType t) {
  switch (t) {
    case ValueType::Int: return "NodeSocketInt";
    case ValueType::Bool: return "NodeSocketBool";
    default: return "NodeSocketFloat";
  }
}

class BlenderEmitter {
 public:
  explicit BlenderEmitter(const Graph& g) : g_(g) {
    for (const auto& p : g.params) params_.insert(p.name);
    for (const auto& n : g.nodes) by_id_.emplace(n.id, &n);
  }

  std::string run() {
    const auto& kinds = blender_kinds();
    for (const auto& n : g_.nodes)
      if (!kinds.count(n.kind)) throw UnsupportedKind(n.kind, "blender_python", n.id);

    out_ += "import bpy\n"
            "import mathutils\n"
            "from numpy.random import uniform, normal, randint\n"
            "from infinigen.core.nodes.node_wrangler import Nodes, NodeWrangler\n"
            "from infinigen.core.nodes import node_utils\n"
            "from infinigen.core.util.color import color_category\n"
            "from infinigen.core import surface\n\n"
            "def geometry_nodes(nw: NodeWrangler):\n";

    out_ += "    group_input = nw.new_node(Nodes.GroupInput,\n        expose_input=[('NodeSocketGeometry', 'Geometry', None)";
    for (const auto& p : g_.params)
      out_ += ",\n            (" + py_string(socket_type(p.type)) + ", " + py_string(p.name) + ", " + py_literal(p.default_value) + ")";
    out_ += "])\n";
    for (const auto& p : g_.params) {
      if (!p.range) continue;
      const bool is_int = p.type == ValueType::Int;
      auto bound = [&](double x) { return is_int ? std::to_string(static_cast<long long>(x)) : format_float(x); };
      const std::string item = "    nw.node_group.interface.items_tree[" + py_string(p.name) + "]";
      out_ += item + ".min_value = " + bound(p.range->first) + "\n";
      out_ += item + ".max_value = " + bound(p.range->second) + "\n";
    }

    for (const auto& id : topo_order(g_)) emit_node(*by_id_.at(id), kinds.at(by_id_.at(id)->kind));

    out_ += "\n    group_output = nw.new_node(Nodes.GroupOutput, input_kwargs={'Geometry': " + expr(*g_.output) +
            "}, attrs={'is_active_output': True})\n\n"
            "def apply(obj, selection=None, **kwargs):\n"
            "    surface.add_geomod(obj, geometry_nodes, selection=selection, attributes=[])\n";
    return out_;
  }

 private:
  std::string var_for(const std::string& base) {
    std::string name = python_reserved().count(base) ? base + "_" : base;
    while (used_.count(name) || params_.count(name)) name += "_";
    used_.insert(name);
    return name;
  }

  std::string ref(const Expr& e) {
    if (params_.count(e.target)) return "group_input.outputs[" + py_string(e.target) + "]";
    const Node& n = *by_id_.at(e.target);
    const KindMap& k = blender_kinds().at(n.kind);
    const std::string& v = vars_.at(e.target);
    return k.output.empty() ? v : v + ".outputs[" + py_string(k.output) + "]";
  }

  /// Emits any helper nodes an expression needs and returns its Python form.
  std::string expr(const Expr& e, const std::string& hint = {}) {
    switch (e.kind) {
      case Expr::Kind::Literal: return py_literal(e.literal);
      case Expr::Kind::Ref: return ref(e);
      case Expr::Kind::List: {
        std::string s = "[";
        for (std::size_t i = 0; i < e.items.size(); ++i) s += (i ? ", " : "") + expr(e.items[i], hint);
        return s + "]";
      }
      case Expr::Kind::Vec: {
        bool constant = true;
        for (const auto& c : e.items) constant = constant && c.kind == Expr::Kind::Literal;
        if (constant)
          return "(" + py_literal(Value(e.items[0].literal.as_float())) + ", " + py_literal(Value(e.items[1].literal.as_float())) +
                 ", " + py_literal(Value(e.items[2].literal.as_float())) + ")";
        static constexpr const char* axes[3] = {"X", "Y", "Z"};
        std::string kwargs;
        for (int i = 0; i < 3; ++i)
          kwargs += std::string(i ? ", " : "") + "'" + axes[i] + "': " + expr(e.items[static_cast<std::size_t>(i)]);
        const std::string v = var_for(hint.empty() ? "combine_xyz" : hint);
        out_ += "\n    " + v + " = nw.new_node(Nodes.CombineXYZ, input_kwargs={" + kwargs + "})\n";
        return v;
      }
    }
    return "None";
  }

  void emit_node(const Node& n, const KindMap& k) {
    std::string kwargs;
    for (const auto& pm : k.ports) {
      std::string value;
      if (auto it = n.args.find(pm.port); it != n.args.end()) value = expr(it->second, n.id + "_" + pm.port);
      else if (pm.fallback) value = *pm.fallback;
      else continue;
      const bool numeric = !pm.socket.empty() && std::isdigit(static_cast<unsigned char>(pm.socket[0]));
      kwargs += (kwargs.empty() ? "" : ", ") + (numeric ? pm.socket : py_string(pm.socket)) + ": " + value;
    }
    const std::string v = var_for(n.id);
    vars_[n.id] = v;
    out_ += "\n    " + v + " = nw.new_node(Nodes." + k.node;
    if (!kwargs.empty()) out_ += ", input_kwargs={" + kwargs + "}";
    if (!k.attrs.empty()) out_ += ", attrs={" + k.attrs + "}";
    out_ += ")\n";
  }

  const Graph& g_;
  std::string out_;
  std::set<std::string, std::less<>> params_;
  std::set<std::string, std::less<>> used_;
  std::unordered_map<std::string, const Node*> by_id_;
  std::unordered_map<std::string, std::string> vars_;
};

class BlenderBackend final : public Backend {
 public:
  std::string name() const override { return "blender_python"; }
  std::string emit(const Graph& graph) const override { return to_blender_python(graph); }
};

class JsonBackend final : public Backend {
 public:
  std::string name() const override { return "json"; }
  std::string emit(const Graph& graph) const override { return to_json(graph); }
};

}  // namespace

std::string to_blender_python(const Graph& graph) { return BlenderEmitter(graph).run(); }

std::string to_json(const Graph& graph) { return graph_to_json_text(graph, 2); }

const Backend* find_backend(std::string_view name) {
  static const BlenderBackend blender;
  static const JsonBackend json;
  if (name == "blender_python") return &blender;
  if (name == "json") return &json;
  return nullptr;
}

std::vector<std::string> backend_names() { return {"blender_python", "json"}; }

CompactnessReport compactness_report(const Graph& graph) {
  CompactnessReport r;
  r.pcg_tokens = count_tokens(print_pcg(graph));
  for (const auto& name : backend_names()) {
    const std::size_t n = count_tokens(find_backend(name)->emit(graph));
    r.tokens[name] = n;
    r.ratios[name] = r.pcg_tokens ? static_cast<double>(n) / static_cast<double>(r.pcg_tokens) : 0.0;
  }
  return r;
}

}  // namespace proc3d
