#include "proc3d/json_io.hpp"

#include <set>
#include <stdexcept>

namespace proc3d {
namespace {

using ojson = nlohmann::ordered_json;
using json = nlohmann::json;

struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

ojson expr_to_json(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Literal: return value_to_json(e.literal);
    case Expr::Kind::Ref: {
      ojson r;
      r["ref"] = e.target;
      if (!e.port.empty()) r["port"] = e.port;
      return r;
    }
    case Expr::Kind::Vec: {
      ojson items = ojson::array();
      for (const auto& c : e.items) items.push_back(expr_to_json(c));
      ojson v;
      v["vec3"] = std::move(items);
      return v;
    }
    case Expr::Kind::List: {
      ojson items = ojson::array();
      for (const auto& c : e.items) items.push_back(expr_to_json(c));
      return items;
    }
  }
  return nullptr;
}

Expr expr_from_json(const json& j, const std::string& where) {
  if (j.is_boolean()) return Expr::boolean(j.get<bool>());
  if (j.is_number_integer()) return Expr::integer(j.get<std::int64_t>());
  if (j.is_number_float()) return Expr::number(j.get<double>());
  if (j.is_array()) {
    std::vector<Expr> items;
    for (std::size_t i = 0; i < j.size(); ++i) items.push_back(expr_from_json(j[i], where + "/" + std::to_string(i)));
    return Expr::list(std::move(items));
  }
  if (j.is_object()) {
    if (j.contains("ref")) {
      if (!j["ref"].is_string()) throw SchemaError(where + "/ref: expected a string");
      std::string port;
      if (j.contains("port")) {
        if (!j["port"].is_string()) throw SchemaError(where + "/port: expected a string");
        port = j["port"].get<std::string>();
      }
      return Expr::ref(j["ref"].get<std::string>(), port);
    }
    if (j.contains("vec3")) {
      const json& v = j["vec3"];
      if (!v.is_array() || v.size() != 3) throw SchemaError(where + "/vec3: expected 3 components");
      return Expr::vec(expr_from_json(v[0], where + "/vec3/0"), expr_from_json(v[1], where + "/vec3/1"),
                       expr_from_json(v[2], where + "/vec3/2"));
    }
  }
  throw SchemaError(where + ": unsupported expression");
}

Graph decode(const json& doc, const NodeRegistry& registry) {
  if (!doc.is_object()) throw SchemaError(": expected an object");
  Graph g;
  if (doc.contains("params")) {
    const json& ps = doc["params"];
    if (!ps.is_array()) throw SchemaError("/params: expected an array");
    for (std::size_t i = 0; i < ps.size(); ++i) {
      const std::string at = "/params/" + std::to_string(i);
      const json& p = ps[i];
      if (!p.is_object() || !p.contains("name") || !p["name"].is_string() || !p.contains("type") ||
          !p["type"].is_string() || !p.contains("default"))
        throw SchemaError(at + ": expected {name, type, default}");
      ParamSpec spec;
      spec.name = p["name"].get<std::string>();
      auto type = parse_value_type(p["type"].get<std::string>());
      if (!type) throw SchemaError(at + "/type: unknown type");
      spec.type = *type;
      Expr d = expr_from_json(p["default"], at + "/default");
      if (d.kind != Expr::Kind::Literal) throw SchemaError(at + "/default: expected a literal");
      spec.default_value = d.literal;
      if (spec.type == ValueType::Float && spec.default_value.is_int())
        spec.default_value = Value(spec.default_value.as_float());
      if (p.contains("range")) {
        const json& r = p["range"];
        if (!r.is_array() || r.size() != 2 || !r[0].is_number() || !r[1].is_number())
          throw SchemaError(at + "/range: expected [lo, hi]");
        spec.range = std::make_pair(r[0].get<double>(), r[1].get<double>());
      }
      g.params.push_back(std::move(spec));
    }
  }
  if (doc.contains("nodes")) {
    const json& ns = doc["nodes"];
    if (!ns.is_array()) throw SchemaError("/nodes: expected an array");
    for (std::size_t i = 0; i < ns.size(); ++i) {
      const std::string at = "/nodes/" + std::to_string(i);
      const json& n = ns[i];
      if (!n.is_object() || !n.contains("id") || !n["id"].is_string() || !n.contains("kind") || !n["kind"].is_string())
        throw SchemaError(at + ": expected {id, kind, args}");
      Node node;
      node.id = n["id"].get<std::string>();
      node.kind = n["kind"].get<std::string>();
      const NodeKind* kind = registry.find(node.kind);
      if (kind) node.kind = kind->name;
      if (n.contains("args")) {
        if (!n["args"].is_object()) throw SchemaError(at + "/args: expected an object");
        for (const auto& [port, e] : n["args"].items()) {
          Expr ex = expr_from_json(e, at + "/args/" + port);
          const InputPort* in = kind ? kind->find_input(port) : nullptr;
          if (in && in->variadic && ex.kind != Expr::Kind::List) ex = Expr::list({std::move(ex)});
          node.args.emplace(port, std::move(ex));
        }
      }
      g.nodes.push_back(std::move(node));
    }
  }
  if (doc.contains("output") && !doc["output"].is_null()) g.output = expr_from_json(doc["output"], "/output");
  return g;
}

}  // namespace

ojson value_to_json(const Value& v) {
  switch (v.type()) {
    case ValueType::Float: return v.as_float();
    case ValueType::Int: return v.as_int();
    case ValueType::Bool: return v.as_bool();
    case ValueType::Vec3: {
      const Vec3& x = v.as_vec3();
      return ojson::array({x.x, x.y, x.z});
    }
    default: return nullptr;
  }
}

ojson graph_to_json(const Graph& graph, const NodeRegistry& registry) {
  ojson doc;
  ojson params = ojson::array();
  for (const auto& p : graph.params) {
    ojson j;
    j["name"] = p.name;
    j["type"] = std::string(to_string(p.type));
    j["default"] = value_to_json(p.default_value);
    if (p.range) j["range"] = ojson::array({p.range->first, p.range->second});
    params.push_back(std::move(j));
  }
  doc["params"] = std::move(params);

  std::map<std::string_view, const Node*> by_id;
  for (const auto& n : graph.nodes) by_id.emplace(n.id, &n);
  ojson nodes = ojson::array();
  for (const auto& id : topo_order(graph)) {
    const Node& n = *by_id.at(id);
    ojson j;
    j["id"] = n.id;
    j["kind"] = n.kind;
    ojson args = ojson::object();
    std::set<std::string_view> done;
    if (const NodeKind* kind = registry.find(n.kind)) {
      for (const auto& in : kind->inputs) {
        if (auto it = n.args.find(in.name); it != n.args.end()) {
          args[in.name] = expr_to_json(it->second);
          done.insert(in.name);
        }
      }
    }
    for (const auto& [port, e] : n.args)
      if (!done.count(port)) args[port] = expr_to_json(e);
    j["args"] = std::move(args);
    nodes.push_back(std::move(j));
  }
  doc["nodes"] = std::move(nodes);
  doc["output"] = graph.output ? expr_to_json(*graph.output) : ojson(nullptr);
  return doc;
}

std::string graph_to_json_text(const Graph& graph, int indent, const NodeRegistry& registry) {
  return graph_to_json(graph, registry).dump(indent) + "\n";
}

ParseResult graph_from_json(const json& doc, const NodeRegistry& registry) {
  ParseResult result;
  Graph g;
  try {
    g = decode(doc, registry);
  } catch (const SchemaError& e) {
    result.diagnostics.push_back({Severity::Error, 0, std::string("schema error at ") + e.what(), diag::kSyntaxError});
    return result;
  } catch (const json::exception& e) {
    result.diagnostics.push_back({Severity::Error, 0, e.what(), diag::kSyntaxError});
    return result;
  }
  result.diagnostics = validate(g, registry);
  if (!has_errors(result.diagnostics)) result.graph = std::move(g);
  return result;
}

ParseResult graph_from_json_text(std::string_view text, const NodeRegistry& registry) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) {
    ParseResult r;
    r.diagnostics.push_back({Severity::Error, 0, "malformed JSON", diag::kSyntaxError});
    return r;
  }
  return graph_from_json(doc, registry);
}

}  // namespace proc3d
