#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "proc3d/graph.hpp"

namespace proc3d {

/// Canonical JSON form of a graph:
///   {"params":[{"name","type","default","range"?}...],
///    "nodes":[{"id","kind","args":{port: expr}}...],
///    "output":{"ref":id,"port"?:p}}
/// Expressions: JSON numbers/bools for literals, {"ref":name,"port"?:p} for references,
/// {"vec3":[e,e,e]} for vectors and arrays for variadic argument lists. Nodes appear in
/// canonical (topological) order and arguments in port order.
nlohmann::ordered_json graph_to_json(const Graph& graph, const NodeRegistry& registry = NodeRegistry::builtin());
std::string graph_to_json_text(const Graph& graph, int indent = 2,
                               const NodeRegistry& registry = NodeRegistry::builtin());

/// Decodes and validates. Schema problems become SyntaxError diagnostics (line 0).
ParseResult graph_from_json(const nlohmann::json& doc, const NodeRegistry& registry = NodeRegistry::builtin());
ParseResult graph_from_json_text(std::string_view text, const NodeRegistry& registry = NodeRegistry::builtin());

nlohmann::ordered_json value_to_json(const Value& v);

}  // namespace proc3d
