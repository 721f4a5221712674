#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "proc3d/graph.hpp"
#include "proc3d/primitives.hpp"

namespace proc3d {

using Bindings = std::map<std::string, Value, std::less<>>;

/// Checks a binding against its parameter and returns it in the parameter's type
/// (Int widens to Float). Throws EvalError (BindingTypeError, RangeError).
Value coerce_binding(const ParamSpec& param, const Value& value);

/// Declared defaults of every parameter.
Bindings default_bindings(const Graph& graph);

/// Evaluation state for one editing stream: the graph, current bindings and a per-node value
/// cache. A cached value is valid as long as no parameter in the node's transitive input set
/// changed since it was computed. Not thread-safe; one owner at a time.
class EvalSession {
 public:
  /// Validates the graph and performs a full evaluation. Throws EvalError.
  explicit EvalSession(Graph graph, const Bindings& bindings = {},
                       const NodeRegistry& registry = NodeRegistry::builtin());

  EvalSession(const EvalSession&) = default;
  EvalSession(EvalSession&&) noexcept = default;
  EvalSession& operator=(const EvalSession&) = default;
  EvalSession& operator=(EvalSession&&) noexcept = default;

  /// Applies a partial set of bindings and recomputes only invalidated nodes that the output
  /// demands. On error the session is left unchanged.
  const MeshPtr& reevaluate(const Bindings& delta);

  const MeshPtr& mesh() const { return mesh_; }
  const Graph& graph() const;
  /// Current value of every parameter.
  Bindings bindings() const;
  const Value& binding(std::string_view name) const;

  /// Nodes computed by the most recent evaluation call.
  std::size_t last_recompute_count() const { return last_recomputed_; }
  /// Node computations since construction.
  std::size_t total_recompute_count() const { return total_recomputed_; }
  /// How many times node `id` has been computed.
  std::size_t recompute_count(std::string_view id) const;

  /// Node id whose ordinal is used as a triangle tag, or empty.
  std::string tag_owner(std::uint32_t tag) const;

  struct Plan;

 private:
  std::shared_ptr<const Plan> plan_;
  std::vector<Value> params_;
  std::vector<std::optional<Value>> cache_;
  std::vector<std::size_t> node_counts_;
  MeshPtr mesh_;
  std::size_t last_recomputed_ = 0;
  std::size_t total_recomputed_ = 0;
};

/// Fresh evaluation of a graph. Deterministic: identical inputs give bit-identical meshes.
MeshPtr evaluate(const Graph& graph, const Bindings& bindings = {},
                 const NodeRegistry& registry = NodeRegistry::builtin());

}  // namespace proc3d
