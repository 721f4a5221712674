#pragma once

#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "proc3d/graph.hpp"

namespace proc3d {

class UnsupportedKind : public std::runtime_error {
 public:
  UnsupportedKind(std::string kind, std::string backend, std::string node)
      : std::runtime_error("node '" + node + "' of kind '" + kind + "' has no " + backend + " mapping"),
        kind_(std::move(kind)), backend_(std::move(backend)), node_(std::move(node)) {}
  const std::string& kind() const { return kind_; }
  const std::string& backend() const { return backend_; }
  const std::string& node() const { return node_; }

 private:
  std::string kind_, backend_, node_;
};

/// An emitter from a validated graph to an engine-specific text format. Emission is
/// deterministic for a given graph.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string name() const = 0;
  virtual std::string emit(const Graph& graph) const = 0;
  /// Registered node kinds this backend cannot express.
  virtual std::vector<std::string> unsupported_kinds() const { return {}; }
};

/// Infinigen node-wrangler script: a GroupInput exposing one socket per parameter, one
/// `nw.new_node` per graph node in topological order and a GroupOutput.
std::string to_blender_python(const Graph& graph);
/// Canonical JSON interchange (same encoding as graph_to_json_text).
std::string to_json(const Graph& graph);

/// Built-in backends by name: "blender_python", "json". Returns nullptr when unknown.
const Backend* find_backend(std::string_view name);
std::vector<std::string> backend_names();

struct CompactnessReport {
  std::size_t pcg_tokens = 0;
  std::map<std::string, std::size_t> tokens;  ///< per backend
  std::map<std::string, double> ratios;       ///< backend tokens / pcg tokens
};

CompactnessReport compactness_report(const Graph& graph);

}  // namespace proc3d
