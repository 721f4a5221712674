#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "proc3d/value.hpp"

namespace proc3d {

struct InputPort {
  std::string name;
  ValueType type = ValueType::Float;
  /// Unset means the argument is required.
  std::optional<Value> default_value;
  /// Accepts any number of geometry arguments (join).
  bool variadic = false;
  /// A Geometry port that also accepts curves; the node's output then follows this input's type.
  bool accepts_curve = false;
};

struct OutputPort {
  std::string name;
  ValueType type = ValueType::Geometry;
};

struct NodeKind {
  std::string name;
  std::vector<InputPort> inputs;
  std::vector<OutputPort> outputs;
  std::vector<std::string> aliases;
  std::string summary;
  /// `input` and `output` have dedicated statement syntax and cannot be instantiated as nodes.
  bool declaration_only = false;

  const InputPort* find_input(std::string_view port) const;
  int input_index(std::string_view port) const;
  int output_index(std::string_view port) const;
  /// Index of the input whose type decides the output type, or -1.
  int polymorphic_input() const;
};

/// Node-kind catalog. Lookup is case-insensitive over names and aliases.
class NodeRegistry {
 public:
  void add(NodeKind kind);
  const NodeKind* find(std::string_view name) const;
  const std::vector<NodeKind>& kinds() const { return kinds_; }

  /// The built-in working subset: input, output, primitives, curve ops, transforms,
  /// combinators and scalar math.
  static const NodeRegistry& builtin();

 private:
  std::vector<NodeKind> kinds_;
};

}  // namespace proc3d
