#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "proc3d/registry.hpp"
#include "proc3d/value.hpp"

namespace proc3d {

/// Argument expression: a scalar literal, a reference to a parameter or node output, a vec3
/// built from three scalar expressions, or the argument list of a variadic port.
struct Expr {
  enum class Kind { Literal, Ref, Vec, List };

  Kind kind = Kind::Literal;
  Value literal;                ///< Literal: Float, Int or Bool.
  std::string target;           ///< Ref: parameter name or node id.
  std::string port;             ///< Ref: optional output port name.
  std::vector<Expr> items;      ///< Vec (exactly 3) or List.

  static Expr number(double v);
  static Expr integer(std::int64_t v);
  static Expr boolean(bool v);
  static Expr ref(std::string target, std::string port = {});
  static Expr vec(Expr x, Expr y, Expr z);
  static Expr list(std::vector<Expr> items);

  friend bool operator==(const Expr&, const Expr&) = default;
};

struct ParamSpec {
  std::string name;
  ValueType type = ValueType::Float;
  Value default_value;
  std::optional<std::pair<double, double>> range;
  int line = 0;

  friend bool operator==(const ParamSpec& a, const ParamSpec& b) {
    return a.name == b.name && a.type == b.type && a.default_value == b.default_value && a.range == b.range;
  }
};

struct Node {
  std::string id;
  /// Canonical registry name of the node kind.
  std::string kind;
  std::map<std::string, Expr> args;
  int line = 0;

  friend bool operator==(const Node& a, const Node& b) {
    return a.id == b.id && a.kind == b.kind && a.args == b.args;
  }
};

/// A procedural compact graph: declared inputs, nodes and a single output reference.
/// Values are immutable in practice; editing produces a new Graph.
struct Graph {
  std::vector<ParamSpec> params;
  std::vector<Node> nodes;
  std::optional<Expr> output;
  int output_line = 0;

  const ParamSpec* find_param(std::string_view name) const;
  const Node* find_node(std::string_view id) const;
};

/// Params compared in order, nodes as a set keyed by id, and the output reference.
/// Source line numbers are ignored.
bool structurally_equal(const Graph& a, const Graph& b);

enum class Severity { Error, Warning };

namespace diag {
inline constexpr const char* kLexError = "LexError";
inline constexpr const char* kSyntaxError = "SyntaxError";
inline constexpr const char* kUnknownNodeKind = "UnknownNodeKind";
inline constexpr const char* kDuplicateId = "DuplicateId";
inline constexpr const char* kUnresolvedReference = "UnresolvedReference";
inline constexpr const char* kCycleDetected = "CycleDetected";
inline constexpr const char* kTypeMismatch = "TypeMismatch";
inline constexpr const char* kMissingOutput = "MissingOutput";
inline constexpr const char* kDuplicateOutput = "DuplicateOutput";
inline constexpr const char* kUnknownPort = "UnknownPort";
inline constexpr const char* kMissingArgument = "MissingArgument";
inline constexpr const char* kDuplicateArgument = "DuplicateArgument";
inline constexpr const char* kTooManyArguments = "TooManyArguments";
inline constexpr const char* kInvalidDefault = "InvalidDefault";
inline constexpr const char* kNoGraphFound = "NoGraphFound";
}  // namespace diag

struct Diagnostic {
  Severity severity = Severity::Error;
  int line = 0;  ///< 1-based; 0 when the graph was built without source text.
  std::string message;
  std::string code;

  friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

std::string format_diagnostic(const Diagnostic& d);
bool has_errors(const std::vector<Diagnostic>& diagnostics);

struct ParseResult {
  std::optional<Graph> graph;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return graph.has_value(); }
};

/// Parses PCG text. Never throws on malformed input; every problem becomes a Diagnostic and
/// the graph is only returned when no Error was reported.
ParseResult parse_pcg(std::string_view source, const NodeRegistry& registry = NodeRegistry::builtin());

/// Canonical text: params in declaration order, nodes in topological order (ties by original
/// order), then the output line. Requires a valid graph.
std::string print_pcg(const Graph& graph, const NodeRegistry& registry = NodeRegistry::builtin());

/// Checks every graph invariant and port type. Reports all violations.
std::vector<Diagnostic> validate(const Graph& graph, const NodeRegistry& registry = NodeRegistry::builtin());

class CycleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Node ids such that each node follows everything it references. Throws CycleError.
std::vector<std::string> topo_order(const Graph& graph);

std::vector<ParamSpec> list_params(const Graph& graph);

/// Identifier runs ([A-Za-z0-9_]+) are one token; every other non-whitespace code point is one.
std::size_t count_tokens(std::string_view text);

/// Ids of every node or parameter referenced by an expression, in order of appearance.
void collect_refs(const Expr& e, std::vector<const Expr*>& out);

/// Static output type of an expression or node, resolved against a validated graph.
std::optional<ValueType> node_output_type(const Graph& graph, const Node& node,
                                          std::string_view port = {},
                                          const NodeRegistry& registry = NodeRegistry::builtin());

}  // namespace proc3d
