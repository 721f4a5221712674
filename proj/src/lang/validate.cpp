#include <algorithm>
#include <functional>
#include <queue>
#include <set>
#include <unordered_map>

#include "proc3d/graph.hpp"

namespace proc3d {
namespace {

bool valid_identifier(std::string_view s) {
  if (s.empty()) return false;
  if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  return std::all_of(s.begin(), s.end(),
                     [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

bool reserved(std::string_view s) { return s == "input" || s == "output" || s == "true" || s == "false"; }

/// Node index lookup plus reference edges, shared by validation and ordering.
struct Index {
  std::unordered_map<std::string, std::size_t> node_by_id;
  std::unordered_map<std::string, std::size_t> param_by_name;
  std::vector<std::vector<std::size_t>> deps;  // node -> referenced nodes

  explicit Index(const Graph& g) {
    for (std::size_t i = 0; i < g.params.size(); ++i) param_by_name.emplace(g.params[i].name, i);
    for (std::size_t i = 0; i < g.nodes.size(); ++i) node_by_id.emplace(g.nodes[i].id, i);
    deps.resize(g.nodes.size());
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
      std::vector<const Expr*> refs;
      for (const auto& [port, e] : g.nodes[i].args) collect_refs(e, refs);
      for (const Expr* r : refs) {
        if (param_by_name.count(r->target) && r->port.empty()) continue;
        if (auto it = node_by_id.find(r->target); it != node_by_id.end()) deps[i].push_back(it->second);
      }
    }
  }
};

/// Kahn's algorithm with ties broken by original position. Returns fewer than n indices on a cycle.
std::vector<std::size_t> kahn(const Graph& g, const Index& idx) {
  const std::size_t n = g.nodes.size();
  std::vector<std::size_t> indegree(n, 0);
  std::vector<std::vector<std::size_t>> users(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> unique = idx.deps[i];
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    indegree[i] = unique.size();
    for (std::size_t d : unique) users[d].push_back(i);
  }
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t i = 0; i < n; ++i)
    if (indegree[i] == 0) ready.push(i);
  std::vector<std::size_t> order;
  order.reserve(n);
  while (!ready.empty()) {
    const std::size_t i = ready.top();
    ready.pop();
    order.push_back(i);
    for (std::size_t u : users[i])
      if (--indegree[u] == 0) ready.push(u);
  }
  return order;
}

/// Strongly connected components that form cycles (size > 1 or self-loop).
std::vector<std::vector<std::size_t>> cycles(const Graph& g, const Index& idx) {
  const std::size_t n = g.nodes.size();
  std::vector<int> index(n, -1), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::vector<std::vector<std::size_t>> out;
  int counter = 0;

  // Iterative Tarjan to stay safe on long chains.
  struct Frame {
    std::size_t v;
    std::size_t next_edge;
  };
  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] >= 0) continue;
    std::vector<Frame> call{{root, 0}};
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!call.empty()) {
      Frame& f = call.back();
      const auto& edges = idx.deps[f.v];
      if (f.next_edge < edges.size()) {
        const std::size_t w = edges[f.next_edge++];
        if (index[w] < 0) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          call.push_back({w, 0});
        } else if (on_stack[w]) {
          low[f.v] = std::min(low[f.v], index[w]);
        }
        continue;
      }
      const std::size_t v = f.v;
      call.pop_back();
      if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
      if (low[v] == index[v]) {
        std::vector<std::size_t> comp;
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp.push_back(w);
        } while (w != v);
        const bool self_loop = std::find(idx.deps[v].begin(), idx.deps[v].end(), v) != idx.deps[v].end();
        if (comp.size() > 1 || self_loop) {
          std::sort(comp.begin(), comp.end());
          out.push_back(std::move(comp));
        }
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

class Validator {
 public:
  Validator(const Graph& g, const NodeRegistry& reg) : g_(g), reg_(reg), idx_(g) {}

  std::vector<Diagnostic> run() {
    check_params();
    check_nodes();
    check_cycles();
    check_types();
    check_output();
    return std::move(diags_);
  }

 private:
  void error(int line, const char* code, std::string msg) {
    diags_.push_back({Severity::Error, line, std::move(msg), code});
  }

  void check_params() {
    std::set<std::string, std::less<>> seen;
    for (const auto& p : g_.params) {
      if (!valid_identifier(p.name) || reserved(p.name))
        error(p.line, diag::kSyntaxError, "invalid parameter name '" + p.name + "'");
      if (!seen.insert(p.name).second) error(p.line, diag::kDuplicateId, "duplicate name '" + p.name + "'");
      if (p.type != ValueType::Float && p.type != ValueType::Int && p.type != ValueType::Bool) {
        error(p.line, diag::kTypeMismatch, "parameter '" + p.name + "' must be float, int or bool");
        continue;
      }
      const ValueType dt = p.default_value.type();
      if (!(dt == p.type || (p.type == ValueType::Float && dt == ValueType::Int))) {
        error(p.line, diag::kInvalidDefault,
              "default of '" + p.name + "' is " + std::string(to_string(dt)) + ", expected " +
                  std::string(to_string(p.type)));
        continue;
      }
      if (p.range) {
        if (p.type == ValueType::Bool) {
          error(p.line, diag::kInvalidDefault, "bool parameter '" + p.name + "' cannot declare a range");
          continue;
        }
        const auto [lo, hi] = *p.range;
        const double d = p.default_value.as_float();
        if (!(lo <= hi)) {
          error(p.line, diag::kInvalidDefault, "empty range for '" + p.name + "'");
        } else if (!(d >= lo && d <= hi)) {
          error(p.line, diag::kInvalidDefault, "default of '" + p.name + "' lies outside its range");
        }
      }
    }
  }

  void check_nodes() {
    std::set<std::string, std::less<>> seen;
    for (const auto& p : g_.params) seen.insert(p.name);
    for (const auto& n : g_.nodes) {
      if (!valid_identifier(n.id) || reserved(n.id))
        error(n.line, diag::kSyntaxError, "invalid node id '" + n.id + "'");
      if (!seen.insert(n.id).second) error(n.line, diag::kDuplicateId, "duplicate name '" + n.id + "'");

      const NodeKind* kind = reg_.find(n.kind);
      if (!kind) {
        error(n.line, diag::kUnknownNodeKind, "unknown node kind '" + n.kind + "'");
      } else if (kind->declaration_only) {
        error(n.line, diag::kSyntaxError, "'" + kind->name + "' cannot be used as a node");
      } else {
        for (const auto& [port, e] : n.args)
          if (!kind->find_input(port))
            error(n.line, diag::kUnknownPort, "'" + kind->name + "' has no input '" + port + "'");
        for (const auto& in : kind->inputs)
          if (!in.default_value && !in.variadic && !n.args.count(in.name))
            error(n.line, diag::kMissingArgument, "'" + n.id + "' is missing required input '" + in.name + "'");
      }

      std::vector<const Expr*> refs;
      for (const auto& [port, e] : n.args) collect_refs(e, refs);
      for (const Expr* r : refs) check_ref(*r, n.line);
    }
  }

  void check_ref(const Expr& r, int line) {
    if (idx_.param_by_name.count(r.target)) {
      if (!r.port.empty())
        error(line, diag::kUnresolvedReference, "parameter '" + r.target + "' has no port '" + r.port + "'");
      return;
    }
    auto it = idx_.node_by_id.find(r.target);
    if (it == idx_.node_by_id.end()) {
      error(line, diag::kUnresolvedReference, "'" + r.target + "' is not defined");
      return;
    }
    if (r.port.empty()) return;
    const NodeKind* kind = reg_.find(g_.nodes[it->second].kind);
    if (kind && kind->output_index(r.port) < 0)
      error(line, diag::kUnresolvedReference, "'" + r.target + "' has no output '" + r.port + "'");
  }

  void check_cycles() {
    for (const auto& comp : cycles(g_, idx_)) {
      std::string names;
      for (std::size_t i : comp) names += (names.empty() ? "" : ", ") + g_.nodes[i].id;
      error(g_.nodes[comp.front()].line, diag::kCycleDetected, "reference cycle through " + names);
      for (std::size_t i : comp) in_cycle_.insert(i);
    }
  }

  /// Output type of node i, or nullopt when unknown (bad kind, cycle, unresolved input).
  std::optional<ValueType> node_type(std::size_t i, std::string_view port) {
    if (in_cycle_.count(i)) return std::nullopt;
    const Node& n = g_.nodes[i];
    const NodeKind* kind = reg_.find(n.kind);
    if (!kind || kind->outputs.empty() || kind->declaration_only) return std::nullopt;
    int out = 0;
    if (!port.empty()) {
      out = kind->output_index(port);
      if (out < 0) return std::nullopt;
    }
    const int poly = kind->polymorphic_input();
    if (out == 0 && poly >= 0) {
      auto it = n.args.find(kind->inputs[static_cast<std::size_t>(poly)].name);
      if (it == n.args.end()) return ValueType::Geometry;
      auto t = expr_type(it->second);
      if (t == ValueType::Curve) return ValueType::Curve;
      return ValueType::Geometry;
    }
    return kind->outputs[static_cast<std::size_t>(out)].type;
  }

  std::optional<ValueType> expr_type(const Expr& e) {
    switch (e.kind) {
      case Expr::Kind::Literal: return e.literal.type();
      case Expr::Kind::Vec: return ValueType::Vec3;
      case Expr::Kind::List: return std::nullopt;
      case Expr::Kind::Ref: {
        if (auto p = idx_.param_by_name.find(e.target); p != idx_.param_by_name.end()) {
          if (!e.port.empty()) return std::nullopt;
          return g_.params[p->second].type;
        }
        auto it = idx_.node_by_id.find(e.target);
        if (it == idx_.node_by_id.end()) return std::nullopt;
        if (depth_ > 4096) return std::nullopt;
        ++depth_;
        auto t = node_type(it->second, e.port);
        --depth_;
        return t;
      }
    }
    return std::nullopt;
  }

  void check_arg(const Node& n, const InputPort& in, const Expr& e) {
    auto mismatch = [&](const std::string& what) {
      error(n.line, diag::kTypeMismatch, "'" + n.id + "." + in.name + "' expects " + std::string(to_string(in.type)) +
                                             ", got " + what);
    };
    if (in.variadic) {
      if (e.kind != Expr::Kind::List) {
        mismatch("a single value where a list is required");
        return;
      }
      for (const auto& item : e.items) {
        if (item.kind == Expr::Kind::List) {
          mismatch("a nested list");
          continue;
        }
        auto t = expr_type(item);
        if (t && !implicitly_converts(*t, in.type)) mismatch(std::string(to_string(*t)));
      }
      return;
    }
    if (e.kind == Expr::Kind::List) {
      mismatch("a list");
      return;
    }
    if (e.kind == Expr::Kind::Vec) {
      if (in.type != ValueType::Vec3) {
        mismatch("vec3");
        return;
      }
      for (const auto& c : e.items) {
        if (c.kind == Expr::Kind::Vec || c.kind == Expr::Kind::List) {
          mismatch("a non-scalar vector component");
          continue;
        }
        auto t = expr_type(c);
        if (t && !implicitly_converts(*t, ValueType::Float)) mismatch("vec3 component of type " + std::string(to_string(*t)));
      }
      return;
    }
    auto t = expr_type(e);
    if (!t) return;
    const bool ok = implicitly_converts(*t, in.type) || (in.accepts_curve && *t == ValueType::Curve);
    if (!ok) mismatch(std::string(to_string(*t)));
  }

  void check_types() {
    for (const auto& n : g_.nodes) {
      const NodeKind* kind = reg_.find(n.kind);
      if (!kind || kind->declaration_only) continue;
      for (const auto& [port, e] : n.args) {
        const InputPort* in = kind->find_input(port);
        if (in) check_arg(n, *in, e);
      }
    }
  }

  void check_output() {
    if (!g_.output) {
      error(0, diag::kMissingOutput, "missing 'output = <node>' declaration");
      return;
    }
    const Expr& o = *g_.output;
    if (o.kind != Expr::Kind::Ref) {
      error(g_.output_line, diag::kTypeMismatch, "output must reference a node producing geometry");
      return;
    }
    const std::size_t before = diags_.size();
    check_ref(o, g_.output_line);
    if (diags_.size() != before) return;
    auto t = expr_type(o);
    if (t && *t != ValueType::Geometry)
      error(g_.output_line, diag::kTypeMismatch,
            "output must be geometry, '" + o.target + "' produces " + std::string(to_string(*t)));
  }

  const Graph& g_;
  const NodeRegistry& reg_;
  Index idx_;
  std::set<std::size_t> in_cycle_;
  std::vector<Diagnostic> diags_;
  int depth_ = 0;
};

void print_expr(const Expr& e, std::string& out) {
  switch (e.kind) {
    case Expr::Kind::Literal:
      if (e.literal.is_bool())
        out += e.literal.as_bool() ? "true" : "false";
      else if (e.literal.is_int())
        out += std::to_string(e.literal.as_int());
      else
        out += format_float(e.literal.as_float());
      break;
    case Expr::Kind::Ref:
      out += e.target;
      if (!e.port.empty()) out += "." + e.port;
      break;
    case Expr::Kind::Vec:
    case Expr::Kind::List:
      if (e.kind == Expr::Kind::Vec) out += "(";
      for (std::size_t i = 0; i < e.items.size(); ++i) {
        if (i) out += ", ";
        print_expr(e.items[i], out);
      }
      if (e.kind == Expr::Kind::Vec) out += ")";
      break;
  }
}

std::string print_range_bound(double v, ValueType type) {
  if (type == ValueType::Int && v == static_cast<double>(static_cast<std::int64_t>(v)))
    return std::to_string(static_cast<std::int64_t>(v));
  return format_float(v);
}

}  // namespace

void collect_refs(const Expr& e, std::vector<const Expr*>& out) {
  if (e.kind == Expr::Kind::Ref) out.push_back(&e);
  for (const auto& item : e.items) collect_refs(item, out);
}

const ParamSpec* Graph::find_param(std::string_view name) const {
  for (const auto& p : params)
    if (p.name == name) return &p;
  return nullptr;
}

const Node* Graph::find_node(std::string_view id) const {
  for (const auto& n : nodes)
    if (n.id == id) return &n;
  return nullptr;
}

bool structurally_equal(const Graph& a, const Graph& b) {
  if (a.params != b.params || a.output != b.output || a.nodes.size() != b.nodes.size()) return false;
  std::map<std::string_view, const Node*> bn;
  for (const auto& n : b.nodes) bn.emplace(n.id, &n);
  for (const auto& n : a.nodes) {
    auto it = bn.find(n.id);
    if (it == bn.end() || !(*it->second == n)) return false;
  }
  return true;
}

std::vector<Diagnostic> validate(const Graph& graph, const NodeRegistry& registry) {
  return Validator(graph, registry).run();
}

std::vector<std::string> topo_order(const Graph& graph) {
  Index idx(graph);
  auto order = kahn(graph, idx);
  if (order.size() != graph.nodes.size()) {
    std::vector<bool> placed(graph.nodes.size(), false);
    for (auto i : order) placed[i] = true;
    std::string stuck;
    for (std::size_t i = 0; i < placed.size(); ++i)
      if (!placed[i]) stuck += (stuck.empty() ? "" : ", ") + graph.nodes[i].id;
    throw CycleError("reference cycle among: " + stuck);
  }
  std::vector<std::string> ids;
  ids.reserve(order.size());
  for (auto i : order) ids.push_back(graph.nodes[i].id);
  return ids;
}

std::vector<ParamSpec> list_params(const Graph& graph) { return graph.params; }

std::optional<ValueType> node_output_type(const Graph& graph, const Node& node, std::string_view port,
                                          const NodeRegistry& registry) {
  const NodeKind* kind = registry.find(node.kind);
  if (!kind || kind->outputs.empty()) return std::nullopt;
  int out = port.empty() ? 0 : kind->output_index(port);
  if (out < 0) return std::nullopt;
  const int poly = kind->polymorphic_input();
  if (out == 0 && poly >= 0) {
    auto it = node.args.find(kind->inputs[static_cast<std::size_t>(poly)].name);
    if (it == node.args.end() || it->second.kind != Expr::Kind::Ref) return ValueType::Geometry;
    const Expr& src = it->second;
    if (graph.find_param(src.target)) return ValueType::Geometry;
    const Node* up = graph.find_node(src.target);
    if (!up || up == &node) return std::nullopt;
    auto t = node_output_type(graph, *up, src.port, registry);
    return t == ValueType::Curve ? ValueType::Curve : ValueType::Geometry;
  }
  return kind->outputs[static_cast<std::size_t>(out)].type;
}

std::string print_pcg(const Graph& graph, const NodeRegistry& registry) {
  std::string out;
  for (const auto& p : graph.params) {
    out += "input " + p.name + ": " + std::string(to_string(p.type)) + " = ";
    print_expr(Expr{Expr::Kind::Literal, p.default_value, {}, {}, {}}, out);
    if (p.range)
      out += " [" + print_range_bound(p.range->first, p.type) + ".." + print_range_bound(p.range->second, p.type) + "]";
    out += "\n";
  }
  std::map<std::string_view, const Node*> by_id;
  for (const auto& n : graph.nodes) by_id.emplace(n.id, &n);
  for (const auto& id : topo_order(graph)) {
    const Node& n = *by_id.at(id);
    out += n.id + " = " + n.kind + "(";
    const NodeKind* kind = registry.find(n.kind);
    bool first = true;
    auto sep = [&] {
      if (!first) out += ", ";
      first = false;
    };
    std::set<std::string_view> printed;
    if (kind) {
      bool positional = true;
      for (const auto& in : kind->inputs) {
        auto it = n.args.find(in.name);
        if (it == n.args.end()) {
          positional = false;
          continue;
        }
        sep();
        if (!positional) out += in.name + "=";
        print_expr(it->second, out);
        printed.insert(in.name);
      }
    }
    for (const auto& [port, e] : n.args) {
      if (printed.count(port)) continue;
      sep();
      out += port + "=";
      print_expr(e, out);
    }
    out += ")\n";
  }
  if (graph.output) {
    out += "output = ";
    print_expr(*graph.output, out);
    out += "\n";
  }
  return out;
}

}  // namespace proc3d
