#include "proc3d/evaluator.hpp"

#include <cmath>
#include <cstring>
#include <unordered_map>

namespace proc3d {

namespace {

enum class Op {
  Cube, Cylinder, Sphere, Rectangle, Fillet, Fill, Extrude, Transform, Translate, Rotate, Scale,
  Join, Switch, CombineXyz, InstanceOnPoints, Add, Subtract, Multiply, Divide, Unsupported
};

Op op_for(std::string_view kind) {
  static const std::unordered_map<std::string_view, Op> table = {
      {"cube", Op::Cube}, {"cylinder", Op::Cylinder}, {"sphere", Op::Sphere}, {"rectangle", Op::Rectangle},
      {"fillet", Op::Fillet}, {"fill", Op::Fill}, {"extrude", Op::Extrude}, {"transform", Op::Transform},
      {"translate", Op::Translate}, {"rotate", Op::Rotate}, {"scale", Op::Scale}, {"join", Op::Join},
      {"switch", Op::Switch}, {"combine_xyz", Op::CombineXyz}, {"instance_on_points", Op::InstanceOnPoints},
      {"add", Op::Add}, {"subtract", Op::Subtract}, {"multiply", Op::Multiply}, {"divide", Op::Divide}};
  auto it = table.find(kind);
  return it == table.end() ? Op::Unsupported : it->second;
}

/// Bitwise equality, so that e.g. 0.0 -> -0.0 still counts as a change.
bool same_bits(const Value& a, const Value& b) {
  if (a.type() != b.type()) return false;
  switch (a.type()) {
    case ValueType::Float: {
      const double x = a.as_float(), y = b.as_float();
      return std::memcmp(&x, &y, sizeof x) == 0;
    }
    case ValueType::Int: return a.as_int() == b.as_int();
    case ValueType::Bool: return a.as_bool() == b.as_bool();
    default: return a == b;
  }
}

struct CExpr {
  enum class Kind { Const, Param, Node, Vec, List } kind = Kind::Const;
  Value constant;
  std::size_t index = 0;
  bool widen = false;  // Int -> Float at the port
  std::vector<CExpr> items;
};

}  // namespace

struct EvalSession::Plan {
  Graph graph;
  struct CNode {
    Op op = Op::Unsupported;
    std::vector<std::optional<CExpr>> args;  // by kind input position; nullopt -> default
    std::vector<Value> defaults;
    std::vector<std::uint64_t> param_deps;   // transitive parameter bitset
  };
  std::vector<CNode> nodes;
  std::unordered_map<std::string, std::size_t> param_index;
  std::unordered_map<std::string, std::size_t> node_index;
  CExpr output;
  std::size_t words = 0;
};

namespace {

using Plan = EvalSession::Plan;

CExpr compile(const Expr& e, const Plan& plan, bool float_port) {
  CExpr c;
  switch (e.kind) {
    case Expr::Kind::Literal:
      c.kind = CExpr::Kind::Const;
      c.constant = (float_port && e.literal.is_int()) ? Value(e.literal.as_float()) : e.literal;
      break;
    case Expr::Kind::Ref:
      if (auto p = plan.param_index.find(e.target); p != plan.param_index.end()) {
        c.kind = CExpr::Kind::Param;
        c.index = p->second;
      } else {
        c.kind = CExpr::Kind::Node;
        c.index = plan.node_index.at(e.target);
      }
      c.widen = float_port;
      break;
    case Expr::Kind::Vec:
      c.kind = CExpr::Kind::Vec;
      for (const auto& item : e.items) c.items.push_back(compile(item, plan, true));
      break;
    case Expr::Kind::List:
      c.kind = CExpr::Kind::List;
      for (const auto& item : e.items) c.items.push_back(compile(item, plan, false));
      break;
  }
  return c;
}

void mark_deps(const CExpr& e, const Plan& plan, std::vector<std::uint64_t>& bits) {
  switch (e.kind) {
    case CExpr::Kind::Param: bits[e.index / 64] |= (1ull << (e.index % 64)); break;
    case CExpr::Kind::Node: {
      const auto& d = plan.nodes[e.index].param_deps;
      for (std::size_t w = 0; w < bits.size(); ++w) bits[w] |= d[w];
      break;
    }
    default:
      for (const auto& item : e.items) mark_deps(item, plan, bits);
  }
}

std::shared_ptr<const Plan> build_plan(Graph graph, const NodeRegistry& registry) {
  auto diags = validate(graph, registry);
  if (has_errors(diags)) {
    std::string msg = "graph does not validate:";
    for (const auto& d : diags)
      if (d.severity == Severity::Error) msg += "\n  " + format_diagnostic(d);
    throw EvalError(EvalErrorCode::StructuralError, msg);
  }
  auto plan = std::make_shared<Plan>();
  plan->graph = std::move(graph);
  const Graph& g = plan->graph;
  for (std::size_t i = 0; i < g.params.size(); ++i) plan->param_index.emplace(g.params[i].name, i);
  for (std::size_t i = 0; i < g.nodes.size(); ++i) plan->node_index.emplace(g.nodes[i].id, i);
  plan->words = (g.params.size() + 63) / 64;
  plan->nodes.resize(g.nodes.size());

  for (const auto& id : topo_order(g)) {
    const std::size_t i = plan->node_index.at(id);
    const Node& n = g.nodes[i];
    const NodeKind* kind = registry.find(n.kind);
    auto& cn = plan->nodes[i];
    cn.op = op_for(kind->name);
    cn.param_deps.assign(plan->words, 0);
    for (const auto& in : kind->inputs) {
      cn.defaults.push_back(in.default_value.value_or(Value()));
      auto it = n.args.find(in.name);
      if (it == n.args.end()) {
        cn.args.emplace_back(std::nullopt);
        continue;
      }
      cn.args.emplace_back(compile(it->second, *plan, in.type == ValueType::Float));
      mark_deps(*cn.args.back(), *plan, cn.param_deps);
    }
  }
  plan->output = compile(*g.output, *plan, false);
  return plan;
}

/// One evaluation pass over a working cache.
class Runner {
 public:
  Runner(const Plan& plan, const std::vector<Value>& params, std::vector<std::optional<Value>>& cache,
         std::vector<std::size_t>& counts)
      : plan_(plan), params_(params), cache_(cache), counts_(counts) {}

  std::size_t recomputed = 0;

  Value eval(const CExpr& e) {
    switch (e.kind) {
      case CExpr::Kind::Const: return e.constant;
      case CExpr::Kind::Param: {
        const Value& v = params_[e.index];
        return (e.widen && v.is_int()) ? Value(v.as_float()) : v;
      }
      case CExpr::Kind::Node: {
        const Value& v = node(e.index);
        return (e.widen && v.is_int()) ? Value(v.as_float()) : v;
      }
      case CExpr::Kind::Vec:
        return Value(Vec3{eval(e.items[0]).as_float(), eval(e.items[1]).as_float(), eval(e.items[2]).as_float()});
      case CExpr::Kind::List: break;
    }
    throw EvalError(EvalErrorCode::StructuralError, "list used as a value");
  }

  const Value& node(std::size_t i) {
    if (cache_[i]) return *cache_[i];
    const auto& id = plan_.graph.nodes[i].id;
    try {
      cache_[i] = compute(i);
    } catch (EvalError& e) {
      if (!e.node().empty()) throw;
      throw EvalError(e.code(), "node '" + id + "': " + e.what(), id);
    }
    ++recomputed;
    ++counts_[i];
    return *cache_[i];
  }

 private:
  Value arg(const Plan::CNode& n, std::size_t port) {
    const auto& a = n.args[port];
    return a ? eval(*a) : n.defaults[port];
  }
  double num(const Plan::CNode& n, std::size_t port) { return arg(n, port).as_float(); }

  static double checked(double v) {
    if (!std::isfinite(v)) throw EvalError(EvalErrorCode::NumericError, "non-finite result");
    return v;
  }

  static MeshPtr share(Mesh m) { return std::make_shared<const Mesh>(std::move(m)); }

  Value geometry_op(const Value& g, const Vec3& t, const Vec3& r, const Vec3& s) {
    if (g.type() == ValueType::Curve) return Value(std::make_shared<const Curve>(transform_curve(*g.as_curve(), t, r, s)));
    const MeshPtr& m = g.as_mesh();
    if (t == Vec3{0, 0, 0} && r == Vec3{0, 0, 0} && s == Vec3{1, 1, 1}) return Value(m);
    return Value(share(transform_mesh(*m, t, r, s)));
  }

  Value compute(std::size_t i) {
    const auto& n = plan_.nodes[i];
    const auto tag = static_cast<std::uint32_t>(i);
    const Vec3 zero{0, 0, 0}, one{1, 1, 1};
    switch (n.op) {
      case Op::Cube: return Value(share(make_cube(arg(n, 0).as_vec3(), tag)));
      case Op::Cylinder: return Value(share(make_cylinder(num(n, 0), num(n, 1), arg(n, 2).as_int(), tag)));
      case Op::Sphere: return Value(share(make_sphere(num(n, 0), arg(n, 1).as_int(), arg(n, 2).as_int(), tag)));
      case Op::Rectangle: return Value(std::make_shared<const Curve>(make_rectangle(num(n, 0), num(n, 1))));
      case Op::Fillet: {
        Value c = arg(n, 0);
        return Value(std::make_shared<const Curve>(fillet_curve(*c.as_curve(), num(n, 1), arg(n, 2).as_int())));
      }
      case Op::Fill: return Value(share(fill_curve(*arg(n, 0).as_curve(), tag)));
      case Op::Extrude: {
        Value cap = arg(n, 0);
        return Value(share(extrude_mesh(*cap.as_mesh(), num(n, 1), tag)));
      }
      case Op::Transform: {
        Value g = arg(n, 0);
        return geometry_op(g, arg(n, 1).as_vec3(), arg(n, 2).as_vec3(), arg(n, 3).as_vec3());
      }
      case Op::Translate: return geometry_op(arg(n, 0), arg(n, 1).as_vec3(), zero, one);
      case Op::Rotate: return geometry_op(arg(n, 0), zero, arg(n, 1).as_vec3(), one);
      case Op::Scale: return geometry_op(arg(n, 0), zero, zero, arg(n, 1).as_vec3());
      case Op::Join: {
        if (!n.args[0]) return Value(empty_mesh());
        std::vector<Value> parts;
        for (const auto& item : n.args[0]->items) parts.push_back(eval(item));
        if (parts.size() == 1) return parts.front();
        std::vector<const Mesh*> meshes;
        for (const auto& p : parts) meshes.push_back(p.as_mesh().get());
        return Value(share(concatenate(meshes)));
      }
      case Op::Switch: return arg(n, 0).as_bool() ? arg(n, 1) : arg(n, 2);
      case Op::CombineXyz: return Value(Vec3{num(n, 0), num(n, 1), num(n, 2)});
      case Op::InstanceOnPoints: {
        Value pts = arg(n, 0);
        Value inst = arg(n, 1);
        return Value(share(instance_on_points(*pts.as_curve(), *inst.as_mesh())));
      }
      case Op::Add: return Value(checked(num(n, 0) + num(n, 1)));
      case Op::Subtract: return Value(checked(num(n, 0) - num(n, 1)));
      case Op::Multiply: return Value(checked(num(n, 0) * num(n, 1)));
      case Op::Divide: {
        const double a = num(n, 0), b = num(n, 1);
        if (b == 0.0) throw EvalError(EvalErrorCode::NumericError, "division by zero");
        return Value(checked(a / b));
      }
      case Op::Unsupported: break;
    }
    throw EvalError(EvalErrorCode::StructuralError, "no evaluator for kind '" + plan_.graph.nodes[i].kind + "'");
  }

  const Plan& plan_;
  const std::vector<Value>& params_;
  std::vector<std::optional<Value>>& cache_;
  std::vector<std::size_t>& counts_;
};

}  // namespace

Value coerce_binding(const ParamSpec& param, const Value& value) {
  Value v = value;
  if (param.type == ValueType::Float && v.is_int()) v = Value(v.as_float());
  if (v.type() != param.type)
    throw EvalError(EvalErrorCode::BindingTypeError, "parameter '" + param.name + "' expects " +
                                                         std::string(to_string(param.type)) + ", got " +
                                                         std::string(to_string(value.type())));
  if (v.is_float() && !std::isfinite(v.as_float()))
    throw EvalError(EvalErrorCode::RangeError, "parameter '" + param.name + "' must be finite");
  if (param.range && (v.is_float() || v.is_int())) {
    const double x = v.as_float();
    if (x < param.range->first || x > param.range->second)
      throw EvalError(EvalErrorCode::RangeError, "parameter '" + param.name + "' = " + format_float(x) +
                                                     " is outside [" + format_float(param.range->first) + ", " +
                                                     format_float(param.range->second) + "]");
  }
  return v;
}

Bindings default_bindings(const Graph& graph) {
  Bindings b;
  for (const auto& p : graph.params) b.emplace(p.name, p.default_value);
  return b;
}

EvalSession::EvalSession(Graph graph, const Bindings& bindings, const NodeRegistry& registry)
    : plan_(build_plan(std::move(graph), registry)) {
  const Graph& g = plan_->graph;
  params_.reserve(g.params.size());
  for (const auto& p : g.params) params_.push_back(p.default_value);
  for (const auto& [name, value] : bindings) {
    auto it = plan_->param_index.find(name);
    if (it == plan_->param_index.end())
      throw EvalError(EvalErrorCode::UnknownParameter, "unknown parameter '" + name + "'");
    params_[it->second] = coerce_binding(g.params[it->second], value);
  }
  cache_.assign(g.nodes.size(), std::nullopt);
  node_counts_.assign(g.nodes.size(), 0);
  Runner run(*plan_, params_, cache_, node_counts_);
  Value out = run.eval(plan_->output);
  mesh_ = out.as_mesh();
  last_recomputed_ = run.recomputed;
  total_recomputed_ = run.recomputed;
}

const Graph& EvalSession::graph() const { return plan_->graph; }

Bindings EvalSession::bindings() const {
  Bindings b;
  for (std::size_t i = 0; i < params_.size(); ++i) b.emplace(plan_->graph.params[i].name, params_[i]);
  return b;
}

const Value& EvalSession::binding(std::string_view name) const {
  auto it = plan_->param_index.find(std::string(name));
  if (it == plan_->param_index.end())
    throw EvalError(EvalErrorCode::UnknownParameter, "unknown parameter '" + std::string(name) + "'");
  return params_[it->second];
}

const MeshPtr& EvalSession::reevaluate(const Bindings& delta) {
  const Graph& g = plan_->graph;
  std::vector<Value> params = params_;
  std::vector<std::uint64_t> changed(plan_->words, 0);
  bool any = false;
  for (const auto& [name, value] : delta) {
    auto it = plan_->param_index.find(name);
    if (it == plan_->param_index.end())
      throw EvalError(EvalErrorCode::UnknownParameter, "unknown parameter '" + name + "'");
    const std::size_t i = it->second;
    Value v = coerce_binding(g.params[i], value);
    if (same_bits(v, params[i])) continue;
    params[i] = std::move(v);
    changed[i / 64] |= 1ull << (i % 64);
    any = true;
  }
  if (!any) {
    last_recomputed_ = 0;
    return mesh_;
  }

  std::vector<std::optional<Value>> cache = cache_;
  for (std::size_t n = 0; n < cache.size(); ++n) {
    if (!cache[n]) continue;
    const auto& deps = plan_->nodes[n].param_deps;
    for (std::size_t w = 0; w < changed.size(); ++w) {
      if (deps[w] & changed[w]) {
        cache[n].reset();
        break;
      }
    }
  }
  std::vector<std::size_t> counts = node_counts_;
  Runner run(*plan_, params, cache, counts);
  Value out = run.eval(plan_->output);

  params_ = std::move(params);
  cache_ = std::move(cache);
  node_counts_ = std::move(counts);
  mesh_ = out.as_mesh();
  last_recomputed_ = run.recomputed;
  total_recomputed_ += run.recomputed;
  return mesh_;
}

std::size_t EvalSession::recompute_count(std::string_view id) const {
  auto it = plan_->node_index.find(std::string(id));
  return it == plan_->node_index.end() ? 0 : node_counts_[it->second];
}

std::string EvalSession::tag_owner(std::uint32_t tag) const {
  return tag < plan_->graph.nodes.size() ? plan_->graph.nodes[tag].id : std::string();
}

MeshPtr evaluate(const Graph& graph, const Bindings& bindings, const NodeRegistry& registry) {
  return EvalSession(graph, bindings, registry).mesh();
}

}  // namespace proc3d
