#include "proc3d/extractor.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

namespace proc3d {

namespace {

using nlohmann::json;

constexpr double kPi = std::numbers::pi;

// ---------------------------------------------------------------------------------------------
// Hierarchy loading

PartNode load_node(const json& j, const std::string& pointer, const std::string& parent_path) {
  if (!j.is_object()) throw SchemaError(pointer, "expected an object");
  if (!j.contains("label") || !j["label"].is_string()) throw SchemaError(pointer + "/label", "expected a string");
  PartNode node;
  node.label = j["label"].get<std::string>();
  if (node.label.empty()) throw SchemaError(pointer + "/label", "label must not be empty");
  node.full_label = parent_path.empty() ? node.label : parent_path + "/" + node.label;

  if (j.contains("children")) {
    const json& cs = j["children"];
    if (!cs.is_array()) throw SchemaError(pointer + "/children", "expected an array");
    for (std::size_t i = 0; i < cs.size(); ++i)
      node.children.push_back(load_node(cs[i], pointer + "/children/" + std::to_string(i), node.full_label));
  }
  const bool leaf = node.children.empty();
  if (j.contains("box")) {
    if (!leaf) throw SchemaError(pointer + "/box", "only leaf parts carry a box");
    const json& b = j["box"];
    if (!b.is_array() || b.size() != 12) throw SchemaError(pointer + "/box", "expected 12 numbers");
    std::array<double, 12> v{};
    for (std::size_t i = 0; i < 12; ++i) {
      if (!b[i].is_number()) throw SchemaError(pointer + "/box/" + std::to_string(i), "expected a number");
      v[i] = b[i].get<double>();
    }
    node.box = Obb{{v[0], v[1], v[2]}, {v[3], v[4], v[5]}, {v[6], v[7], v[8]}, {v[9], v[10], v[11]}};
  } else if (leaf) {
    throw SchemaError(pointer + "/box", "leaf part is missing its box");
  }
  return node;
}

// ---------------------------------------------------------------------------------------------
// Frame canonicalization

struct Frame {
  std::array<Vec3, 3> axes;
  std::array<double, 3> key;  // eigenvalue or size, used for ordering
};

/// Sorts axes by key descending (stable), makes each axis's largest-magnitude component
/// positive and flips the third axis if the frame is left-handed.
Mat3 canonical(Frame f) {
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return f.key[a] > f.key[b]; });
  std::array<Vec3, 3> axes;
  for (int i = 0; i < 3; ++i) {
    Vec3 a = f.axes[order[i]];
    int big = 0;
    for (int k = 1; k < 3; ++k)
      if (std::abs(a[k]) > std::abs(a[big])) big = k;
    if (a[big] < 0) a = -a;
    axes[i] = a;
  }
  Mat3 r = Mat3::from_columns(axes[0], axes[1], axes[2]);
  if (r.determinant() < 0) r = Mat3::from_columns(axes[0], axes[1], -axes[2]);
  return r;
}

Vec3 clean_angles(Vec3 v) { return v + Vec3{0.0, 0.0, 0.0}; }  // drops negative zeros

void pad(RecoveredTransform& out) {
  for (int k = 0; k < 3; ++k) {
    if (out.transform.scale[k] < kMinExtent) {
      out.transform.scale[k] = kMinExtent;
      out.padded[static_cast<std::size_t>(k)] = true;
    }
  }
}

// ---------------------------------------------------------------------------------------------
// Graph construction

std::string clean_name(std::string_view label) {
  std::string s;
  for (unsigned char c : label) {
    const char lc = static_cast<char>(std::tolower(c));
    if (std::isalnum(c) || c == '_') s += lc;
    else if (!s.empty() && s.back() != '_') s += '_';
  }
  while (!s.empty() && s.back() == '_') s.pop_back();
  if (s.empty()) s = "part";
  if (std::isdigit(static_cast<unsigned char>(s[0]))) s = "p_" + s;
  if (s == "input" || s == "output" || s == "true" || s == "false") s += "_part";
  return s;
}

class Builder {
 public:
  Builder(const ExtractionConfig& cfg, Extraction& out) : cfg_(cfg), out_(out) {}

  std::string build_root(const PartNode& root) {
    const std::string name = unique(clean_name(root.label));
    if (root.children.empty()) {
      auto id = leaf(root, name, nullptr);
      out_.graph.output = Expr::ref(id);
      return id;
    }
    std::vector<std::string> gated;
    for (const auto& group : group_children(root)) {
      const PartNode& first = *group.front();
      const std::string label = first.label;
      const std::string base = clean_name(label);
      auto& cubes = out_.group_cubes[label];
      const std::string sub = members(group, base, &cubes);
      const std::string flag = unique("has_" + base);
      add_param(flag, ValueType::Bool, Value(true), std::nullopt);
      out_.switch_params[label] = flag;
      const std::string sw = unique(base + "_switch");
      add_node(sw, "switch", {{"flag", Expr::ref(flag)}, {"on_true", Expr::ref(sub)}});
      gated.push_back(sw);
    }
    const std::string joined = join(name + "_join", gated);
    std::string top = joined;
    if (cfg_.expose_global_rotation) {
      top = name;
      const Expr rot = vec_params(name + "_rotation", Vec3{}, std::pair{-kPi, kPi});
      add_node(top, "transform", {{"geometry", Expr::ref(joined)}, {"rotation", rot}});
    }
    out_.graph.output = Expr::ref(top);
    return top;
  }

 private:
  using Group = std::vector<const PartNode*>;

  std::vector<Group> group_children(const PartNode& n) const {
    std::vector<Group> groups;
    for (const auto& c : n.children) {
      auto it = cfg_.merge_same_label
                    ? std::find_if(groups.begin(), groups.end(), [&](const Group& g) { return g.front()->label == c.label; })
                    : groups.end();
      if (it == groups.end()) groups.push_back({&c});
      else it->push_back(&c);
    }
    return groups;
  }

  /// One label group under a parent: a single part, or a merged join wrapped in a group transform.
  std::string members(const Group& group, const std::string& base, std::vector<std::string>* cubes) {
    if (group.size() == 1) return part(*group.front(), base, cubes);
    const std::string name = unique(base);
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < group.size(); ++i) ids.push_back(part(*group[i], name + "_" + std::to_string(i), cubes));
    return group_transform(name, join(name + "_join", ids));
  }

  std::string part(const PartNode& n, const std::string& base, std::vector<std::string>* cubes) {
    if (n.children.empty()) return leaf(n, unique(base), cubes);
    const std::string name = unique(base);
    std::vector<std::string> ids;
    for (const auto& group : group_children(n)) ids.push_back(members(group, name + "_" + clean_name(group.front()->label), cubes));
    return group_transform(name, join(name + "_join", ids));
  }

  std::string leaf(const PartNode& n, const std::string& name, std::vector<std::string>* cubes) {
    const Mat3& c = cfg_.coord_rotation;
    Obb box = *n.box;
    box.center = c * box.center;
    box.dir1 = c * box.dir1;
    box.dir2 = c * box.dir2;

    RecoveredTransform rec;
    try {
      if (cfg_.recover_from_corners) {
        (void)extract_transform_from_box(box);  // frame validation
        auto corners = obb_corners(box);
        rec = extract_transform_from_vertices({corners.begin(), corners.end()});
      } else {
        rec = extract_transform_from_box(box);
      }
    } catch (const InvalidFrame& e) {
      throw InvalidFrame(n.full_label + ": " + e.what());
    }

    const std::string cube = unique(name + "_cube");
    add_node(cube, "cube", {});
    const auto& t = rec.transform;
    std::map<std::string, Expr> args{{"geometry", Expr::ref(cube)}};
    args["translation"] = vec_params(name + "_translation", t.translation, std::nullopt);
    args["rotation"] = vec_params(name + "_rotation", t.rotation, std::pair{-kPi, kPi});
    args["scale"] = vec_params(name + "_scale", t.scale, std::nullopt, true);
    add_node(name, "transform", std::move(args));

    if (cubes) cubes->push_back(cube);
    out_.parts.push_back({n.full_label, name, cube, rec.degenerate, rec.padded, box});
    return name;
  }

  std::string group_transform(const std::string& name, const std::string& child) {
    std::map<std::string, Expr> args{{"geometry", Expr::ref(child)}};
    args["translation"] = vec_params(name + "_translation", Vec3{}, std::nullopt);
    args["rotation"] = vec_params(name + "_rotation", Vec3{}, std::pair{-kPi, kPi});
    args["scale"] = vec_params(name + "_scale", Vec3{1, 1, 1}, std::nullopt, true);
    add_node(name, "transform", std::move(args));
    return name;
  }

  std::string join(const std::string& base, const std::vector<std::string>& ids) {
    const std::string id = unique(base);
    std::vector<Expr> refs;
    for (const auto& i : ids) refs.push_back(Expr::ref(i));
    add_node(id, "join", {{"geometry", Expr::list(std::move(refs))}});
    return id;
  }

  /// Three Float params `<prefix>_x/_y/_z`. Ranges: the given fixed range, scale
  /// [min(0.01, d), 4d], otherwise d +- (1 + |d|).
  Expr vec_params(const std::string& prefix, const Vec3& d, std::optional<std::pair<double, double>> fixed,
                  bool is_scale = false) {
    static constexpr const char* axis[3] = {"_x", "_y", "_z"};
    std::vector<Expr> refs;
    for (int k = 0; k < 3; ++k) {
      const double v = d[k];
      std::pair<double, double> range;
      if (fixed) range = *fixed;
      else if (is_scale) range = {std::min(0.01, v), 4.0 * v};
      else range = {v - (1.0 + std::abs(v)), v + (1.0 + std::abs(v))};
      const std::string name = unique(prefix + axis[k]);
      add_param(name, ValueType::Float, Value(v), range);
      refs.push_back(Expr::ref(name));
    }
    return Expr::vec(refs[0], refs[1], refs[2]);
  }

  void add_param(const std::string& name, ValueType type, Value def, std::optional<std::pair<double, double>> range) {
    ParamSpec p;
    p.name = name;
    p.type = type;
    p.default_value = std::move(def);
    p.range = range;
    out_.graph.params.push_back(std::move(p));
  }

  void add_node(const std::string& id, const std::string& kind, std::map<std::string, Expr> args) {
    Node n;
    n.id = id;
    n.kind = kind;
    n.args = std::move(args);
    out_.graph.nodes.push_back(std::move(n));
  }

  std::string unique(const std::string& base) {
    std::string name = base;
    for (int i = 2; used_.count(name); ++i) name = base + "_" + std::to_string(i);
    used_.insert(name);
    return name;
  }

  const ExtractionConfig& cfg_;
  Extraction& out_;
  std::set<std::string> used_;
};

}  // namespace

std::array<Vec3, 8> obb_corners(const Obb& box) {
  const Vec3 d3 = cross(box.dir1, box.dir2);
  std::array<Vec3, 8> out;
  for (int i = 0; i < 8; ++i) {
    const double a = (i & 1) ? 0.5 : -0.5, b = (i & 2) ? 0.5 : -0.5, c = (i & 4) ? 0.5 : -0.5;
    out[static_cast<std::size_t>(i)] =
        box.center + box.dir1 * (a * box.size.x) + box.dir2 * (b * box.size.y) + d3 * (c * box.size.z);
  }
  return out;
}

PartNode load_hierarchy(const json& doc) { return load_node(doc, "", ""); }

PartNode load_hierarchy_text(std::string_view text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw SchemaError("", "malformed JSON");
  return load_hierarchy(doc);
}

PartNode load_hierarchy_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return load_hierarchy_text(ss.str());
}

std::array<Vec3, 8> transformed_unit_box(const TransformTriple& t) {
  const Mat3 r = euler_to_matrix(t.rotation);
  std::array<Vec3, 8> out;
  for (int i = 0; i < 8; ++i) {
    const Vec3 c{(i & 1) ? 0.5 : -0.5, (i & 2) ? 0.5 : -0.5, (i & 4) ? 0.5 : -0.5};
    out[static_cast<std::size_t>(i)] = t.translation + r * hadamard(t.scale, c);
  }
  return out;
}

RecoveredTransform extract_transform_from_vertices(const std::vector<Vec3>& vertices) {
  if (vertices.empty()) throw std::invalid_argument("transform recovery needs at least one vertex");
  const double n = static_cast<double>(vertices.size());
  Vec3 centroid;
  for (const auto& v : vertices) centroid += v;
  centroid = centroid / n;

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& v : vertices) {
    const Eigen::Vector3d d(v.x - centroid.x, v.y - centroid.y, v.z - centroid.z);
    cov += d * d.transpose();
  }
  cov /= n;

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
  const Eigen::Vector3d lambda = solver.eigenvalues();  // ascending
  const double top = lambda(2);
  const bool degenerate = !(top > 0) || (lambda(2) - lambda(1)) <= kEigenGapTolerance * top ||
                          (lambda(1) - lambda(0)) <= kEigenGapTolerance * top;

  RecoveredTransform out;
  if (degenerate) {
    out.axes = Mat3::identity();
    out.degenerate = true;
  } else {
    Frame f;
    for (int i = 0; i < 3; ++i) {
      const auto col = solver.eigenvectors().col(i);
      f.axes[static_cast<std::size_t>(i)] = {col(0), col(1), col(2)};
      f.key[static_cast<std::size_t>(i)] = lambda(i);
    }
    out.axes = canonical(f);
  }

  Vec3 lo{INFINITY, INFINITY, INFINITY}, hi{-INFINITY, -INFINITY, -INFINITY};
  for (const auto& v : vertices) {
    const Vec3 d = v - centroid;
    for (int k = 0; k < 3; ++k) {
      const double p = dot(d, out.axes.column(k));
      lo[k] = std::min(lo[k], p);
      hi[k] = std::max(hi[k], p);
    }
  }
  out.transform.translation = centroid;
  out.transform.rotation = clean_angles(matrix_to_euler(out.axes));
  out.transform.scale = hi - lo;
  pad(out);
  return out;
}

RecoveredTransform extract_transform_from_box(const Obb& box) {
  constexpr double tol = 1e-6;
  if (!is_finite(box.center) || !is_finite(box.size) || !is_finite(box.dir1) || !is_finite(box.dir2))
    throw InvalidFrame("box has non-finite components");
  if (std::abs(norm(box.dir1) - 1) > tol || std::abs(norm(box.dir2) - 1) > tol)
    throw InvalidFrame("box directions must be unit length");
  if (std::abs(dot(box.dir1, box.dir2)) > tol) throw InvalidFrame("box directions must be orthogonal");
  if (box.size.x < 0 || box.size.y < 0 || box.size.z < 0) throw InvalidFrame("box size must not be negative");

  const Vec3 d1 = normalized(box.dir1);
  const Vec3 d2 = normalized(box.dir2 - d1 * dot(box.dir2, d1));
  Frame f{{d1, d2, cross(d1, d2)}, {box.size.x, box.size.y, box.size.z}};

  RecoveredTransform out;
  out.transform.translation = box.center;

  // Same tie test as the vertex route, on the corner covariance eigenvalues s^2/4.
  std::array<double, 3> lambda{};
  for (int k = 0; k < 3; ++k) lambda[static_cast<std::size_t>(k)] = box.size[k] * box.size[k] / 4.0;
  std::sort(lambda.begin(), lambda.end());
  out.degenerate = !(lambda[2] > 0) || lambda[2] - lambda[1] <= kEigenGapTolerance * lambda[2] ||
                   lambda[1] - lambda[0] <= kEigenGapTolerance * lambda[2];

  std::array<int, 3> world{};
  bool aligned = true;
  for (int i = 0; i < 3 && aligned; ++i) {
    const Vec3& a = f.axes[static_cast<std::size_t>(i)];
    int big = 0;
    for (int k = 1; k < 3; ++k)
      if (std::abs(a[k]) > std::abs(a[big])) big = k;
    aligned = std::abs(std::abs(a[big]) - 1.0) <= 1e-12;
    world[static_cast<std::size_t>(i)] = big;
  }

  if (out.degenerate && aligned) {
    // Identity frame, as the vertex route falls back to; exact for axis-aligned boxes.
    out.axes = Mat3::identity();
    for (int i = 0; i < 3; ++i) out.transform.scale[world[static_cast<std::size_t>(i)]] = box.size[i];
  } else {
    out.axes = canonical(f);
    std::array<int, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return f.key[a] > f.key[b]; });
    out.transform.scale = {box.size[order[0]], box.size[order[1]], box.size[order[2]]};
  }
  out.transform.rotation = clean_angles(matrix_to_euler(out.axes));
  pad(out);
  return out;
}

Mat3 parse_coord_rotation(std::string_view mapping) {
  if (mapping == "none" || mapping.empty()) return Mat3::identity();
  Mat3 m;
  m.m.fill(0.0);
  int row = 0;
  for (std::size_t i = 0; i < mapping.size(); ++i) {
    double sign = 1;
    if (mapping[i] == '-' || mapping[i] == '+') {
      sign = mapping[i] == '-' ? -1 : 1;
      if (++i >= mapping.size()) break;
    }
    const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(mapping[i])));
    if (c < 'x' || c > 'z' || row > 2) throw std::invalid_argument("bad axis mapping '" + std::string(mapping) + "'");
    m(row++, c - 'x') = sign;
  }
  if (row != 3 || std::abs(m.determinant() - 1.0) > 1e-12)
    throw std::invalid_argument("axis mapping '" + std::string(mapping) + "' is not a rotation");
  return m;
}

nlohmann::json Extraction::meta() const {
  json parts_json = json::array();
  for (const auto& p : parts) {
    parts_json.push_back({{"path", p.path},
                          {"node", p.node_id},
                          {"degenerate_pca", p.degenerate},
                          {"padded_axes", {p.padded[0], p.padded[1], p.padded[2]}}});
  }
  json switches = json::object();
  for (const auto& [label, param] : switch_params) switches[label] = param;
  return {{"parts", parts_json}, {"switches", switches}};
}

Extraction build_pcg(const PartNode& root, const ExtractionConfig& config) {
  if (std::abs(config.coord_rotation.determinant() - 1.0) > 1e-9)
    throw InvalidFrame("coordinate rotation must have determinant +1");
  Extraction out;
  Builder(config, out).build_root(root);
  return out;
}

void save_graph(const Graph& graph, const std::filesystem::path& path) {
  const std::string text = print_pcg(graph);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    f << text;
    f.flush();
    if (!f) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot replace " + path.string() + ": " + ec.message());
  }
}

}  // namespace proc3d
