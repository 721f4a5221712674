#include "proc3d/primitives.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace proc3d {
namespace {

void require(bool ok, EvalErrorCode code, const std::string& message) {
  if (!ok) throw EvalError(code, message);
}

void tag_all(Mesh& m, std::uint32_t tag) { m.part_tags.assign(m.triangles.size(), tag); }

double cross2(double ax, double ay, double bx, double by, double cx, double cy) {
  return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax);
}

struct P2 {
  double x, y;
};

bool point_in_triangle(const P2& p, const P2& a, const P2& b, const P2& c) {
  const double d1 = cross2(a.x, a.y, b.x, b.y, p.x, p.y);
  const double d2 = cross2(b.x, b.y, c.x, c.y, p.x, p.y);
  const double d3 = cross2(c.x, c.y, a.x, a.y, p.x, p.y);
  return d1 >= 0 && d2 >= 0 && d3 >= 0;
}

int orientation(const P2& a, const P2& b, const P2& c, double eps) {
  const double v = cross2(a.x, a.y, b.x, b.y, c.x, c.y);
  return v > eps ? 1 : (v < -eps ? -1 : 0);
}

bool on_segment(const P2& a, const P2& b, const P2& p, double eps) {
  return std::min(a.x, b.x) - eps <= p.x && p.x <= std::max(a.x, b.x) + eps && std::min(a.y, b.y) - eps <= p.y &&
         p.y <= std::max(a.y, b.y) + eps;
}

bool segments_touch(const P2& a, const P2& b, const P2& c, const P2& d, double eps) {
  const int o1 = orientation(a, b, c, eps), o2 = orientation(a, b, d, eps);
  const int o3 = orientation(c, d, a, eps), o4 = orientation(c, d, b, eps);
  if (o1 != o2 && o3 != o4 && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0) return true;
  if (o1 == 0 && on_segment(a, b, c, eps)) return true;
  if (o2 == 0 && on_segment(a, b, d, eps)) return true;
  if (o3 == 0 && on_segment(c, d, a, eps)) return true;
  if (o4 == 0 && on_segment(c, d, b, eps)) return true;
  return false;
}

void drop_repeated_points(std::vector<Vec3>& pts, bool closed, double eps) {
  std::vector<Vec3> out;
  out.reserve(pts.size());
  for (const auto& p : pts)
    if (out.empty() || norm(p - out.back()) > eps) out.push_back(p);
  if (closed) {
    while (out.size() > 1 && norm(out.front() - out.back()) <= eps) out.pop_back();
  }
  pts = std::move(out);
}

}  // namespace

std::string_view to_string(EvalErrorCode code) {
  switch (code) {
    case EvalErrorCode::BindingTypeError: return "BindingTypeError";
    case EvalErrorCode::RangeError: return "RangeError";
    case EvalErrorCode::UnknownParameter: return "UnknownParameter";
    case EvalErrorCode::NumericError: return "NumericError";
    case EvalErrorCode::NonPlanarCurve: return "NonPlanarCurve";
    case EvalErrorCode::SelfIntersecting: return "SelfIntersecting";
    case EvalErrorCode::OpenBoundaryAmbiguous: return "OpenBoundaryAmbiguous";
    case EvalErrorCode::StructuralError: return "StructuralError";
  }
  return "?";
}

Mesh make_cube(const Vec3& size, std::uint32_t tag) {
  require(size.x > 0 && size.y > 0 && size.z > 0 && is_finite(size), EvalErrorCode::NumericError,
          "cube size must be positive");
  Mesh m;
  const Vec3 h = size * 0.5;
  m.vertices.reserve(8);
  for (int i = 0; i < 8; ++i)
    m.vertices.push_back({(i & 1) ? h.x : -h.x, (i & 2) ? h.y : -h.y, (i & 4) ? h.z : -h.z});
  m.triangles = {{0, 4, 6}, {0, 6, 2}, {1, 3, 7}, {1, 7, 5}, {0, 1, 5}, {0, 5, 4},
                 {2, 6, 7}, {2, 7, 3}, {0, 2, 3}, {0, 3, 1}, {4, 5, 7}, {4, 7, 6}};
  tag_all(m, tag);
  return m;
}

Mesh make_cylinder(double radius, double depth, std::int64_t segments, std::uint32_t tag) {
  require(radius > 0 && depth > 0 && std::isfinite(radius) && std::isfinite(depth), EvalErrorCode::NumericError,
          "cylinder radius and depth must be positive");
  require(segments >= 3 && segments <= 1'000'000, EvalErrorCode::NumericError, "cylinder needs at least 3 segments");
  const auto n = static_cast<std::uint32_t>(segments);
  Mesh m;
  m.vertices.reserve(2 * n + 2);
  const double half = depth / 2;
  for (double z : {-half, half}) {
    for (std::uint32_t k = 0; k < n; ++k) {
      const double a = 2.0 * M_PI * static_cast<double>(k) / static_cast<double>(n);
      m.vertices.push_back({radius * std::cos(a), radius * std::sin(a), z});
    }
  }
  const std::uint32_t bottom = 2 * n, top = 2 * n + 1;
  m.vertices.push_back({0, 0, -half});
  m.vertices.push_back({0, 0, half});
  m.triangles.reserve(4 * n);
  for (std::uint32_t k = 0; k < n; ++k) {
    const std::uint32_t k1 = (k + 1) % n;
    m.triangles.push_back({k, k1, n + k1});
    m.triangles.push_back({k, n + k1, n + k});
  }
  for (std::uint32_t k = 0; k < n; ++k) {
    const std::uint32_t k1 = (k + 1) % n;
    m.triangles.push_back({bottom, k1, k});
    m.triangles.push_back({top, n + k, n + k1});
  }
  tag_all(m, tag);
  return m;
}

Mesh make_sphere(double radius, std::int64_t rings, std::int64_t segments, std::uint32_t tag) {
  require(radius > 0 && std::isfinite(radius), EvalErrorCode::NumericError, "sphere radius must be positive");
  require(rings >= 2 && segments >= 3 && rings <= 100'000 && segments <= 100'000, EvalErrorCode::NumericError,
          "sphere needs at least 2 rings and 3 segments");
  const auto nr = static_cast<std::uint32_t>(rings);
  const auto ns = static_cast<std::uint32_t>(segments);
  Mesh m;
  m.vertices.push_back({0, 0, radius});
  for (std::uint32_t i = 1; i < nr; ++i) {
    const double theta = M_PI * static_cast<double>(i) / static_cast<double>(nr);
    const double st = std::sin(theta), ct = std::cos(theta);
    for (std::uint32_t j = 0; j < ns; ++j) {
      const double phi = 2.0 * M_PI * static_cast<double>(j) / static_cast<double>(ns);
      m.vertices.push_back({radius * st * std::cos(phi), radius * st * std::sin(phi), radius * ct});
    }
  }
  const auto south = static_cast<std::uint32_t>(m.vertices.size());
  m.vertices.push_back({0, 0, -radius});
  auto ring = [&](std::uint32_t i, std::uint32_t j) { return 1 + (i - 1) * ns + (j % ns); };
  for (std::uint32_t j = 0; j < ns; ++j) m.triangles.push_back({0, ring(1, j), ring(1, j + 1)});
  for (std::uint32_t i = 1; i + 1 < nr; ++i) {
    for (std::uint32_t j = 0; j < ns; ++j) {
      m.triangles.push_back({ring(i, j), ring(i + 1, j), ring(i + 1, j + 1)});
      m.triangles.push_back({ring(i, j), ring(i + 1, j + 1), ring(i, j + 1)});
    }
  }
  for (std::uint32_t j = 0; j < ns; ++j) m.triangles.push_back({south, ring(nr - 1, j + 1), ring(nr - 1, j)});
  tag_all(m, tag);
  return m;
}

Curve make_rectangle(double width, double height) {
  require(width > 0 && height > 0 && std::isfinite(width) && std::isfinite(height), EvalErrorCode::NumericError,
          "rectangle width and height must be positive");
  const double w = width / 2, h = height / 2;
  Curve c;
  c.points = {{w, h, 0}, {-w, h, 0}, {-w, -h, 0}, {w, -h, 0}};
  c.closed = true;
  return c;
}

Curve fillet_curve(const Curve& curve, double radius, std::int64_t count) {
  require(std::isfinite(radius), EvalErrorCode::NumericError, "fillet radius must be finite");
  const std::size_t n = curve.points.size();
  if (radius <= 0 || n < 3) return curve;
  count = std::clamp<std::int64_t>(count, 1, 100'000);

  const auto& pts = curve.points;
  Curve out;
  out.closed = curve.closed;
  Bounds b = bounds_of(pts);
  const double scale = std::max({b.size().x, b.size().y, b.size().z, 1e-300});

  for (std::size_t i = 0; i < n; ++i) {
    const bool endpoint = !curve.closed && (i == 0 || i + 1 == n);
    if (endpoint) {
      out.points.push_back(pts[i]);
      continue;
    }
    const Vec3& p = pts[i];
    const Vec3& prev = pts[(i + n - 1) % n];
    const Vec3& next = pts[(i + 1) % n];
    const double len_prev = norm(prev - p), len_next = norm(next - p);
    if (len_prev <= 1e-15 * scale || len_next <= 1e-15 * scale) {
      out.points.push_back(p);
      continue;
    }
    const Vec3 u = (prev - p) / len_prev;
    const Vec3 v = (next - p) / len_next;
    const double cos_a = std::clamp(dot(u, v), -1.0, 1.0);
    const double alpha = std::acos(cos_a);  // interior angle at the corner
    if (alpha > M_PI - 1e-9 || alpha < 1e-9) {
      out.points.push_back(p);
      continue;
    }
    const double t_half = std::tan(alpha / 2);
    // tangent distance r / tan(alpha/2) may not exceed half of either adjacent segment
    const double r = std::min(radius, 0.5 * std::min(len_prev, len_next) * t_half);
    const double d = r / t_half;
    const Vec3 bis = normalized(u + v);
    const Vec3 center = p + bis * (r / std::sin(alpha / 2));
    const Vec3 start = p + u * d;
    const Vec3 end = p + v * d;
    const Vec3 e1 = (start - center) / r;
    Vec3 e2 = (end - center) - e1 * dot(end - center, e1);
    e2 = normalized(e2);
    const double sweep = M_PI - alpha;
    if (count == 1) {
      out.points.push_back(center + (e1 * std::cos(sweep / 2) + e2 * std::sin(sweep / 2)) * r);
      continue;
    }
    for (std::int64_t j = 0; j < count; ++j) {
      const double t = sweep * static_cast<double>(j) / static_cast<double>(count - 1);
      if (j == 0) {
        out.points.push_back(start);
      } else if (j == count - 1) {
        out.points.push_back(end);
      } else {
        out.points.push_back(center + (e1 * std::cos(t) + e2 * std::sin(t)) * r);
      }
    }
  }
  drop_repeated_points(out.points, out.closed, 1e-12 * scale);
  return out;
}

Mesh fill_curve(const Curve& curve, std::uint32_t tag) {
  require(curve.closed, EvalErrorCode::StructuralError, "fill needs a closed curve");
  const std::vector<Vec3>& pts = curve.points;
  const std::size_t n = pts.size();
  require(n >= 3, EvalErrorCode::NumericError, "fill needs at least 3 points");

  const Vec3 area = area_vector(pts);
  const double area_len = norm(area);
  const Bounds b = bounds_of(pts);
  const double extent = std::max({b.size().x, b.size().y, b.size().z});
  require(area_len > 1e-24 * std::max(1.0, extent * extent) && std::isfinite(area_len), EvalErrorCode::NumericError,
          "fill curve encloses no area");
  const Vec3 normal = area / area_len;

  Vec3 centroid;
  for (const auto& p : pts) centroid += p;
  centroid = centroid / static_cast<double>(n);
  const double plane_tol = 1e-9 * std::max(1.0, extent);
  for (const auto& p : pts)
    require(std::abs(dot(p - centroid, normal)) <= plane_tol, EvalErrorCode::NonPlanarCurve,
            "fill curve is not planar");

  // Orthonormal (u, v) with u x v = normal: the polygon is counterclockwise in (u, v).
  const Vec3 helper = std::abs(normal.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  const Vec3 u = normalized(cross(helper, normal));
  const Vec3 v = cross(normal, u);
  std::vector<P2> q(n);
  for (std::size_t i = 0; i < n; ++i) q[i] = {dot(pts[i] - centroid, u), dot(pts[i] - centroid, v)};

  const double eps = 1e-14 * std::max(1.0, extent * extent);
  for (std::size_t i = 0; i < n; ++i) {
    const P2& a = q[i];
    const P2& b2 = q[(i + 1) % n];
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;  // adjacent through the closing edge
      if (segments_touch(a, b2, q[j], q[(j + 1) % n], eps))
        throw EvalError(EvalErrorCode::SelfIntersecting, "fill curve intersects itself");
    }
  }

  Mesh m;
  m.vertices = pts;
  m.triangles.reserve(n - 2);
  std::vector<std::size_t> prev(n), next(n);
  for (std::size_t i = 0; i < n; ++i) {
    prev[i] = (i + n - 1) % n;
    next[i] = (i + 1) % n;
  }
  std::vector<char> alive(n, 1);
  auto turn = [&](std::size_t i) { return cross2(q[prev[i]].x, q[prev[i]].y, q[i].x, q[i].y, q[next[i]].x, q[next[i]].y); };
  std::vector<char> reflex(n, 0);
  std::size_t reflex_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    reflex[i] = turn(i) <= 0;
    reflex_count += reflex[i];
  }
  auto refresh = [&](std::size_t i) {
    const char r = turn(i) <= 0;
    if (r != reflex[i]) {
      reflex_count = reflex_count + (r ? 1 : 0) - (r ? 0 : 1);
      reflex[i] = r;
    }
  };
  auto is_ear = [&](std::size_t i) {
    if (reflex[i]) return false;
    if (reflex_count == 0) return true;
    const std::size_t a = prev[i], c = next[i];
    for (std::size_t k = next[c]; k != a; k = next[k]) {
      if (!reflex[k]) continue;
      if (point_in_triangle(q[k], q[a], q[i], q[c])) return false;
    }
    return true;
  };
  auto clip = [&](std::size_t i) {
    const std::size_t a = prev[i], c = next[i];
    m.triangles.push_back({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(c)});
    alive[i] = 0;
    if (reflex[i]) --reflex_count;
    next[a] = c;
    prev[c] = a;
    refresh(a);
    refresh(c);
    return a;
  };

  std::size_t remaining = n;
  std::size_t cur = 0;
  std::size_t misses = 0;
  while (remaining > 3) {
    if (is_ear(cur)) {
      cur = clip(cur);
      --remaining;
      misses = 0;
      continue;
    }
    cur = next[cur];
    if (++misses > remaining) {
      // Numerical dead end (collinear runs): clip the most convex vertex.
      std::size_t best = cur;
      double best_turn = -INFINITY;
      std::size_t k = cur;
      do {
        if (turn(k) > best_turn) {
          best_turn = turn(k);
          best = k;
        }
        k = next[k];
      } while (k != cur);
      cur = clip(best);
      --remaining;
      misses = 0;
    }
  }
  m.triangles.push_back({static_cast<std::uint32_t>(prev[cur]), static_cast<std::uint32_t>(cur),
                         static_cast<std::uint32_t>(next[cur])});
  tag_all(m, tag);
  return m;
}

Mesh extrude_mesh(const Mesh& cap, double offset_scale, std::uint32_t tag) {
  require(std::isfinite(offset_scale), EvalErrorCode::NumericError, "extrude offset must be finite");
  require(!cap.triangles.empty(), EvalErrorCode::OpenBoundaryAmbiguous, "extrude needs a non-empty cap");

  std::map<std::pair<std::uint32_t, std::uint32_t>, int> undirected;
  for (const auto& t : cap.triangles)
    for (int e = 0; e < 3; ++e) {
      const std::uint32_t a = t[e], b = t[(e + 1) % 3];
      ++undirected[{std::min(a, b), std::max(a, b)}];
    }
  std::map<std::uint32_t, std::uint32_t> boundary;  // start -> end, in cap winding order
  for (const auto& t : cap.triangles)
    for (int e = 0; e < 3; ++e) {
      const std::uint32_t a = t[e], b = t[(e + 1) % 3];
      if (undirected[{std::min(a, b), std::max(a, b)}] != 1) continue;
      require(boundary.emplace(a, b).second, EvalErrorCode::OpenBoundaryAmbiguous,
              "cap boundary is not a single loop");
    }
  require(!boundary.empty(), EvalErrorCode::OpenBoundaryAmbiguous, "cap has no boundary");
  std::vector<std::uint32_t> loop;
  std::uint32_t at = boundary.begin()->first;
  do {
    loop.push_back(at);
    auto it = boundary.find(at);
    require(it != boundary.end() && loop.size() <= boundary.size(), EvalErrorCode::OpenBoundaryAmbiguous,
            "cap boundary is not a single loop");
    at = it->second;
  } while (at != loop.front());
  require(loop.size() == boundary.size(), EvalErrorCode::OpenBoundaryAmbiguous, "cap boundary is not a single loop");

  Vec3 area;
  for (const auto& t : cap.triangles)
    area += cross(cap.vertices[t[1]] - cap.vertices[t[0]], cap.vertices[t[2]] - cap.vertices[t[0]]);
  const double len = norm(area);
  require(len > 0 && std::isfinite(len), EvalErrorCode::NumericError, "cap has no area");
  const Vec3 offset = (area / len) * offset_scale;

  Mesh m;
  const auto nv = static_cast<std::uint32_t>(cap.vertices.size());
  m.vertices.reserve(2 * nv);
  m.vertices = cap.vertices;
  for (const auto& p : cap.vertices) m.vertices.push_back(p + offset);
  m.triangles.reserve(2 * cap.triangles.size() + 2 * loop.size());
  for (const auto& t : cap.triangles) m.triangles.push_back({t[0], t[2], t[1]});
  for (const auto& t : cap.triangles) m.triangles.push_back({t[0] + nv, t[1] + nv, t[2] + nv});
  for (std::size_t i = 0; i < loop.size(); ++i) {
    const std::uint32_t a = loop[i], b = loop[(i + 1) % loop.size()];
    m.triangles.push_back({a, b, b + nv});
    m.triangles.push_back({a, b + nv, a + nv});
  }
  if (offset_scale < 0)
    for (auto& t : m.triangles) std::swap(t[1], t[2]);
  tag_all(m, tag);
  return m;
}

namespace {

void apply_transform(std::vector<Vec3>& pts, const Vec3& translation, const Vec3& rotation, const Vec3& scale) {
  const bool do_scale = !(scale == Vec3{1, 1, 1});
  const bool do_rotate = !(rotation == Vec3{0, 0, 0});
  const bool do_translate = !(translation == Vec3{0, 0, 0});
  const Mat3 r = do_rotate ? euler_to_matrix(rotation) : Mat3::identity();
  for (auto& p : pts) {
    if (do_scale) p = hadamard(scale, p);
    if (do_rotate) p = r * p;
    if (do_translate) p = translation + p;
  }
}

}  // namespace

Mesh transform_mesh(const Mesh& mesh, const Vec3& translation, const Vec3& rotation, const Vec3& scale) {
  require(is_finite(translation) && is_finite(rotation) && is_finite(scale), EvalErrorCode::NumericError,
          "transform components must be finite");
  Mesh out = mesh;
  apply_transform(out.vertices, translation, rotation, scale);
  // A mirroring scale flips orientation; restore outward winding.
  if (scale.x * scale.y * scale.z < 0)
    for (auto& t : out.triangles) std::swap(t[1], t[2]);
  return out;
}

Curve transform_curve(const Curve& curve, const Vec3& translation, const Vec3& rotation, const Vec3& scale) {
  require(is_finite(translation) && is_finite(rotation) && is_finite(scale), EvalErrorCode::NumericError,
          "transform components must be finite");
  Curve out = curve;
  apply_transform(out.points, translation, rotation, scale);
  return out;
}

Mesh instance_on_points(const Curve& points, const Mesh& instance) {
  Mesh out;
  const std::size_t copies = points.points.size();
  out.vertices.reserve(copies * instance.vertices.size());
  out.triangles.reserve(copies * instance.triangles.size());
  const bool tagged = !instance.part_tags.empty();
  for (const auto& p : points.points) {
    const auto offset = static_cast<std::uint32_t>(out.vertices.size());
    for (const auto& v : instance.vertices) out.vertices.push_back(v + p);
    for (const auto& t : instance.triangles) out.triangles.push_back({t[0] + offset, t[1] + offset, t[2] + offset});
    if (tagged) out.part_tags.insert(out.part_tags.end(), instance.part_tags.begin(), instance.part_tags.end());
  }
  return out;
}

}  // namespace proc3d
