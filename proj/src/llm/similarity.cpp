#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "proc3d/llm.hpp"

namespace proc3d {

namespace {
double unit_real(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
}  // namespace

Mesh unit_normalized(const Mesh& mesh) {
  Mesh out = mesh;
  const Bounds b = bounds_of(mesh);
  if (!b.valid) return out;
  const Vec3 size = b.size();
  const double longest = std::max({size.x, size.y, size.z});
  const double s = longest > 0 ? 1.0 / longest : 1.0;
  const Vec3 c = b.center();
  for (auto& v : out.vertices) v = (v - c) * s;
  return out;
}

std::vector<Vec3> sample_surface(const Mesh& mesh, std::size_t count, std::uint64_t seed) {
  std::vector<Vec3> out;
  if (mesh.triangles.empty() || count == 0) return out;
  std::vector<double> cumulative;
  cumulative.reserve(mesh.triangles.size());
  double total = 0;
  for (const auto& t : mesh.triangles) {
    const Vec3 &a = mesh.vertices[t[0]], &b = mesh.vertices[t[1]], &c = mesh.vertices[t[2]];
    total += 0.5 * norm(cross(b - a, c - a));
    cumulative.push_back(total);
  }
  std::mt19937_64 rng(seed);
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t tri = 0;
    if (total > 0) {
      const double r = unit_real(rng) * total;
      tri = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), r) - cumulative.begin());
      tri = std::min(tri, mesh.triangles.size() - 1);
    } else {
      tri = static_cast<std::size_t>(rng() % mesh.triangles.size());
    }
    const auto& t = mesh.triangles[tri];
    const double su = std::sqrt(unit_real(rng)), v = unit_real(rng);
    const Vec3 &a = mesh.vertices[t[0]], &b = mesh.vertices[t[1]], &c = mesh.vertices[t[2]];
    out.push_back(a * (1 - su) + b * (su * (1 - v)) + c * (su * v));
  }
  return out;
}

namespace {
double directed(const std::vector<Vec3>& from, const std::vector<Vec3>& to) {
  double sum = 0;
  for (const auto& p : from) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : to) {
      const Vec3 d = p - q;
      best = std::min(best, dot(d, d));
    }
    sum += std::sqrt(best);
  }
  return sum / static_cast<double>(from.size());
}
}  // namespace

double chamfer_distance(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  if (a.empty() || b.empty()) return std::numeric_limits<double>::infinity();
  return 0.5 * (directed(a, b) + directed(b, a));
}

double similarity_measure(const Mesh& mesh, const std::vector<Mesh>& references) {
  if (references.empty()) throw EmptyReferenceSet();
  const auto samples = sample_surface(unit_normalized(mesh), kSimilaritySamples, kSimilaritySeed);
  double best = 0.0;
  for (const auto& ref : references) {
    const auto other = sample_surface(unit_normalized(ref), kSimilaritySamples, kSimilaritySeed);
    if (samples.empty() || other.empty()) continue;
    best = std::max(best, std::exp(-chamfer_distance(samples, other)));
  }
  return best;
}

}  // namespace proc3d
