#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "proc3d/mesh_io.hpp"
#include "proc3d/primitives.hpp"
#include "support/generators.hpp"

using namespace proc3d;

namespace {

// Independent little-endian reader, written against the wire layout rather than the library.
std::uint32_t u32_at(const std::vector<std::uint8_t>& b, std::size_t off) {
  return static_cast<std::uint32_t>(b[off]) | static_cast<std::uint32_t>(b[off + 1]) << 8 |
         static_cast<std::uint32_t>(b[off + 2]) << 16 | static_cast<std::uint32_t>(b[off + 3]) << 24;
}

float f32_at(const std::vector<std::uint8_t>& b, std::size_t off) {
  const std::uint32_t bits = u32_at(b, off);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

Mesh sample_mesh() {
  Mesh a = make_cube({1, 2, 3}, 4);
  Mesh b = transform_mesh(make_sphere(0.3, 4, 6, 9), {1.25, -3.5, 0.125}, {0.1, 0.2, 0.3}, {1, 1, 1});
  return concatenate({&a, &b});
}

}  // namespace

TEST(Frame, LayoutMatchesIndependentDecoder) {
  const Mesh m = sample_mesh();
  const auto bytes = encode_mesh_frame(m);
  const std::size_t nv = m.vertices.size(), nt = m.triangles.size();
  ASSERT_EQ(bytes.size(), 8 + 12 * nv + 12 * nt);
  EXPECT_EQ(u32_at(bytes, 0), nv);
  EXPECT_EQ(u32_at(bytes, 4), nt);
  for (std::size_t i = 0; i < nv; ++i) {
    EXPECT_EQ(f32_at(bytes, 8 + 12 * i), static_cast<float>(m.vertices[i].x));
    EXPECT_EQ(f32_at(bytes, 8 + 12 * i + 4), static_cast<float>(m.vertices[i].y));
    EXPECT_EQ(f32_at(bytes, 8 + 12 * i + 8), static_cast<float>(m.vertices[i].z));
  }
  const std::size_t ib = 8 + 12 * nv;
  for (std::size_t t = 0; t < nt; ++t)
    for (int k = 0; k < 3; ++k) EXPECT_EQ(u32_at(bytes, ib + 12 * t + 4 * k), m.triangles[t][k]);
}

TEST(Frame, CubeHeaderBytes) {
  const auto bytes = encode_mesh_frame(make_cube({1, 1, 1}));
  const std::vector<std::uint8_t> head{8, 0, 0, 0, 12, 0, 0, 0};
  EXPECT_TRUE(std::equal(head.begin(), head.end(), bytes.begin()));
}

TEST(Frame, RoundTripAtFloatPrecision) {
  const Mesh m = sample_mesh();
  const auto bytes = encode_mesh_frame(m);
  const Mesh d = decode_mesh_frame(bytes.data(), bytes.size());
  ASSERT_EQ(d.vertices.size(), m.vertices.size());
  EXPECT_EQ(d.triangles, m.triangles);
  for (std::size_t i = 0; i < m.vertices.size(); ++i) {
    EXPECT_EQ(d.vertices[i].x, static_cast<double>(static_cast<float>(m.vertices[i].x)));
    EXPECT_EQ(d.vertices[i].z, static_cast<double>(static_cast<float>(m.vertices[i].z)));
  }
  const auto again = encode_mesh_frame(d);
  EXPECT_EQ(again, bytes);
}

TEST(Frame, EmptyMesh) {
  const auto bytes = encode_mesh_frame(Mesh{});
  EXPECT_EQ(bytes.size(), 8u);
  EXPECT_TRUE(decode_mesh_frame(bytes.data(), bytes.size()).empty());
}

TEST(Frame, MalformedRejected) {
  auto bytes = encode_mesh_frame(make_cube({1, 1, 1}));
  EXPECT_THROW(decode_mesh_frame(bytes.data(), 4), std::invalid_argument);
  EXPECT_THROW(decode_mesh_frame(bytes.data(), bytes.size() - 1), std::invalid_argument);
  std::vector<std::uint8_t> extra = bytes;
  extra.push_back(0);
  EXPECT_THROW(decode_mesh_frame(extra.data(), extra.size()), std::invalid_argument);
  // Index out of range.
  bytes[bytes.size() - 4] = 200;
  EXPECT_THROW(decode_mesh_frame(bytes.data(), bytes.size()), std::invalid_argument);
  // Huge counts must not allocate.
  std::vector<std::uint8_t> huge{0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff};
  EXPECT_THROW(decode_mesh_frame(huge.data(), huge.size()), std::invalid_argument);
}

TEST(Obj, RoundTripNineDigitsAndTags) {
  const Mesh m = sample_mesh();
  const Mesh back = import_obj(export_obj(m));
  ASSERT_EQ(back.vertices.size(), m.vertices.size());
  EXPECT_EQ(back.triangles, m.triangles);
  EXPECT_EQ(back.part_tags, m.part_tags);
  for (std::size_t i = 0; i < m.vertices.size(); ++i) {
    const Vec3 d = back.vertices[i] - m.vertices[i];
    const double scale = std::max(1.0, norm(m.vertices[i]));
    EXPECT_LT(norm(d), 1e-8 * scale);
  }
  EXPECT_EQ(export_obj(back), export_obj(m));
}

TEST(Obj, FrameAgreesWithObjWithinFloat) {
  const Mesh m = sample_mesh();
  const auto bytes = encode_mesh_frame(m);
  const Mesh wire = decode_mesh_frame(bytes.data(), bytes.size());
  const Mesh obj = import_obj(export_obj(m));
  for (std::size_t i = 0; i < m.vertices.size(); ++i)
    EXPECT_LT(norm(wire.vertices[i] - obj.vertices[i]), 1e-6 * std::max(1.0, norm(obj.vertices[i])));
}

TEST(Obj, PolygonsNegativeIndicesAndIgnoredAttributes) {
  const Mesh m = import_obj(
      "# quad\n"
      "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\n"
      "vt 0 0\nvn 0 0 1\n"
      "f 1/1/1 2/1/1 3/1/1 4/1/1\n"
      "f -4 -2 -1\n");
  ASSERT_EQ(m.triangles.size(), 3u);
  EXPECT_EQ(m.triangles[0], (std::array<std::uint32_t, 3>{0, 1, 2}));
  EXPECT_EQ(m.triangles[1], (std::array<std::uint32_t, 3>{0, 2, 3}));
  EXPECT_EQ(m.triangles[2], (std::array<std::uint32_t, 3>{0, 2, 3}));
}

TEST(Obj, ErrorsCarryLine) {
  try {
    import_obj("v 0 0 0\nv 1 0 0\nf 1 2 7\n");
    FAIL();
  } catch (const ObjParseError& e) {
    EXPECT_EQ(e.line(), 3);
  }
  EXPECT_THROW(import_obj("v 0 zero 0\n"), ObjParseError);
  EXPECT_THROW(import_obj("v 0 0 0\nf 1 1\n"), ObjParseError);
}

TEST(Obj, RandomMeshesRoundTrip) {
  testgen::Rng rng(77);
  for (int i = 0; i < 50; ++i) {
    Mesh m = transform_mesh(make_cylinder(testgen::uniform(rng, 0.1, 3), testgen::uniform(rng, 0.1, 3),
                                          testgen::uniform_int(rng, 3, 20), static_cast<std::uint32_t>(i)),
                            {testgen::uniform(rng, -5, 5), testgen::uniform(rng, -5, 5), testgen::uniform(rng, -5, 5)},
                            {testgen::uniform(rng, -3, 3), 0.2, 0.1}, {1, 2, 0.5});
    const Mesh back = import_obj(export_obj(m));
    ASSERT_EQ(back.triangles, m.triangles);
    for (std::size_t k = 0; k < m.vertices.size(); ++k)
      ASSERT_LT(norm(back.vertices[k] - m.vertices[k]), 1e-7);
  }
}
