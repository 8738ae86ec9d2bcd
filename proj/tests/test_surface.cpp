#include <gtest/gtest.h>

#include <functional>
#include <limits>
#include <sstream>

#include "isospec/surface.hpp"
#include "oracles.hpp"

using namespace isospec;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no isospec::Error thrown";
  return ErrorKind::Config;
}

DiscreteSurface parse(const std::string& text) {
  std::istringstream in(text);
  return parse_off(in);
}

}  // namespace

TEST(Torus, NodeCountAndCellArea) {
  const DiscreteSurface s = make_torus(8, 8, 1.0, 1.0);
  EXPECT_EQ(s.kind(), SurfaceKind::TorusGrid);
  EXPECT_EQ(s.node_count(), 64u);
  EXPECT_DOUBLE_EQ(s.torus_dims()->cell_area(), 1.0 / 64.0);

  const DiscreteSurface r = make_torus(4, 16, 2.0, 1.0);
  EXPECT_EQ(r.node_count(), 64u);
  EXPECT_DOUBLE_EQ(r.torus_dims()->cell_area(), 2.0 / 64.0);
  EXPECT_DOUBLE_EQ(r.area(), 2.0);
}

TEST(Torus, RejectsSmallOrInvalidDimensions) {
  EXPECT_EQ(kind_of([] { make_torus(3, 8, 1.0, 1.0); }), ErrorKind::DimensionTooSmall);
  EXPECT_EQ(kind_of([] { make_torus(8, 3, 1.0, 1.0); }), ErrorKind::DimensionTooSmall);
  EXPECT_EQ(kind_of([] { make_torus(8, 8, 0.0, 1.0); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([] { make_torus(8, 8, 1.0, -2.0); }), ErrorKind::InvalidArgument);
}

TEST(Torus, RowMajorDeterministicOrdering) {
  const DiscreteSurface a = make_torus(5, 4, 2.0, 1.0);
  const DiscreteSurface b = make_torus(5, 4, 2.0, 1.0);
  for (std::size_t node = 0; node < a.node_count(); ++node) {
    const auto i = static_cast<double>(node % 5), j = static_cast<double>(node / 5);
    EXPECT_EQ(a.position(node), Eigen::Vector3d(i * 2.0 / 5.0, j * 1.0 / 4.0, 0.0));
    EXPECT_EQ(a.position(node), b.position(node));
  }
  EXPECT_NE(a.id(), b.id());
}

TEST(Torus, RevalidationIsIdempotent) {
  const DiscreteSurface s = make_torus(6, 7, 1.0, 3.0);
  EXPECT_NO_THROW(s.validate());
  EXPECT_NO_THROW(s.validate());
}

TEST(OffMesh, OctahedronLoads) {
  const DiscreteSurface s = parse(oracle::octahedron_off());
  EXPECT_EQ(s.kind(), SurfaceKind::TriangleMesh);
  EXPECT_EQ(s.node_count(), 6u);
  ASSERT_TRUE(s.topology());
  EXPECT_EQ(s.topology()->euler_characteristic, 2);
  EXPECT_EQ(s.topology()->genus, 0);
  EXPECT_EQ(s.topology()->edge_count, 12u);
  EXPECT_NO_THROW(s.validate());
}

TEST(OffMesh, CommentsColorsAndInlineCounts) {
  std::string text = oracle::octahedron_off();
  text.replace(0, 10, "# leading comment\nOFF 6 8 0 # counts on header line\n");
  text.replace(text.find("\n3 0 2 4"), 8, "\n3 0 2 4 255 0 0");
  EXPECT_EQ(parse(text).node_count(), 6u);
}

TEST(OffMesh, SingleTriangleHasBoundary) {
  EXPECT_EQ(kind_of([] { parse("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n"); }), ErrorKind::Topology);
}

TEST(OffMesh, IcosphereWithFaceRemovedIsOpen) {
  MeshData m = oracle::icosphere(2);
  EXPECT_NO_THROW(DiscreteSurface::mesh(m));
  m.triangles.pop_back();
  std::ostringstream out;
  write_off(out, m);
  EXPECT_EQ(kind_of([&] { parse(out.str()); }), ErrorKind::Topology);
}

TEST(OffMesh, RoundTripThroughWriter) {
  const MeshData m = oracle::icosphere(1);
  std::ostringstream out;
  write_off(out, m);
  const DiscreteSurface s = parse(out.str());
  ASSERT_EQ(s.node_count(), m.vertices.size());
  for (std::size_t v = 0; v < m.vertices.size(); ++v) EXPECT_EQ(s.position(v), m.vertices[v]);
  EXPECT_EQ(s.topology()->euler_characteristic, 2);
}

TEST(OffMesh, InconsistentOrientation) {
  std::string text = oracle::octahedron_off();
  text.replace(text.find("3 0 2 4"), 7, "3 2 0 4");
  EXPECT_EQ(kind_of([&] { parse(text); }), ErrorKind::Topology);
}

TEST(OffMesh, NonManifoldEdge) {
  // third triangle on edge (0,11)
  MeshData m = oracle::icosphere(0);
  m.vertices.push_back({0.0, 0.0, 0.0});
  const int c = static_cast<int>(m.vertices.size()) - 1;
  m.triangles.push_back({0, 11, c});
  EXPECT_EQ(kind_of([&] { DiscreteSurface::mesh(m); }), ErrorKind::Topology);
}

TEST(OffMesh, DisconnectedComponents) {
  MeshData a = oracle::icosphere(0);
  const MeshData b = oracle::icosphere(0);
  const int offset = static_cast<int>(a.vertices.size());
  for (const auto& v : b.vertices) a.vertices.push_back(v + Eigen::Vector3d(5, 0, 0));
  for (const auto& t : b.triangles) a.triangles.push_back({t[0] + offset, t[1] + offset, t[2] + offset});
  EXPECT_EQ(kind_of([&] { DiscreteSurface::mesh(a); }), ErrorKind::Topology);
}

TEST(OffMesh, UnreferencedVertex) {
  MeshData m = oracle::icosphere(0);
  m.vertices.push_back({3.0, 3.0, 3.0});
  EXPECT_EQ(kind_of([&] { DiscreteSurface::mesh(m); }), ErrorKind::Topology);
}

TEST(OffMesh, GenusOneTorusMesh) {
  // 6 x 6 quad grid on a torus of revolution, two triangles per quad
  MeshData m;
  const int n = 6;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double u = 2.0 * std::numbers::pi * i / n, v = 2.0 * std::numbers::pi * j / n;
      m.vertices.push_back({(2.0 + std::cos(v)) * std::cos(u), (2.0 + std::cos(v)) * std::sin(u), std::sin(v)});
    }
  auto id = [&](int i, int j) { return ((i + n) % n) * n + (j + n) % n; };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      m.triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      m.triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  const DiscreteSurface s = DiscreteSurface::mesh(m);
  EXPECT_EQ(s.topology()->euler_characteristic, 0);
  EXPECT_EQ(s.topology()->genus, 1);
}

TEST(OffMesh, ParseErrors) {
  EXPECT_EQ(kind_of([] { parse(""); }), ErrorKind::Parse);
  EXPECT_EQ(kind_of([] { parse("PLY\n3 1 0\n"); }), ErrorKind::Parse);
  EXPECT_EQ(kind_of([] { parse("OFF\n"); }), ErrorKind::Parse);
  EXPECT_EQ(kind_of([] { parse("OFF\n6 8 0\n1 0 0\n"); }), ErrorKind::Parse);
  EXPECT_EQ(kind_of([] { parse("OFF\nsix 8 0\n"); }), ErrorKind::Parse);
  EXPECT_EQ(kind_of([] { parse("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n4 0 1 2 2\n"); }), ErrorKind::Parse);
  EXPECT_EQ(kind_of([] { parse("OFF\n3 1 0\n0 0 x\n1 0 0\n0 1 0\n3 0 1 2\n"); }), ErrorKind::Parse);
  EXPECT_EQ(kind_of([] { parse("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 7\n"); }), ErrorKind::Topology);
}

TEST(OffMesh, MissingFileIsIoError) {
  EXPECT_EQ(kind_of([] { load_mesh("/nonexistent/mesh.off"); }), ErrorKind::Io);
}

TEST(OffMesh, BundledMeshes) {
  const DiscreteSurface ico = load_mesh(std::string(ISOSPEC_DATA_DIR) + "/icosphere3.off");
  EXPECT_EQ(ico.node_count(), 642u);
  EXPECT_EQ(ico.topology()->genus, 0);
  EXPECT_EQ(load_mesh(std::string(ISOSPEC_DATA_DIR) + "/octahedron.off").node_count(), 6u);
}

TEST(ScalarFieldTest, SizeAndFiniteness) {
  const DiscreteSurface s = make_torus(4, 4, 1.0, 1.0);
  EXPECT_EQ(ScalarField::constant(s, 2.0).values(), Eigen::VectorXd::Constant(16, 2.0));
  EXPECT_THROW(ScalarField(s, Eigen::VectorXd::Zero(15)), Error);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(16);
  v[3] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(ScalarField(s, v), Error);
}

TEST(ConformalPerturbationTest, SurfaceAndSideChecks) {
  const DiscreteSurface a = make_torus(4, 4, 1.0, 1.0);
  const DiscreteSurface b = make_torus(4, 4, 1.0, 1.0);
  EXPECT_EQ(kind_of([&] {
              ConformalPerturbation(PerturbationSide::InverseMetric, ScalarField::constant(a, 1.0),
                                    ScalarField::constant(b, 1.0));
            }),
            ErrorKind::SurfaceMismatch);
  EXPECT_EQ(kind_of([&] {
              ConformalPerturbation(PerturbationSide::Metric, ScalarField::constant(a, 1.0),
                                    ScalarField::constant(a, 1.0));
            }),
            ErrorKind::InvalidArgument);
}

TEST(ConformalPerturbationTest, PositivityNamesNode) {
  const DiscreteSurface s = make_torus(4, 4, 1.0, 1.0);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(16);
  f[5] = -2.0;
  const ConformalPerturbation metric(PerturbationSide::Metric, ScalarField(s, f));
  try {
    metric.inverse_metric_factor(0.6);
    FAIL() << "expected positivity violation";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::PositivityViolation);
    ASSERT_TRUE(e.node());
    EXPECT_EQ(*e.node(), 5u);
  }
  EXPECT_NO_THROW(metric.inverse_metric_factor(0.4));
  const Eigen::VectorXd c = metric.inverse_metric_factor(0.25);
  EXPECT_DOUBLE_EQ(c[5], 2.0);
  EXPECT_DOUBLE_EQ(c[0], 1.0);
}
