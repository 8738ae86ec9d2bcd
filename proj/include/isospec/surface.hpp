#pragma once

// Discrete closed surfaces (periodic grids and triangle meshes), nodal scalar
// fields and OFF ingestion.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "isospec/error.hpp"

namespace isospec {

enum class SurfaceKind { TorusGrid, TriangleMesh };

struct TorusDims {
  int nx = 0;
  int ny = 0;
  double lx = 1.0;
  double ly = 1.0;

  double cell_area() const { return (lx * ly) / (static_cast<double>(nx) * ny); }
};

struct MeshData {
  std::vector<Eigen::Vector3d> vertices;
  std::vector<std::array<int, 3>> triangles;
};

struct MeshTopology {
  std::size_t vertex_count = 0;
  std::size_t edge_count = 0;
  std::size_t face_count = 0;
  long euler_characteristic = 0;
  long genus = 0;
};

namespace detail {
inline std::uint64_t next_surface_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

struct DisjointSets {
  std::vector<std::size_t> parent;
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

// Throws a topology error unless the triangle soup is a closed, connected,
// consistently oriented 2-manifold.
inline MeshTopology check_mesh_topology(const MeshData& mesh) {
  const std::size_t nv = mesh.vertices.size();
  if (mesh.triangles.empty()) throw Error(ErrorKind::Topology, "mesh has no triangles");

  // undirected edge -> (face count, directed occurrences a<b, directed occurrences a>b)
  std::map<std::pair<int, int>, std::array<int, 3>> edges;
  for (std::size_t f = 0; f < mesh.triangles.size(); ++f) {
    const auto& tri = mesh.triangles[f];
    for (int k = 0; k < 3; ++k) {
      if (tri[k] < 0 || static_cast<std::size_t>(tri[k]) >= nv)
        throw Error(ErrorKind::Topology, "triangle " + std::to_string(f) + " references missing vertex");
    }
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2])
      throw Error(ErrorKind::Topology, "triangle " + std::to_string(f) + " repeats a vertex");
    for (int k = 0; k < 3; ++k) {
      const int a = tri[k];
      const int b = tri[(k + 1) % 3];
      auto& rec = edges[{std::min(a, b), std::max(a, b)}];
      rec[0] += 1;
      rec[a < b ? 1 : 2] += 1;
    }
  }

  for (const auto& [edge, rec] : edges) {
    const std::string name = "(" + std::to_string(edge.first) + "," + std::to_string(edge.second) + ")";
    if (rec[0] == 1) throw Error(ErrorKind::Topology, "boundary edge " + name);
    if (rec[0] > 2) throw Error(ErrorKind::Topology, "non-manifold edge " + name);
    if (rec[1] != 1 || rec[2] != 1) throw Error(ErrorKind::Topology, "inconsistent orientation at edge " + name);
  }

  DisjointSets sets(nv);
  std::vector<bool> used(nv, false);
  for (const auto& tri : mesh.triangles) {
    for (int k = 0; k < 3; ++k) used[tri[k]] = true;
    sets.unite(tri[0], tri[1]);
    sets.unite(tri[1], tri[2]);
  }
  for (std::size_t v = 0; v < nv; ++v) {
    if (!used[v]) throw Error(ErrorKind::Topology, "vertex " + std::to_string(v) + " is not referenced by any triangle");
    if (sets.find(v) != sets.find(0)) throw Error(ErrorKind::Topology, "mesh is disconnected");
  }

  MeshTopology topo;
  topo.vertex_count = nv;
  topo.edge_count = edges.size();
  topo.face_count = mesh.triangles.size();
  topo.euler_characteristic =
      static_cast<long>(nv) - static_cast<long>(edges.size()) + static_cast<long>(mesh.triangles.size());
  if (topo.euler_characteristic % 2 != 0)
    throw Error(ErrorKind::Topology, "odd Euler characteristic " + std::to_string(topo.euler_characteristic));
  topo.genus = (2 - topo.euler_characteristic) / 2;
  return topo;
}
}  // namespace detail

/// The fixed differentiable surface with its base metric, discretized either
/// as a periodic grid on a flat torus or as a closed triangle mesh.
///
/// Immutable after construction. Copies share the surface id, so fields built
/// on a copy remain compatible with the original.
class DiscreteSurface {
 public:
  static DiscreteSurface torus(const TorusDims& dims) {
    DiscreteSurface s;
    s.kind_ = SurfaceKind::TorusGrid;
    s.torus_ = dims;
    s.node_count_ = static_cast<std::size_t>(dims.nx) * static_cast<std::size_t>(dims.ny);
    s.check();
    return s;
  }

  static DiscreteSurface mesh(MeshData data) {
    DiscreteSurface s;
    s.kind_ = SurfaceKind::TriangleMesh;
    s.node_count_ = data.vertices.size();
    s.mesh_ = std::move(data);
    s.check();
    return s;
  }

  SurfaceKind kind() const { return kind_; }
  std::size_t node_count() const { return node_count_; }
  std::uint64_t id() const { return id_; }
  const std::optional<TorusDims>& torus_dims() const { return torus_; }
  const std::optional<MeshData>& mesh_data() const { return mesh_; }
  const std::optional<MeshTopology>& topology() const { return topology_; }

  // Row-major on the torus: node = j*nx + i sits at (i*Lx/nx, j*Ly/ny, 0).
  Eigen::Vector3d position(std::size_t node) const {
    if (kind_ == SurfaceKind::TorusGrid) {
      const auto i = static_cast<double>(node % static_cast<std::size_t>(torus_->nx));
      const auto j = static_cast<double>(node / static_cast<std::size_t>(torus_->nx));
      return {i * torus_->lx / torus_->nx, j * torus_->ly / torus_->ny, 0.0};
    }
    return mesh_->vertices[node];
  }

  // Re-runs every constructor check on a copy; a constructed surface always passes.
  void validate() const {
    DiscreteSurface copy = *this;
    copy.check();
  }

  /// Analytic area: Lx*Ly on the torus, sum of triangle areas on a mesh.
  double area() const {
    if (kind_ == SurfaceKind::TorusGrid) return torus_->lx * torus_->ly;
    double total = 0.0;
    for (const auto& t : mesh_->triangles) {
      const auto& a = mesh_->vertices[t[0]];
      const auto& b = mesh_->vertices[t[1]];
      const auto& c = mesh_->vertices[t[2]];
      total += 0.5 * (b - a).cross(c - a).norm();
    }
    return total;
  }

 private:
  DiscreteSurface() : id_(detail::next_surface_id()) {}

  void check() {
    if (kind_ == SurfaceKind::TorusGrid) {
      if (!torus_) throw Error(ErrorKind::InvalidArgument, "torus surface without grid dimensions");
      if (torus_->nx < 4 || torus_->ny < 4)
        throw Error(ErrorKind::DimensionTooSmall, "torus grid needs nx, ny >= 4 (got " + std::to_string(torus_->nx) +
                                                      "x" + std::to_string(torus_->ny) + ")");
      if (!(torus_->lx > 0.0) || !(torus_->ly > 0.0) || !std::isfinite(torus_->lx) || !std::isfinite(torus_->ly))
        throw Error(ErrorKind::InvalidArgument, "torus periods must be positive and finite");
      return;
    }
    if (!mesh_) throw Error(ErrorKind::InvalidArgument, "mesh surface without mesh data");
    for (std::size_t v = 0; v < mesh_->vertices.size(); ++v)
      if (!mesh_->vertices[v].allFinite())
        throw Error(ErrorKind::Parse, "vertex " + std::to_string(v) + " has non-finite coordinates", v);
    topology_ = detail::check_mesh_topology(*mesh_);
  }

  SurfaceKind kind_ = SurfaceKind::TorusGrid;
  std::size_t node_count_ = 0;
  std::uint64_t id_ = 0;
  std::optional<TorusDims> torus_;
  std::optional<MeshData> mesh_;
  std::optional<MeshTopology> topology_;
};

inline DiscreteSurface make_torus(int nx, int ny, double lx, double ly) {
  return DiscreteSurface::torus(TorusDims{nx, ny, lx, ly});
}

/// Reads an ASCII OFF triangle mesh. Extra tokens after a face's indices
/// (per-face colors) are ignored; polygons other than triangles are rejected.
inline DiscreteSurface parse_off(std::istream& in) {
  std::string line;
  bool first = true;
  std::vector<std::vector<std::string>> lines;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::vector<std::string> row;
    for (std::string tok; ls >> tok;) row.push_back(tok);
    if (row.empty()) continue;
    if (first) {
      if (row[0] != "OFF") throw Error(ErrorKind::Parse, "missing OFF header");
      row.erase(row.begin());
      first = false;
      if (row.empty()) continue;
    }
    lines.push_back(std::move(row));
  }
  if (first) throw Error(ErrorKind::Parse, "empty file");

  auto as_long = [](const std::string& s) {
    std::size_t used = 0;
    long v = 0;
    try {
      v = std::stol(s, &used);
    } catch (const std::exception&) {
      throw Error(ErrorKind::Parse, "expected integer, got '" + s + "'");
    }
    if (used != s.size()) throw Error(ErrorKind::Parse, "expected integer, got '" + s + "'");
    return v;
  };
  auto as_double = [](const std::string& s) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      throw Error(ErrorKind::Parse, "expected number, got '" + s + "'");
    }
    if (used != s.size()) throw Error(ErrorKind::Parse, "expected number, got '" + s + "'");
    return v;
  };

  if (lines.empty() || lines[0].size() < 2) throw Error(ErrorKind::Parse, "missing vertex/face counts");
  const long nv = as_long(lines[0][0]);
  const long nf = as_long(lines[0][1]);
  if (nv <= 0 || nf <= 0) throw Error(ErrorKind::Parse, "vertex and face counts must be positive");
  if (static_cast<long>(lines.size()) < 1 + nv + nf)
    throw Error(ErrorKind::Parse, "file truncated: expected " + std::to_string(nv) + " vertices and " +
                                      std::to_string(nf) + " faces");

  MeshData data;
  data.vertices.reserve(nv);
  for (long v = 0; v < nv; ++v) {
    const auto& row = lines[1 + v];
    if (row.size() < 3) throw Error(ErrorKind::Parse, "vertex " + std::to_string(v) + " needs 3 coordinates");
    data.vertices.emplace_back(as_double(row[0]), as_double(row[1]), as_double(row[2]));
  }
  data.triangles.reserve(nf);
  for (long f = 0; f < nf; ++f) {
    const auto& row = lines[1 + nv + f];
    const long k = as_long(row[0]);
    if (k != 3) throw Error(ErrorKind::Parse, "face " + std::to_string(f) + " is not a triangle");
    if (row.size() < 4) throw Error(ErrorKind::Parse, "face " + std::to_string(f) + " is truncated");
    data.triangles.push_back({static_cast<int>(as_long(row[1])), static_cast<int>(as_long(row[2])),
                              static_cast<int>(as_long(row[3]))});
  }
  return DiscreteSurface::mesh(std::move(data));
}

inline DiscreteSurface load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open mesh file '" + path + "'");
  return parse_off(in);
}

inline void write_off(std::ostream& out, const MeshData& mesh) {
  out << "OFF\n" << mesh.vertices.size() << ' ' << mesh.triangles.size() << " 0\n";
  out.precision(17);
  for (const auto& v : mesh.vertices) out << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& t : mesh.triangles) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

/// Real-valued samples at the nodes of one surface.
class ScalarField {
 public:
  ScalarField(const DiscreteSurface& surface, Eigen::VectorXd values)
      : surface_id_(surface.id()), values_(std::move(values)) {
    if (static_cast<std::size_t>(values_.size()) != surface.node_count())
      throw Error(ErrorKind::InvalidArgument, "field has " + std::to_string(values_.size()) + " values, surface has " +
                                                  std::to_string(surface.node_count()) + " nodes");
    for (Eigen::Index i = 0; i < values_.size(); ++i)
      if (!std::isfinite(values_[i]))
        throw Error(ErrorKind::InvalidArgument, "field value at node " + std::to_string(i) + " is not finite",
                    static_cast<std::size_t>(i));
  }

  static ScalarField constant(const DiscreteSurface& surface, double c) {
    return ScalarField(surface, Eigen::VectorXd::Constant(static_cast<Eigen::Index>(surface.node_count()), c));
  }

  std::uint64_t surface_id() const { return surface_id_; }
  const Eigen::VectorXd& values() const { return values_; }
  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }
  double max_abs() const { return values_.size() ? values_.cwiseAbs().maxCoeff() : 0.0; }

 private:
  std::uint64_t surface_id_;
  Eigen::VectorXd values_;
};

enum class PerturbationSide { InverseMetric, Metric };

/// Conformal series for the inverse metric (1 + t f1 + t^2 f2) or for the
/// metric (1 + t f1). Orders above two are not representable.
class ConformalPerturbation {
 public:
  ConformalPerturbation(PerturbationSide side, ScalarField f1, std::optional<ScalarField> f2 = std::nullopt)
      : side_(side), f1_(std::move(f1)), f2_(std::move(f2)) {
    if (f2_ && f2_->surface_id() != f1_.surface_id())
      throw Error(ErrorKind::SurfaceMismatch, "f1 and f2 live on different surfaces");
    if (f2_ && side_ == PerturbationSide::Metric)
      throw Error(ErrorKind::InvalidArgument, "metric-side perturbations are first order in t (no f2)");
  }

  PerturbationSide side() const { return side_; }
  const ScalarField& f1() const { return f1_; }
  const std::optional<ScalarField>& f2() const { return f2_; }
  std::uint64_t surface_id() const { return f1_.surface_id(); }

  Eigen::VectorXd f2_values() const {
    return f2_ ? f2_->values() : Eigen::VectorXd::Zero(f1_.values().size());
  }

  /// Nodal factor multiplying the inverse metric at parameter t.
  Eigen::VectorXd inverse_metric_factor(double t) const {
    const Eigen::VectorXd& f1 = f1_.values();
    if (side_ == PerturbationSide::InverseMetric) {
      Eigen::VectorXd c = Eigen::VectorXd::Ones(f1.size()) + t * f1 + (t * t) * f2_values();
      check_positive(c, "inverse-metric conformal factor");
      return c;
    }
    Eigen::VectorXd g = Eigen::VectorXd::Ones(f1.size()) + t * f1;
    check_positive(g, "metric conformal factor 1 + t*f1");
    return g.cwiseInverse();
  }

  static void check_positive(const Eigen::VectorXd& c, const std::string& what) {
    for (Eigen::Index i = 0; i < c.size(); ++i)
      if (!(c[i] > 0.0))
        throw Error(ErrorKind::PositivityViolation,
                    what + " is " + std::to_string(c[i]) + " at node " + std::to_string(i), static_cast<std::size_t>(i));
  }

 private:
  PerturbationSide side_;
  ScalarField f1_;
  std::optional<ScalarField> f2_;
};

}  // namespace isospec
