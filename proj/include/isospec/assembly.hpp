#pragma once

// Stiffness/mass pairs realizing the unperturbed Laplacian, and the operator
// families of a conformal perturbation.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <ostream>
#include <vector>

#include "isospec/error.hpp"
#include "isospec/surface.hpp"

namespace isospec {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Stiffness K (symmetric PSD) and lumped mass M0 (stored as its diagonal).
/// The Laplacian is M0^-1 K, self-adjoint in <u,v> = u^T M0 v.
struct OperatorPair {
  std::uint64_t surface_id = 0;
  SparseMatrix stiffness;
  Eigen::VectorXd mass;

  Eigen::Index size() const { return mass.size(); }

  // Laplacian applied to each column.
  Eigen::MatrixXd laplacian(const Eigen::MatrixXd& x) const {
    Eigen::MatrixXd kx = stiffness * x;
    return mass.cwiseInverse().asDiagonal() * kx;
  }

  double inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const { return u.dot(mass.cwiseProduct(v)); }
};

namespace detail {
inline double cotangent(const Eigen::Vector3d& apex, const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  const Eigen::Vector3d u = a - apex;
  const Eigen::Vector3d v = b - apex;
  return u.dot(v) / u.cross(v).norm();
}
}  // namespace detail

/// Torus: 5-point periodic stencil weighted by the cell area, uniform mass.
/// Mesh: cotangent stiffness with barycentric lumped mass.
inline OperatorPair assemble_base(const DiscreteSurface& surface) {
  const auto n = static_cast<Eigen::Index>(surface.node_count());
  OperatorPair pair;
  pair.surface_id = surface.id();
  pair.stiffness.resize(n, n);
  std::vector<Eigen::Triplet<double>> triplets;

  if (surface.kind() == SurfaceKind::TorusGrid) {
    const TorusDims& d = *surface.torus_dims();
    const double hx = d.lx / d.nx;
    const double hy = d.ly / d.ny;
    const double area = d.cell_area();
    const double wx = area / (hx * hx);
    const double wy = area / (hy * hy);
    triplets.reserve(static_cast<std::size_t>(5 * n));
    for (int j = 0; j < d.ny; ++j) {
      for (int i = 0; i < d.nx; ++i) {
        const Eigen::Index node = static_cast<Eigen::Index>(j) * d.nx + i;
        const Eigen::Index east = static_cast<Eigen::Index>(j) * d.nx + (i + 1) % d.nx;
        const Eigen::Index west = static_cast<Eigen::Index>(j) * d.nx + (i + d.nx - 1) % d.nx;
        const Eigen::Index north = static_cast<Eigen::Index>((j + 1) % d.ny) * d.nx + i;
        const Eigen::Index south = static_cast<Eigen::Index>((j + d.ny - 1) % d.ny) * d.nx + i;
        triplets.emplace_back(node, node, 2.0 * wx + 2.0 * wy);
        triplets.emplace_back(node, east, -wx);
        triplets.emplace_back(node, west, -wx);
        triplets.emplace_back(node, north, -wy);
        triplets.emplace_back(node, south, -wy);
      }
    }
    pair.mass = Eigen::VectorXd::Constant(n, area);
  } else {
    const MeshData& mesh = *surface.mesh_data();
    std::vector<double> areas(mesh.triangles.size());
    double mean_area = 0.0;
    for (std::size_t f = 0; f < mesh.triangles.size(); ++f) {
      const auto& t = mesh.triangles[f];
      areas[f] = 0.5 * (mesh.vertices[t[1]] - mesh.vertices[t[0]]).cross(mesh.vertices[t[2]] - mesh.vertices[t[0]]).norm();
      mean_area += areas[f];
    }
    mean_area /= static_cast<double>(areas.size());
    pair.mass = Eigen::VectorXd::Zero(n);
    triplets.reserve(mesh.triangles.size() * 12);
    for (std::size_t f = 0; f < mesh.triangles.size(); ++f) {
      if (!(areas[f] >= 1e-14 * mean_area))
        throw Error(ErrorKind::DegenerateTriangle, "triangle " + std::to_string(f) + " has area " +
                                                       std::to_string(areas[f]) + " (mean " + std::to_string(mean_area) + ")");
      const auto& t = mesh.triangles[f];
      for (int k = 0; k < 3; ++k) {
        const int apex = t[k];
        const int a = t[(k + 1) % 3];
        const int b = t[(k + 2) % 3];
        const double w = 0.5 * detail::cotangent(mesh.vertices[apex], mesh.vertices[a], mesh.vertices[b]);
        triplets.emplace_back(a, b, -w);
        triplets.emplace_back(b, a, -w);
        triplets.emplace_back(a, a, w);
        triplets.emplace_back(b, b, w);
        pair.mass[apex] += areas[f] / 3.0;
      }
    }
  }
  pair.stiffness.setFromTriplets(triplets.begin(), triplets.end());
  pair.stiffness.makeCompressed();
  return pair;
}

struct PairDiagnostics {
  double symmetry_defect = 0.0;   // max |K_ij - K_ji| / max |K_ij|
  double constant_residual = 0.0; // ||K 1|| / (||K|| ||1||)
  double min_mass = 0.0;
  double total_mass = 0.0;
};

inline PairDiagnostics diagnose(const OperatorPair& pair) {
  PairDiagnostics d;
  const SparseMatrix diff = SparseMatrix(pair.stiffness.transpose()) - pair.stiffness;
  double kmax = 0.0;
  for (Eigen::Index k = 0; k < pair.stiffness.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(pair.stiffness, k); it; ++it) kmax = std::max(kmax, std::abs(it.value()));
  double dmax = 0.0;
  for (Eigen::Index k = 0; k < diff.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(diff, k); it; ++it) dmax = std::max(dmax, std::abs(it.value()));
  d.symmetry_defect = kmax > 0 ? dmax / kmax : 0.0;
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(pair.size());
  const double knorm = pair.stiffness.norm();
  d.constant_residual = knorm > 0 ? (pair.stiffness * ones).norm() / (knorm * ones.norm()) : 0.0;
  d.min_mass = pair.mass.minCoeff();
  d.total_mass = pair.mass.sum();
  return d;
}

/// An operator on nodal fields. Either diag(q) composed with the base
/// Laplacian (the conformal form, stored as the multiplier q) or an explicit
/// sparse matrix.
class NodalOperator {
 public:
  static NodalOperator zero(Eigen::Index n) { return conformal(Eigen::VectorXd::Zero(n)); }
  static NodalOperator conformal(Eigen::VectorXd multiplier) {
    NodalOperator op;
    op.multiplier_ = std::move(multiplier);
    return op;
  }
  static NodalOperator general(SparseMatrix matrix) {
    NodalOperator op;
    op.matrix_ = std::move(matrix);
    return op;
  }

  bool is_conformal() const { return multiplier_.has_value(); }
  const std::optional<Eigen::VectorXd>& multiplier() const { return multiplier_; }

  bool is_zero() const {
    if (multiplier_) return multiplier_->isZero(0.0);
    return matrix_.nonZeros() == 0 || Eigen::MatrixXd(matrix_).isZero(0.0);
  }

  Eigen::MatrixXd apply(const OperatorPair& pair, const Eigen::MatrixXd& x) const {
    if (multiplier_) return multiplier_->asDiagonal() * pair.laplacian(x);
    return matrix_ * x;
  }

  SparseMatrix matrix(const OperatorPair& pair) const {
    if (!multiplier_) return matrix_;
    SparseMatrix m = (*multiplier_).cwiseQuotient(pair.mass).asDiagonal() * pair.stiffness;
    return m;
  }

 private:
  NodalOperator() = default;
  std::optional<Eigen::VectorXd> multiplier_;
  SparseMatrix matrix_;
};

/// H(t) = Lap + t H1 + t^2 H2 with inner product M0 (I + t G1 + t^2 G2).
struct PerturbationOperators {
  std::uint64_t surface_id = 0;
  NodalOperator h1 = NodalOperator::zero(0);
  NodalOperator h2 = NodalOperator::zero(0);
  Eigen::VectorXd g1;
  Eigen::VectorXd g2;
};

inline PerturbationOperators conformal_operators(const OperatorPair& pair, const ConformalPerturbation& pert) {
  if (pert.surface_id() != pair.surface_id)
    throw Error(ErrorKind::SurfaceMismatch, "perturbation and operator pair live on different surfaces");
  const Eigen::VectorXd& f1 = pert.f1().values();
  PerturbationOperators ops;
  ops.surface_id = pair.surface_id;
  if (pert.side() == PerturbationSide::InverseMetric) {
    // Area form scales like 1/c(t): 1/(1 + t f1 + t^2 f2) = 1 - t f1 + t^2 (f1^2 - f2) + O(t^3).
    const Eigen::VectorXd f2 = pert.f2_values();
    ops.h1 = NodalOperator::conformal(f1);
    ops.h2 = NodalOperator::conformal(f2);
    ops.g1 = -f1;
    ops.g2 = f1.cwiseProduct(f1) - f2;
  } else {
    // Metric factor 1 + t f gives inverse-metric factor 1 - t f + t^2 f^2 - ...
    ops.h1 = NodalOperator::conformal(-f1);
    ops.h2 = NodalOperator::conformal(f1.cwiseProduct(f1));
    ops.g1 = f1;
    ops.g2 = Eigen::VectorXd::Zero(f1.size());
  }
  return ops;
}

/// Finite-t operator family: (K, M0 / c(t)). K is conformally invariant in 2D.
inline OperatorPair exact_perturbed_pair(const OperatorPair& pair, const ConformalPerturbation& pert, double t) {
  if (pert.surface_id() != pair.surface_id)
    throw Error(ErrorKind::SurfaceMismatch, "perturbation and operator pair live on different surfaces");
  const Eigen::VectorXd c = pert.inverse_metric_factor(t);
  OperatorPair out;
  out.surface_id = pair.surface_id;
  out.stiffness = pair.stiffness;
  out.mass = pair.mass.cwiseQuotient(c);
  return out;
}

/// Pair for an inverse metric with an arbitrary positive nodal factor c.
inline OperatorPair rescaled_pair(const OperatorPair& pair, const Eigen::VectorXd& inverse_metric_factor) {
  ConformalPerturbation::check_positive(inverse_metric_factor, "inverse-metric conformal factor");
  OperatorPair out;
  out.surface_id = pair.surface_id;
  out.stiffness = pair.stiffness;
  out.mass = pair.mass.cwiseQuotient(inverse_metric_factor);
  return out;
}

inline void write_matrix_market(std::ostream& out, const SparseMatrix& m) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
  out.precision(17);
  for (Eigen::Index k = 0; k < m.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
}

inline void write_matrix_market(std::ostream& out, const Eigen::VectorXd& diagonal) {
  SparseMatrix m(diagonal.size(), diagonal.size());
  std::vector<Eigen::Triplet<double>> t;
  for (Eigen::Index i = 0; i < diagonal.size(); ++i) t.emplace_back(i, i, diagonal[i]);
  m.setFromTriplets(t.begin(), t.end());
  write_matrix_market(out, m);
}

}  // namespace isospec
