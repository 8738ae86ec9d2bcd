#pragma once

// Standard field families: low-frequency Fourier fields on the torus, vertex
// harmonics on meshes, and seeded random smooth fields.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

#include "isospec/eigensolve.hpp"
#include "isospec/error.hpp"
#include "isospec/surface.hpp"

namespace isospec {

/// Half-plane wave vectors (m > 0, or m == 0 and n > 0) ordered by |k|^2, then
/// by descending m, then by descending n.
inline std::vector<std::pair<int, int>> fourier_wave_vectors(int max_norm2) {
  std::vector<std::pair<int, int>> ks;
  for (int r2 = 1; r2 <= max_norm2; ++r2)
    for (int m = r2; m >= 0; --m)
      for (int n = r2; n >= -r2; --n) {
        if (m * m + n * n != r2) continue;
        if (m == 0 && n <= 0) continue;
        ks.emplace_back(m, n);
      }
  return ks;
}

inline ScalarField fourier_field(const DiscreteSurface& surface, int m, int n, bool sine) {
  if (surface.kind() != SurfaceKind::TorusGrid)
    throw Error(ErrorKind::InvalidArgument, "Fourier fields are defined on torus surfaces only");
  const TorusDims& d = *surface.torus_dims();
  Eigen::VectorXd v(static_cast<Eigen::Index>(surface.node_count()));
  for (std::size_t i = 0; i < surface.node_count(); ++i) {
    const Eigen::Vector3d p = surface.position(i);
    const double phase = 2.0 * std::numbers::pi * (m * p.x() / d.lx + n * p.y() / d.ly);
    v[static_cast<Eigen::Index>(i)] = sine ? std::sin(phase) : std::cos(phase);
  }
  return ScalarField(surface, std::move(v));
}

/// The constant field followed by cos/sin pairs of increasing frequency:
/// 1, cos 2πx, sin 2πx, cos 2πy, sin 2πy, cos 2π(x+y), sin 2π(x+y), ...
inline std::vector<ScalarField> fourier_basis(const DiscreteSurface& surface, std::size_t count) {
  std::vector<ScalarField> basis;
  if (count == 0) return basis;
  basis.push_back(ScalarField::constant(surface, 1.0));
  for (int r2 = 1; basis.size() < count; ++r2) {
    for (const auto& [m, n] : fourier_wave_vectors(r2)) {
      if (m * m + n * n != r2) continue;
      if (basis.size() < count) basis.push_back(fourier_field(surface, m, n, false));
      if (basis.size() < count) basis.push_back(fourier_field(surface, m, n, true));
    }
  }
  return basis;
}

/// Low-order eigenfunctions of the base Laplacian, used as the smooth field
/// family on meshes.
inline std::vector<ScalarField> harmonic_basis(const DiscreteSurface& surface, const SpectralData& spec,
                                               std::size_t count) {
  if (spec.surface_id != surface.id()) throw Error(ErrorKind::SurfaceMismatch, "spectrum belongs to another surface");
  if (count > static_cast<std::size_t>(spec.mode_count()))
    throw Error(ErrorKind::ModeCountMismatch, "not enough computed modes for the requested harmonic basis");
  std::vector<ScalarField> basis;
  for (std::size_t k = 0; k < count; ++k)
    basis.emplace_back(surface, spec.eigenvectors.col(static_cast<Eigen::Index>(k)));
  return basis;
}

/// Random smooth field with max |f| = amplitude. Torus: random Fourier
/// combination with |k|^2 <= 5. Mesh: random quadratic polynomial in the
/// centred, radius-normalized vertex coordinates.
inline ScalarField random_smooth_field(const DiscreteSurface& surface, std::uint64_t seed, double amplitude) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  const auto n = static_cast<Eigen::Index>(surface.node_count());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  if (surface.kind() == SurfaceKind::TorusGrid) {
    v.array() += coef(rng);
    for (const auto& [m, k] : fourier_wave_vectors(5)) {
      v += coef(rng) * fourier_field(surface, m, k, false).values();
      v += coef(rng) * fourier_field(surface, m, k, true).values();
    }
  } else {
    Eigen::Vector3d centre = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < surface.node_count(); ++i) centre += surface.position(i);
    centre /= static_cast<double>(surface.node_count());
    double radius = 0.0;
    for (std::size_t i = 0; i < surface.node_count(); ++i) radius = std::max(radius, (surface.position(i) - centre).norm());
    std::vector<double> c(10);
    for (double& ci : c) ci = coef(rng);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Vector3d p = (surface.position(static_cast<std::size_t>(i)) - centre) / radius;
      v[i] = c[0] + c[1] * p.x() + c[2] * p.y() + c[3] * p.z() + c[4] * p.x() * p.x() + c[5] * p.y() * p.y() +
             c[6] * p.z() * p.z() + c[7] * p.x() * p.y() + c[8] * p.y() * p.z() + c[9] * p.z() * p.x();
    }
  }
  const double peak = v.cwiseAbs().maxCoeff();
  if (peak > 0.0) v *= amplitude / peak;
  return ScalarField(surface, std::move(v));
}

}  // namespace isospec
