#pragma once

// Reference computations used by the tests. None of them call the library's
// solver or correction code.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "isospec/assembly.hpp"
#include "isospec/surface.hpp"

namespace oracle {

/// Sorted eigenvalues of the 5-point Laplacian on an nx x ny torus with
/// periods lx, ly, from the discrete symbol.
inline std::vector<double> torus_symbol_spectrum(int nx, int ny, double lx, double ly) {
  const double hx = lx / nx, hy = ly / ny;
  std::vector<double> v;
  for (int a = 0; a < nx; ++a)
    for (int b = 0; b < ny; ++b)
      v.push_back((2.0 / (hx * hx)) * (1.0 - std::cos(2.0 * std::numbers::pi * a / nx)) +
                  (2.0 / (hy * hy)) * (1.0 - std::cos(2.0 * std::numbers::pi * b / ny)));
  std::sort(v.begin(), v.end());
  return v;
}

/// det(K - lambda M) by partial-pivot Gaussian elimination, written out so
/// the oracle shares no code with Eigen's decompositions.
inline double characteristic(const Eigen::MatrixXd& k, const Eigen::VectorXd& m, double lambda) {
  const Eigen::Index n = k.rows();
  std::vector<std::vector<double>> a(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n)));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = k(i, j) - (i == j ? lambda * m[i] : 0.0);
  double det = 1.0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < a.size(); ++r)
      if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
    if (a[p][c] == 0.0) return 0.0;
    if (p != c) {
      std::swap(a[p], a[c]);
      det = -det;
    }
    det *= a[c][c];
    for (std::size_t r = c + 1; r < a.size(); ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t j = c; j < a.size(); ++j) a[r][j] -= f * a[c][j];
    }
  }
  return det;
}

/// Roots of det(K - lambda M) for a pair with simple spectrum, found by a sign
/// scan over [lo, hi] followed by bisection.
inline std::vector<double> characteristic_roots(const Eigen::MatrixXd& k, const Eigen::VectorXd& m, double lo,
                                                double hi, int scan = 200000) {
  std::vector<double> roots;
  double x0 = lo, f0 = characteristic(k, m, lo);
  for (int s = 1; s <= scan; ++s) {
    const double x1 = lo + (hi - lo) * s / scan;
    const double f1 = characteristic(k, m, x1);
    if (f0 == 0.0) {
      roots.push_back(x0);
    } else if ((f0 < 0.0) != (f1 < 0.0) && f1 != 0.0) {
      double a = x0, b = x1, fa = f0;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (a + b);
        const double fm = characteristic(k, m, mid);
        if ((fm < 0.0) == (fa < 0.0)) {
          a = mid;
          fa = fm;
        } else {
          b = mid;
        }
      }
      roots.push_back(0.5 * (a + b));
    }
    x0 = x1;
    f0 = f1;
  }
  return roots;
}

/// Weighted graph Laplacian on n nodes with random positive edge weights and a
/// random positive lumped mass. Returns a pair not attached to any surface.
inline isospec::OperatorPair random_graph_pair(int n, std::uint64_t seed, double mass_lo = 0.5, double mass_hi = 2.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> w(0.1, 1.0), mass(mass_lo, mass_hi);
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double a = w(rng);
      k(i, j) = k(j, i) = -a;
      k(i, i) += a;
      k(j, j) += a;
    }
  isospec::OperatorPair p;
  p.surface_id = 0;
  p.stiffness = k.sparseView();
  p.mass.resize(n);
  for (int i = 0; i < n; ++i) p.mass[i] = mass(rng);
  return p;
}

inline std::string octahedron_off() {
  return "OFF\n6 8 0\n"
         "1 0 0\n-1 0 0\n0 1 0\n0 -1 0\n0 0 1\n0 0 -1\n"
         "3 0 2 4\n3 2 1 4\n3 1 3 4\n3 3 0 4\n"
         "3 2 0 5\n3 1 2 5\n3 3 1 5\n3 0 3 5\n";
}

/// Unit-radius icosphere with the given number of subdivisions.
inline isospec::MeshData icosphere(int levels) {
  const double p = (1.0 + std::sqrt(5.0)) / 2.0;
  isospec::MeshData m;
  m.vertices = {{-1, p, 0}, {1, p, 0}, {-1, -p, 0}, {1, -p, 0}, {0, -1, p}, {0, 1, p},
                {0, -1, -p}, {0, 1, -p}, {p, 0, -1}, {p, 0, 1}, {-p, 0, -1}, {-p, 0, 1}};
  for (auto& v : m.vertices) v.normalize();
  m.triangles = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                 {11, 10, 2}, {10, 7, 6}, {7, 1, 8},   {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                 {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (int l = 0; l < levels; ++l) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      m.vertices.push_back((0.5 * (m.vertices[a] + m.vertices[b])).normalized());
      const int id = static_cast<int>(m.vertices.size()) - 1;
      mid.emplace(key, id);
      return id;
    };
    std::vector<std::array<int, 3>> next;
    for (const auto& t : m.triangles) {
      const int ab = midpoint(t[0], t[1]), bc = midpoint(t[1], t[2]), ca = midpoint(t[2], t[0]);
      next.push_back({t[0], ab, ca});
      next.push_back({t[1], bc, ab});
      next.push_back({t[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    m.triangles = std::move(next);
  }
  return m;
}

}  // namespace oracle
