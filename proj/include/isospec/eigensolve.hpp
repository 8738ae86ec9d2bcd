#pragma once

// Dense generalized symmetric eigensolver K psi = lambda M0 psi for lumped
// (diagonal) mass, with degeneracy grouping.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdint>
#include <ostream>
#include <vector>

#include "isospec/assembly.hpp"
#include "isospec/error.hpp"

namespace isospec {

using Partition = std::vector<std::vector<Eigen::Index>>;

inline constexpr double kDefaultDegeneracyTolerance = 1e-8;

/// Maximal runs of an ascending sequence in which consecutive values satisfy
/// |a - b| <= tol (1 + |a|); closeness chains transitively inside a run.
inline Partition degeneracy_partition(const Eigen::VectorXd& values, double tol) {
  Partition groups;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (!groups.empty()) {
      const double prev = values[groups.back().back()];
      if (std::abs(values[i] - prev) <= tol * (1.0 + std::abs(prev))) {
        groups.back().push_back(i);
        continue;
      }
    }
    groups.push_back({i});
  }
  return groups;
}

/// Lowest eigenpairs of a stiffness/mass pair. Column n of `eigenvectors` is
/// M0-orthonormal; `mass` is the diagonal of M0 the vectors are normalized in.
struct SpectralData {
  std::uint64_t surface_id = 0;
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;
  Eigen::VectorXd mass;
  Partition groups;
  double tol_deg = kDefaultDegeneracyTolerance;

  Eigen::Index mode_count() const { return eigenvalues.size(); }

  std::vector<Eigen::Index> group_ids() const {
    std::vector<Eigen::Index> ids(static_cast<std::size_t>(mode_count()));
    for (std::size_t g = 0; g < groups.size(); ++g)
      for (Eigen::Index i : groups[g]) ids[static_cast<std::size_t>(i)] = static_cast<Eigen::Index>(g);
    return ids;
  }
};

struct SpectralDefects {
  double orthonormality = 0.0;  // max |psi_i^T M0 psi_j - delta_ij|
  double residual = 0.0;        // max ||K psi - lambda M0 psi|| / ((1 + |lambda|) ||psi||_M0)
};

inline SpectralDefects spectral_defects(const OperatorPair& pair, const SpectralData& spec) {
  SpectralDefects d;
  const Eigen::MatrixXd& psi = spec.eigenvectors;
  const Eigen::MatrixXd gram = psi.transpose() * pair.mass.asDiagonal() * psi;
  d.orthonormality = (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
  const Eigen::MatrixXd kpsi = pair.stiffness * psi;
  for (Eigen::Index n = 0; n < psi.cols(); ++n) {
    const double lambda = spec.eigenvalues[n];
    const double norm = std::sqrt(pair.inner(psi.col(n), psi.col(n)));
    const double r = (kpsi.col(n) - lambda * pair.mass.cwiseProduct(psi.col(n))).norm();
    d.residual = std::max(d.residual, r / ((1.0 + std::abs(lambda)) * norm));
  }
  return d;
}

namespace detail {
inline void check_solve_args(const OperatorPair& pair, Eigen::Index n_modes) {
  if (n_modes < 1 || n_modes > pair.size())
    throw Error(ErrorKind::InvalidArgument, "n_modes must lie in [1, " + std::to_string(pair.size()) + "], got " +
                                                std::to_string(n_modes));
  for (Eigen::Index i = 0; i < pair.size(); ++i)
    if (!(pair.mass[i] > 0.0))
      throw Error(ErrorKind::NumericalBreakdown, "mass entry at node " + std::to_string(i) + " is not positive",
                  static_cast<std::size_t>(i));
}

// D K D with D = M0^-1/2, so the reduced problem is a standard symmetric one.
inline Eigen::MatrixXd reduced_matrix(const OperatorPair& pair, const Eigen::VectorXd& scale) {
  Eigen::MatrixXd a = Eigen::MatrixXd(pair.stiffness);
  a = scale.asDiagonal() * a * scale.asDiagonal();
  // symmetrize exactly so the solver sees a bit-symmetric input
  return 0.5 * (a + a.transpose());
}
}  // namespace detail

/// Lowest n_modes eigenpairs. Householder tridiagonalization followed by
/// implicit symmetric QR; deterministic for identical input bits. Each
/// eigenvector's largest-magnitude entry (lowest index on ties) is positive.
inline SpectralData solve(const OperatorPair& pair, Eigen::Index n_modes, double tol_deg = kDefaultDegeneracyTolerance) {
  if (!(tol_deg >= 1e-12 && tol_deg <= 1e-2))
    throw Error(ErrorKind::InvalidArgument, "tol_deg must lie in [1e-12, 1e-2]");
  detail::check_solve_args(pair, n_modes);

  const Eigen::VectorXd scale = pair.mass.cwiseSqrt().cwiseInverse();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(detail::reduced_matrix(pair, scale), Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success) throw Error(ErrorKind::NumericalBreakdown, "symmetric QR did not converge");

  SpectralData spec;
  spec.surface_id = pair.surface_id;
  spec.tol_deg = tol_deg;
  spec.mass = pair.mass;
  spec.eigenvalues = es.eigenvalues().head(n_modes);
  spec.eigenvectors = scale.asDiagonal() * es.eigenvectors().leftCols(n_modes);
  for (Eigen::Index n = 0; n < n_modes; ++n) {
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < spec.eigenvectors.rows(); ++i) {
      const double a = std::abs(spec.eigenvectors(i, n));
      if (a > best) {
        best = a;
        arg = i;
      }
    }
    if (spec.eigenvectors(arg, n) < 0.0) spec.eigenvectors.col(n) *= -1.0;
  }

  const SpectralDefects defects = spectral_defects(pair, spec);
  if (!(defects.orthonormality <= 1e-10))
    throw Error(ErrorKind::NumericalBreakdown, "eigenvectors lost M0-orthonormality (" +
                                                   std::to_string(defects.orthonormality) + ")");
  if (!(defects.residual <= 1e-9))
    throw Error(ErrorKind::NumericalBreakdown, "eigenpair residual " + std::to_string(defects.residual) + " too large");

#ifdef ISOSPEC_FAULT_CORRUPT_EIGENSOLVER
  // Test fixture only: skews the spectrum after the self-checks.
  for (Eigen::Index n = 0; n < spec.eigenvalues.size(); ++n) spec.eigenvalues[n] *= 1.0 + 1e-3 * static_cast<double>(n % 3);
#endif

  spec.groups = degeneracy_partition(spec.eigenvalues, tol_deg);
  return spec;
}

/// Lowest n_modes eigenvalues only (no eigenvectors).
inline Eigen::VectorXd solve_values(const OperatorPair& pair, Eigen::Index n_modes) {
  detail::check_solve_args(pair, n_modes);
  const Eigen::VectorXd scale = pair.mass.cwiseSqrt().cwiseInverse();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(detail::reduced_matrix(pair, scale), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw Error(ErrorKind::NumericalBreakdown, "symmetric QR did not converge");
  Eigen::VectorXd values = es.eigenvalues().head(n_modes);
#ifdef ISOSPEC_FAULT_CORRUPT_EIGENSOLVER
  for (Eigen::Index n = 0; n < values.size(); ++n) values[n] *= 1.0 + 1e-3 * static_cast<double>(n % 3);
#endif
  return values;
}

inline void write_spectrum_csv(std::ostream& out, const SpectralData& spec) {
  out << "# schema_version: 1\n";
  out << "# tol_deg: " << spec.tol_deg << '\n';
  out << "index,eigenvalue,group\n";
  out.precision(17);
  const auto ids = spec.group_ids();
  for (Eigen::Index n = 0; n < spec.mode_count(); ++n)
    out << n << ',' << spec.eigenvalues[n] << ',' << ids[static_cast<std::size_t>(n)] << '\n';
}

}  // namespace isospec
