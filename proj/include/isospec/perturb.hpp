#pragma once

// Eigenvalue and eigenvector corrections for H(t) = Lap + t H1 + t^2 H2 under
// the inner product <u, M0 (I + t G1 + t^2 G2) v>.
//
// All inner products are M0-weighted. Matrix elements are
//   A1(i, n) = <psi_i, H1 psi_n> = psi_i^T M0 H1 psi_n
// and the corrections read
//   lambda1_n = A1(n, n)
//   lambda2_n = sum_{i outside group(n)} A1(i, n) A1(n, i) / (lambda_n - lambda_i) + A2(n, n)
//   psi1_n    = sum_{i outside group(n)} A1(i, n) / (lambda_n - lambda_i) psi_i - 1/2 <psi_n, G1 psi_n> psi_n
// G1 and G2 enter only the eigenvector normalization, never the eigenvalues.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <vector>

#include "isospec/assembly.hpp"
#include "isospec/eigensolve.hpp"
#include "isospec/error.hpp"

namespace isospec {

/// Spectrum whose degenerate blocks have been rotated so that the projected
/// first-order operator is diagonal. Where first-order values still coincide
/// inside a block, the block is further rotated to diagonalize the
/// second-order effective operator.
struct AdaptedSpectrum {
  SpectralData spec;
  std::vector<Eigen::MatrixXd> rotations;  // one per group, identity for singletons
  double max_offdiagonal = 0.0;            // adapted projected H1, relative to max ||H1 psi_a||_M0 over the block
};

namespace detail {

inline Eigen::MatrixXd elements(const OperatorPair& base, const NodalOperator& op, const Eigen::MatrixXd& left,
                                const Eigen::MatrixXd& right) {
  const Eigen::MatrixXd hr = op.apply(base, right);
  return left.transpose() * base.mass.asDiagonal() * hr;
}

inline Eigen::VectorXd diagonal_elements(const OperatorPair& base, const NodalOperator& op, const Eigen::MatrixXd& psi) {
  const Eigen::MatrixXd hp = op.apply(base, psi);
  Eigen::VectorXd d(psi.cols());
  for (Eigen::Index n = 0; n < psi.cols(); ++n) d[n] = psi.col(n).dot(base.mass.cwiseProduct(hp.col(n)));
  return d;
}

inline Eigen::VectorXd weighted_diagonal(const Eigen::VectorXd& mass, const Eigen::VectorXd& g, const Eigen::MatrixXd& psi) {
  Eigen::VectorXd d(psi.cols());
  const Eigen::VectorXd w = mass.cwiseProduct(g);
  for (Eigen::Index n = 0; n < psi.cols(); ++n) d[n] = psi.col(n).dot(w.cwiseProduct(psi.col(n)));
  return d;
}

inline void check_compatible(const SpectralData& spec, const OperatorPair& base, const PerturbationOperators& ops) {
  if (spec.surface_id != base.surface_id || ops.surface_id != base.surface_id)
    throw Error(ErrorKind::SurfaceMismatch, "spectrum, base pair and perturbation operators disagree on the surface");
  if (spec.eigenvectors.rows() != base.size())
    throw Error(ErrorKind::ModeCountMismatch, "eigenvector length does not match the operator size");
}

inline Eigen::Index resolve_truncation(const SpectralData& spec, Eigen::Index truncation) {
  if (truncation < 0) return spec.mode_count();
  if (truncation < 1 || truncation > spec.mode_count())
    throw Error(ErrorKind::ModeCountMismatch, "truncation_modes must lie in [1, " + std::to_string(spec.mode_count()) +
                                                  "], got " + std::to_string(truncation));
  return truncation;
}

inline void orient(Eigen::MatrixXd& vectors, Eigen::MatrixXd& rotation, Eigen::Index col_in_block, Eigen::Index col) {
  Eigen::Index arg = 0;
  double best = -1.0;
  for (Eigen::Index i = 0; i < vectors.rows(); ++i) {
    const double a = std::abs(vectors(i, col));
    if (a > best) {
      best = a;
      arg = i;
    }
  }
  if (vectors(arg, col) < 0.0) {
    vectors.col(col) *= -1.0;
    rotation.col(col_in_block) *= -1.0;
  }
}

// Maximal runs of ascending values whose consecutive gaps are <= tol.
inline std::vector<std::vector<Eigen::Index>> runs_within(const Eigen::VectorXd& values, double tol) {
  std::vector<std::vector<Eigen::Index>> runs;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (!runs.empty() && values[i] - values[runs.back().back()] <= tol) runs.back().push_back(i);
    else runs.push_back({i});
  }
  return runs;
}

// Eigen-decomposition of a small symmetric matrix, ascending.
inline std::pair<Eigen::VectorXd, Eigen::MatrixXd> small_eigh(const Eigen::MatrixXd& m) {
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  return {es.eigenvalues(), es.eigenvectors()};
}

}  // namespace detail

/// Rotates each degeneracy group so the projected H1 is diagonal; sub-blocks
/// with coinciding first-order values are rotated to diagonalize the
/// second-order effective operator (sums truncated at `truncation` modes).
inline AdaptedSpectrum adapt_degenerate_basis(const SpectralData& spec, const OperatorPair& base,
                                              const PerturbationOperators& ops, Eigen::Index truncation = -1) {
  detail::check_compatible(spec, base, ops);
  const Eigen::Index n_trunc = detail::resolve_truncation(spec, truncation);

  AdaptedSpectrum out;
  out.spec = spec;
  Eigen::MatrixXd& psi = out.spec.eigenvectors;
  const Eigen::VectorXd& lambda = spec.eigenvalues;

  for (const auto& group : spec.groups) {
    const auto k = static_cast<Eigen::Index>(group.size());
    if (k == 1) {
      out.rotations.push_back(Eigen::MatrixXd::Identity(1, 1));
      continue;
    }
    const Eigen::Index first = group.front();
    const Eigen::MatrixXd block = psi.middleCols(first, k);
    const double lambda_g = lambda.segment(first, k).mean();

    // |<psi_b, H1 psi_a>| <= ||H1 psi_a||_M0, so this bounds every block entry.
    const Eigen::MatrixXd h_block = ops.h1.apply(base, block);
    double op_scale = 0.0;
    for (Eigen::Index a = 0; a < k; ++a)
      op_scale = std::max(op_scale, std::sqrt(base.inner(h_block.col(a), h_block.col(a))));

    // Stage 1: diagonalize the projected first-order operator.
    const Eigen::MatrixXd b1 = block.transpose() * base.mass.asDiagonal() * h_block;
    const auto [mu, r1] = detail::small_eigh(b1);
    Eigen::MatrixXd rotation = r1;
    Eigen::MatrixXd rotated = block * r1;

    // Stage 2: inside runs of equal first-order values, diagonalize
    // W(a, b) = sum_{i outside group} A1(a, i) A1(i, b) / (lambda - lambda_i) + A2(a, b).
    const auto runs = detail::runs_within(mu, spec.tol_deg * op_scale);
    bool any_run = false;
    for (const auto& run : runs) any_run = any_run || run.size() > 1;
    if (any_run) {
      std::vector<Eigen::Index> outside;
      for (Eigen::Index i = 0; i < n_trunc; ++i) {
        if (i >= first && i < first + k) continue;
        if (std::abs(lambda_g - lambda[i]) < 1e-12 * (1.0 + std::abs(lambda_g)))
          throw Error(ErrorKind::DivisionGuard, "mode " + std::to_string(i) + " is nearly degenerate with group at " +
                                                    std::to_string(first) + "; tol_deg too small");
        outside.push_back(i);
      }
      Eigen::MatrixXd psi_out(psi.rows(), static_cast<Eigen::Index>(outside.size()));
      for (std::size_t c = 0; c < outside.size(); ++c) psi_out.col(static_cast<Eigen::Index>(c)) = psi.col(outside[c]);
      const Eigen::MatrixXd a_gi = detail::elements(base, ops.h1, rotated, psi_out);  // <psi_a, H1 psi_i>
      const Eigen::MatrixXd a_ig = detail::elements(base, ops.h1, psi_out, rotated);  // <psi_i, H1 psi_b>
      const Eigen::MatrixXd a2 = detail::elements(base, ops.h2, rotated, rotated);
      for (const auto& run : runs) {
        if (run.size() < 2) continue;
        const auto m = static_cast<Eigen::Index>(run.size());
        Eigen::MatrixXd w(m, m);
        for (Eigen::Index a = 0; a < m; ++a) {
          for (Eigen::Index b = 0; b < m; ++b) {
            double sum = 0.0;
            for (std::size_t c = 0; c < outside.size(); ++c) {
              const auto ci = static_cast<Eigen::Index>(c);
              sum += a_gi(run[a], ci) * a_ig(ci, run[b]) / (lambda_g - lambda[outside[c]]);
            }
            w(a, b) = sum + a2(run[a], run[b]);
          }
        }
        const auto [nu, r2] = detail::small_eigh(w);
        Eigen::MatrixXd cols(k, m);
        Eigen::MatrixXd vecs(rotated.rows(), m);
        for (Eigen::Index a = 0; a < m; ++a) {
          cols.col(a) = rotation.col(run[a]);
          vecs.col(a) = rotated.col(run[a]);
        }
        cols = cols * r2;
        vecs = vecs * r2;
        for (Eigen::Index a = 0; a < m; ++a) {
          rotation.col(run[a]) = cols.col(a);
          rotated.col(run[a]) = vecs.col(a);
        }
      }
    }

    psi.middleCols(first, k) = rotated;
    for (Eigen::Index c = 0; c < k; ++c) detail::orient(psi, rotation, c, first + c);

    if (op_scale > 0.0) {
      const Eigen::MatrixXd adapted = detail::elements(base, ops.h1, psi.middleCols(first, k), psi.middleCols(first, k));
      for (Eigen::Index a = 0; a < k; ++a)
        for (Eigen::Index b = 0; b < k; ++b)
          if (a != b) out.max_offdiagonal = std::max(out.max_offdiagonal, std::abs(adapted(a, b)) / op_scale);
    }
    out.rotations.push_back(rotation);
  }
  return out;
}

/// Per-mode corrections for the retained modes of an adapted spectrum.
struct CorrectionReport {
  Eigen::VectorXd lambda0;
  Eigen::VectorXd lambda1;
  Eigen::VectorXd lambda2;
  Eigen::MatrixXd psi1_coeffs;  // column n holds the coefficients of psi1_n in the psi^(0) basis
  std::vector<Eigen::MatrixXd> basis_rotations;
  Partition groups;
  double tol_deg = kDefaultDegeneracyTolerance;
  Eigen::Index truncation_modes = 0;
  Eigen::VectorXd tail_estimate;  // bound on the omitted part of each second-order sum; NaN when unavailable
  std::vector<bool> truncation_warning;
};

/// Caches the matrix elements of H1 in the adapted basis and evaluates the
/// corrections from them.
class CorrectionEngine {
 public:
  CorrectionEngine(const AdaptedSpectrum& adapted, const OperatorPair& base, const PerturbationOperators& ops,
                   Eigen::Index truncation = -1)
      : spec_(adapted.spec), rotations_(adapted.rotations) {
    detail::check_compatible(spec_, base, ops);
    n_ = detail::resolve_truncation(spec_, truncation);
    const Eigen::MatrixXd psi = spec_.eigenvectors.leftCols(n_);
    a1_ = detail::elements(base, ops.h1, psi, psi);
    a2_diag_ = detail::diagonal_elements(base, ops.h2, psi);
    g1_diag_ = detail::weighted_diagonal(spec_.mass, ops.g1, psi);
    group_of_.assign(static_cast<std::size_t>(spec_.mode_count()), 0);
    for (std::size_t g = 0; g < spec_.groups.size(); ++g)
      for (Eigen::Index i : spec_.groups[g]) group_of_[static_cast<std::size_t>(i)] = g;

    if (ops.h1.is_conformal()) {
      // Omitted mass of sum_i S_in^2 with S = psi^T M0 diag(q) psi bounds the tail.
      const Eigen::VectorXd& q = *ops.h1.multiplier();
      const Eigen::VectorXd q2 = q.cwiseProduct(q);
      full_norm_ = detail::weighted_diagonal(spec_.mass, q2, psi);
      s_ = psi.transpose() * spec_.mass.cwiseProduct(q).asDiagonal() * psi;
      conformal_ = true;
    }
  }

  Eigen::Index truncation() const { return n_; }
  const Eigen::MatrixXd& h1_elements() const { return a1_; }

  Eigen::VectorXd first_order() const { return a1_.diagonal(); }

  Eigen::VectorXd first_order_vector(Eigen::Index n) const {
    check_mode(n);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n_);
    const double ln = spec_.eigenvalues[n];
    for (Eigen::Index i = 0; i < n_; ++i) {
      if (same_group(i, n)) continue;
      c[i] = a1_(i, n) / guarded_gap(ln, spec_.eigenvalues[i], n, i);
    }
    c[n] = -0.5 * g1_diag_[n];
    return c;
  }

  Eigen::VectorXd second_order() const {
    Eigen::VectorXd l2(n_);
    for (Eigen::Index n = 0; n < n_; ++n) l2[n] = second_order_sum(n) + a2_diag_[n];
    return l2;
  }

  // H1-coupling part of lambda2 (the sum, without <psi_n, H2 psi_n>).
  double second_order_sum(Eigen::Index n) const {
    check_mode(n);
    const double ln = spec_.eigenvalues[n];
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n_; ++i) {
      if (same_group(i, n)) continue;
      sum += a1_(i, n) * a1_(n, i) / guarded_gap(ln, spec_.eigenvalues[i], n, i);
    }
    return sum;
  }

  Eigen::VectorXd tail_estimate() const {
    Eigen::VectorXd tail = Eigen::VectorXd::Constant(n_, std::numeric_limits<double>::quiet_NaN());
    if (!conformal_) return tail;
    if (n_ == spec_.eigenvectors.rows()) return Eigen::VectorXd::Zero(n_);
    const double top = spec_.eigenvalues[n_ - 1];
    for (Eigen::Index n = 0; n < n_; ++n) {
      const double ln = spec_.eigenvalues[n];
      const double omitted = std::max(0.0, full_norm_[n] - s_.col(n).squaredNorm());
      if (omitted == 0.0 || ln == 0.0) {
        tail[n] = 0.0;
      } else if (top - ln <= spec_.tol_deg * (1.0 + std::abs(ln))) {
        tail[n] = std::numeric_limits<double>::infinity();
      } else {
        tail[n] = std::abs(ln) * omitted * top / (top - ln);
      }
    }
    return tail;
  }

  CorrectionReport report() const {
    CorrectionReport r;
    r.lambda0 = spec_.eigenvalues.head(n_);
    r.lambda1 = first_order();
    r.lambda2 = second_order();
    r.psi1_coeffs.resize(n_, n_);
    for (Eigen::Index n = 0; n < n_; ++n) r.psi1_coeffs.col(n) = first_order_vector(n);
    r.basis_rotations = rotations_;
    r.groups = spec_.groups;
    r.tol_deg = spec_.tol_deg;
    r.truncation_modes = n_;
    r.tail_estimate = tail_estimate();
    r.truncation_warning.resize(static_cast<std::size_t>(n_));
    for (Eigen::Index n = 0; n < n_; ++n) {
      const double partial = std::abs(second_order_sum(n));
      const double tail = r.tail_estimate[n];
      r.truncation_warning[static_cast<std::size_t>(n)] = !std::isnan(tail) && tail > 0.01 * partial;
    }
    return r;
  }

 private:
  bool same_group(Eigen::Index i, Eigen::Index n) const {
    return group_of_[static_cast<std::size_t>(i)] == group_of_[static_cast<std::size_t>(n)];
  }
  void check_mode(Eigen::Index n) const {
    if (n < 0 || n >= n_)
      throw Error(ErrorKind::ModeCountMismatch, "mode " + std::to_string(n) + " outside the retained " +
                                                    std::to_string(n_) + " modes");
  }
  double guarded_gap(double ln, double li, Eigen::Index n, Eigen::Index i) const {
    const double gap = ln - li;
    if (std::abs(gap) < 1e-12 * (1.0 + std::abs(ln)))
      throw Error(ErrorKind::DivisionGuard, "modes " + std::to_string(n) + " and " + std::to_string(i) +
                                                " are in different groups but nearly degenerate; tol_deg too small");
    return gap;
  }

  SpectralData spec_;
  std::vector<Eigen::MatrixXd> rotations_;
  Eigen::Index n_ = 0;
  Eigen::MatrixXd a1_;
  Eigen::VectorXd a2_diag_;
  Eigen::VectorXd g1_diag_;
  std::vector<std::size_t> group_of_;
  bool conformal_ = false;
  Eigen::VectorXd full_norm_;
  Eigen::MatrixXd s_;
};

namespace detail {
inline void require_adapted(const AdaptedSpectrum& adapted) {
  if (adapted.rotations.size() != adapted.spec.groups.size())
    throw Error(ErrorKind::InvalidArgument, "spectrum has not been adapted to the perturbation");
}
}  // namespace detail

inline Eigen::VectorXd first_order(const AdaptedSpectrum& adapted, const OperatorPair& base,
                                   const PerturbationOperators& ops, Eigen::Index truncation = -1) {
  detail::require_adapted(adapted);
  detail::check_compatible(adapted.spec, base, ops);
  const Eigen::Index n = detail::resolve_truncation(adapted.spec, truncation);
  return detail::diagonal_elements(base, ops.h1, adapted.spec.eigenvectors.leftCols(n));
}

inline Eigen::VectorXd first_order_vector(const AdaptedSpectrum& adapted, const OperatorPair& base,
                                          const PerturbationOperators& ops, Eigen::Index mode,
                                          Eigen::Index truncation = -1) {
  detail::require_adapted(adapted);
  return CorrectionEngine(adapted, base, ops, truncation).first_order_vector(mode);
}

inline Eigen::VectorXd second_order(const AdaptedSpectrum& adapted, const OperatorPair& base,
                                    const PerturbationOperators& ops, Eigen::Index truncation = -1) {
  detail::require_adapted(adapted);
  return CorrectionEngine(adapted, base, ops, truncation).second_order();
}

/// Adapts the basis and evaluates every correction in one pass.
inline CorrectionReport corrections(const SpectralData& spec, const OperatorPair& base, const PerturbationOperators& ops,
                                    Eigen::Index truncation = -1) {
  const AdaptedSpectrum adapted = adapt_degenerate_basis(spec, base, ops, truncation);
  return CorrectionEngine(adapted, base, ops, truncation).report();
}

struct QmCorrections {
  Eigen::VectorXd lambda1;
  Eigen::VectorXd lambda2;
};

/// Textbook corrections for an M0-symmetric H1 with fixed inner product:
/// lambda2_n = sum |<psi_i, H1 psi_n>|^2 / (lambda_n - lambda_i). Cross-checked
/// against the general engine run with G = 0 and H2 = 0.
inline QmCorrections qm_special_case(const SpectralData& spec, const OperatorPair& base, const SparseMatrix& h1) {
  const SparseMatrix mh = base.mass.asDiagonal() * h1;
  const SparseMatrix defect = mh - SparseMatrix(mh.transpose());
  const double ref = mh.norm();
  if (defect.norm() > 1e-10 * std::max(ref, std::numeric_limits<double>::min()))
    throw Error(ErrorKind::SymmetryViolation, "H1 is not symmetric with respect to M0 (relative defect " +
                                                  std::to_string(defect.norm() / ref) + ")");

  PerturbationOperators ops;
  ops.surface_id = base.surface_id;
  ops.h1 = NodalOperator::general(h1);
  ops.h2 = NodalOperator::zero(base.size());
  ops.g1 = Eigen::VectorXd::Zero(base.size());
  ops.g2 = Eigen::VectorXd::Zero(base.size());
  const AdaptedSpectrum adapted = adapt_degenerate_basis(spec, base, ops);
  const CorrectionEngine engine(adapted, base, ops);

  const Eigen::MatrixXd& a = engine.h1_elements();
  const Eigen::VectorXd& lambda = adapted.spec.eigenvalues;
  const auto ids = adapted.spec.group_ids();
  QmCorrections out;
  out.lambda1 = a.diagonal();
  out.lambda2 = Eigen::VectorXd::Zero(a.cols());
  const Eigen::VectorXd general = engine.second_order();
  for (Eigen::Index n = 0; n < a.cols(); ++n) {
    double magnitude = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      if (ids[static_cast<std::size_t>(i)] == ids[static_cast<std::size_t>(n)]) continue;
      const double term = a(i, n) * a(i, n) / (lambda[n] - lambda[i]);
      out.lambda2[n] += term;
      magnitude += std::abs(term);
    }
    if (std::abs(out.lambda2[n] - general[n]) > 1e-12 * (magnitude + std::abs(out.lambda2[n])) + 1e-300)
      throw Error(ErrorKind::NumericalBreakdown, "textbook and general second-order corrections disagree at mode " +
                                                     std::to_string(n));
  }
  return out;
}

}  // namespace isospec
