#pragma once

// Experiments on isospectral conformal deformations: the obstruction map of
// first-order matrix elements, the replay of the inductive elimination,
// convex-blend and metric-side probes, and the Weyl-law area estimate.

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include "isospec/assembly.hpp"
#include "isospec/eigensolve.hpp"
#include "isospec/error.hpp"
#include "isospec/perturb.hpp"
#include "isospec/surface.hpp"

namespace isospec {

// ---------------------------------------------------------------------------
// Branch tracking

/// Exact eigenvalues of `exact`, matched to the modes of an adapted reference
/// spectrum by greedy maximization of the squared overlaps
/// |psi_exact^T M_t psi_ref|^2. The matching window extends one group past
/// the last tracked group so branches that cross a nearby level are followed.
inline Eigen::VectorXd tracked_eigenvalues(const SpectralData& reference, const OperatorPair& exact, Eigen::Index n_track) {
  if (n_track < 1 || n_track > reference.mode_count())
    throw Error(ErrorKind::ModeCountMismatch, "cannot track " + std::to_string(n_track) + " modes");
  Eigen::Index window = n_track;
  bool extended = false;
  for (const auto& g : reference.groups) {
    if (g.front() < n_track) {
      window = std::max(window, g.back() + 1);
    } else if (!extended) {
      window = g.back() + 1;
      extended = true;
    }
  }
  const SpectralData solved = solve(exact, window, reference.tol_deg);
  const Eigen::MatrixXd overlap =
      (solved.eigenvectors.transpose() * exact.mass.asDiagonal() * reference.eigenvectors.leftCols(window)).cwiseAbs2();

  std::vector<Eigen::Index> order(static_cast<std::size_t>(overlap.size()));
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = static_cast<Eigen::Index>(k);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return overlap.data()[a] > overlap.data()[b]; });
  std::vector<bool> row_used(static_cast<std::size_t>(window), false), col_used(static_cast<std::size_t>(window), false);
  Eigen::VectorXd out(n_track);
  for (Eigen::Index k : order) {
    const Eigen::Index r = k % window;
    const Eigen::Index c = k / window;
    if (row_used[static_cast<std::size_t>(r)] || col_used[static_cast<std::size_t>(c)]) continue;
    row_used[static_cast<std::size_t>(r)] = true;
    col_used[static_cast<std::size_t>(c)] = true;
    if (c < n_track) out[c] = solved.eigenvalues[r];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Obstruction map

struct ObstructionReport {
  Eigen::Index n_modes = 0;
  Eigen::Index field_dim = 0;
  Eigen::VectorXd singular_values;  // descending
  Eigen::Index kernel_dim = 0;
  double kernel_tol = 0.0;
  double kernel_threshold = 0.0;  // absolute: kernel_tol / sqrt(area)
  double gram_condition = 0.0;
};

inline constexpr double kDefaultKernelTolerance = 1e-8;

/// Singular values of T: f -> (psi_i^T M0 diag(f) psi_j)_{i,j < n_modes} on the
/// span of `basis`, measured against the M0 norm of f. The kernel threshold
/// kernel_tol / sqrt(area) does not depend on n_modes, so adding modes can
/// only shrink the kernel.
inline ObstructionReport obstruction_map(const SpectralData& spec, const std::vector<ScalarField>& basis,
                                         Eigen::Index n_modes, double kernel_tol = kDefaultKernelTolerance) {
  if (basis.empty()) throw Error(ErrorKind::RankDeficientBasis, "empty field basis");
  if (n_modes < 1 || n_modes > spec.mode_count())
    throw Error(ErrorKind::ModeCountMismatch, "n_modes must lie in [1, " + std::to_string(spec.mode_count()) + "]");
  const Eigen::Index nodes = spec.eigenvectors.rows();
  const auto dim = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXd fields(nodes, dim);
  for (Eigen::Index d = 0; d < dim; ++d) {
    const ScalarField& f = basis[static_cast<std::size_t>(d)];
    if (f.surface_id() != spec.surface_id) throw Error(ErrorKind::SurfaceMismatch, "basis field on another surface");
    fields.col(d) = f.values();
  }

  const Eigen::MatrixXd gram = fields.transpose() * spec.mass.asDiagonal() * fields;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ges(gram, Eigen::EigenvaluesOnly);
  const double gmin = ges.eigenvalues().minCoeff();
  const double gmax = ges.eigenvalues().maxCoeff();
  const double cond = gmin > 0.0 ? gmax / gmin : std::numeric_limits<double>::infinity();
  if (!(cond <= 1e12))
    throw Error(ErrorKind::RankDeficientBasis, "field basis Gram matrix condition number " + std::to_string(cond));

  // M0-orthonormal basis of the same span.
  const Eigen::LLT<Eigen::MatrixXd> llt(gram);
  const Eigen::MatrixXd ortho = llt.matrixL().solve(fields.transpose()).transpose();

  const Eigen::MatrixXd psi = spec.eigenvectors.leftCols(n_modes);
  Eigen::MatrixXd t(n_modes * n_modes, dim);
  for (Eigen::Index d = 0; d < dim; ++d) {
    const Eigen::MatrixXd elems = psi.transpose() * spec.mass.cwiseProduct(ortho.col(d)).asDiagonal() * psi;
    t.col(d) = Eigen::Map<const Eigen::VectorXd>(elems.data(), elems.size());
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(t);

  ObstructionReport r;
  r.n_modes = n_modes;
  r.field_dim = dim;
  r.singular_values = svd.singularValues();
  r.kernel_tol = kernel_tol;
  r.kernel_threshold = kernel_tol / std::sqrt(spec.mass.sum());
  r.gram_condition = cond;
  // thin SVD returns min(rows, cols) values; missing ones are zero
  r.kernel_dim = dim - r.singular_values.size();
  for (Eigen::Index k = 0; k < r.singular_values.size(); ++k)
    if (r.singular_values[k] <= r.kernel_threshold) ++r.kernel_dim;
  return r;
}

// ---------------------------------------------------------------------------
// Inductive elimination replay

/// Data the elimination argument consumes, expressed with the field matrix
/// elements S(i, n) = <psi_i, f1 psi_n> of a conformal first-order operator
/// H1 = f1 Lap, for which <psi_i, H1 psi_n> = lambda_n S(i, n).
struct InductionInput {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd field_elements;  // S, symmetric
  Eigen::VectorXd h2_diagonal;     // <psi_n, H2 psi_n>
  Eigen::VectorXd lambda1;         // claimed first-order corrections
  Eigen::VectorXd lambda2;         // claimed second-order corrections
  Partition groups;
};

struct InductionRow {
  Eigen::Index mode = 0;
  double row_max = 0.0;         // max |S(i, n)| over i >= n, i >= 1 (diagonal and in-group included)
  double positive_part = 0.0;   // sum over lower certified rows
  double negative_part = 0.0;   // sum over higher modes, as magnitudes
  double implied_bound = 0.0;   // bound on |S(i, n)|, i > n, forced by the claimed lambda2_n
  double consistency_defect = 0.0;
  bool certified = false;
};

struct InductionVerdict {
  bool pass = false;
  bool consistent = true;
  std::vector<InductionRow> rows;
  std::string message;
};

/// Replays the elimination over the nonconstant modes, lowest first. At row n
/// the lower rows are already certified, so the second-order identity
///   lambda2_n = P_n - N_n + <psi_n, H2 psi_n>
/// with P_n >= 0 (lower modes) and N_n >= 0 (higher modes) bounds every
/// higher element of the row. A row is certified when the claimed lambda2_n
/// agrees with the identity and all its elements are below tol. The constant
/// mode is not constrained by the argument and is skipped.
inline InductionVerdict verify_induction(const InductionInput& in, double tol) {
  const Eigen::Index n_modes = in.eigenvalues.size();
  if (in.field_elements.rows() != n_modes || in.field_elements.cols() != n_modes || in.lambda1.size() != n_modes ||
      in.lambda2.size() != n_modes || in.h2_diagonal.size() != n_modes)
    throw Error(ErrorKind::ModeCountMismatch, "induction input sizes disagree");
  std::vector<std::size_t> group_of(static_cast<std::size_t>(n_modes), 0);
  for (std::size_t g = 0; g < in.groups.size(); ++g)
    for (Eigen::Index i : in.groups[g]) group_of[static_cast<std::size_t>(i)] = g;
  const auto& lam = in.eigenvalues;
  const auto& s = in.field_elements;

  InductionVerdict v;
  v.pass = true;
  for (Eigen::Index n = 1; n < n_modes; ++n) {
    InductionRow row;
    row.mode = n;
    const double ln = lam[n];
    for (Eigen::Index i = 1; i < n_modes; ++i) {
      const bool in_group = group_of[static_cast<std::size_t>(i)] == group_of[static_cast<std::size_t>(n)];
      if (i >= n || in_group) row.row_max = std::max(row.row_max, std::abs(s(i, n)));
      if (in_group) continue;
      const double term = lam[i] * ln * s(i, n) * s(i, n) / std::abs(ln - lam[i]);
      if (i < n) row.positive_part += term;
      else row.negative_part += term;
    }
    const double recomputed = row.positive_part - row.negative_part + in.h2_diagonal[n];
    const double scale = 1.0 + std::abs(ln);
    row.consistency_defect = std::abs(recomputed - in.lambda2[n]) + std::abs(in.lambda1[n] - ln * s(n, n));
    const bool consistent = row.consistency_defect <= tol * scale;
    const double forced = std::max(0.0, row.positive_part + in.h2_diagonal[n] - in.lambda2[n]);
    row.implied_bound = ln > 0.0 ? std::sqrt(forced / ln) : std::numeric_limits<double>::infinity();
    row.certified = consistent && row.row_max <= tol;
    v.consistent = v.consistent && consistent;
    v.pass = v.pass && row.certified;
    v.rows.push_back(row);
  }
  v.message = v.pass ? "all nonconstant rows certified"
                     : (v.consistent ? "matrix elements above tolerance" : "claimed corrections inconsistent with matrix elements");
  return v;
}

/// Computes corrections for a conformal inverse-metric perturbation and, if
/// the spectrum is stationary to second order, replays the elimination.
inline InductionVerdict induction_verifier(const SpectralData& spec, const OperatorPair& base,
                                           const PerturbationOperators& ops, double tol) {
  if (!ops.h1.is_conformal() || !ops.h2.is_conformal())
    throw Error(ErrorKind::NotApplicable, "elimination replay requires conformal H1 = f1 Lap");
  const AdaptedSpectrum adapted = adapt_degenerate_basis(spec, base, ops);
  const CorrectionEngine engine(adapted, base, ops);
  const Eigen::VectorXd l1 = engine.first_order();
  const Eigen::VectorXd l2 = engine.second_order();
  const Eigen::Index n = engine.truncation();
  for (Eigen::Index k = 0; k < n; ++k) {
    const double scale = 1.0 + std::abs(adapted.spec.eigenvalues[k]);
    if (std::abs(l1[k]) > tol * scale || std::abs(l2[k]) > tol * scale)
      throw Error(ErrorKind::NotApplicable, "perturbation is not isospectral to second order at mode " +
                                                std::to_string(k) + " (lambda1 = " + std::to_string(l1[k]) +
                                                ", lambda2 = " + std::to_string(l2[k]) + ")");
  }
  const Eigen::MatrixXd psi = adapted.spec.eigenvectors.leftCols(n);
  InductionInput in;
  in.eigenvalues = adapted.spec.eigenvalues.head(n);
  in.field_elements = psi.transpose() * adapted.spec.mass.cwiseProduct(*ops.h1.multiplier()).asDiagonal() * psi;
  in.h2_diagonal = detail::diagonal_elements(base, ops.h2, psi);
  in.lambda1 = l1;
  in.lambda2 = l2;
  in.groups = adapted.spec.groups;
  return verify_induction(in, tol);
}

// ---------------------------------------------------------------------------
// Convex blends of inverse metrics

struct ConvexityProbeReport {
  std::vector<double> tau_grid;
  Eigen::VectorXd reference_spectrum;      // tau = 0, i.e. inverse-metric factor c2
  Eigen::MatrixXd spectra;                 // row per tau
  std::vector<double> spectral_distances;  // max_k |lambda_k(tau) - lambda_k(0)| / lambda_k(0), k >= 1
  double endpoints_isospectral_gap = 0.0;  // same measure between tau = 1 and tau = 0
};

namespace detail {
inline double relative_spectral_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& ref) {
  double d = 0.0;
  for (Eigen::Index k = 1; k < ref.size(); ++k) d = std::max(d, std::abs(a[k] - ref[k]) / std::abs(ref[k]));
  return d;
}
}  // namespace detail

/// Sweeps the segment tau c1 + (1 - tau) c2 of inverse-metric factors.
inline ConvexityProbeReport convexity_probe(const OperatorPair& base, const ScalarField& c1, const ScalarField& c2,
                                            Eigen::Index n_modes, const std::vector<double>& tau_grid) {
  if (c1.surface_id() != base.surface_id || c2.surface_id() != base.surface_id)
    throw Error(ErrorKind::SurfaceMismatch, "conformal factors live on another surface");
  if (n_modes < 2) throw Error(ErrorKind::InvalidArgument, "convexity probe needs at least 2 modes");
  ConformalPerturbation::check_positive(c1.values(), "c1");
  ConformalPerturbation::check_positive(c2.values(), "c2");
  for (double tau : tau_grid)
    if (!(tau >= 0.0 && tau <= 1.0)) throw Error(ErrorKind::InvalidArgument, "tau outside [0, 1]");

  auto spectrum_at = [&](double tau) {
    const Eigen::VectorXd c = tau * c1.values() + (1.0 - tau) * c2.values();
    return solve_values(rescaled_pair(base, c), n_modes);
  };
  ConvexityProbeReport r;
  r.tau_grid = tau_grid;
  r.reference_spectrum = spectrum_at(0.0);
  r.spectra.resize(static_cast<Eigen::Index>(tau_grid.size()), n_modes);
  for (std::size_t k = 0; k < tau_grid.size(); ++k) {
    const Eigen::VectorXd s = tau_grid[k] == 0.0 ? r.reference_spectrum : spectrum_at(tau_grid[k]);
    r.spectra.row(static_cast<Eigen::Index>(k)) = s.transpose();
    r.spectral_distances.push_back(detail::relative_spectral_distance(s, r.reference_spectrum));
  }
  r.endpoints_isospectral_gap = detail::relative_spectral_distance(spectrum_at(1.0), r.reference_spectrum);
  return r;
}

inline ConvexityProbeReport convexity_probe(const DiscreteSurface& surface, const ScalarField& c1, const ScalarField& c2,
                                            Eigen::Index n_modes, const std::vector<double>& tau_grid) {
  return convexity_probe(assemble_base(surface), c1, c2, n_modes, tau_grid);
}

// ---------------------------------------------------------------------------
// Metric-side probe

struct MetricProbeStep {
  double t = 0.0;
  Eigen::VectorXd exact;          // tracked lambda(t)
  Eigen::VectorXd fd_first;       // (lambda(t) - lambda(-t)) / 2t
  Eigen::VectorXd fd_second;      // (lambda(t) - 2 lambda(0) + lambda(-t)) / t^2
  Eigen::VectorXd series_error;   // |lambda0 + t lambda1 + t^2 lambda2 - lambda(t)| / lambda0 (modes >= 1)
  double max_series_error = 0.0;
};

struct MetricProbeReport {
  Eigen::VectorXd lambda0;
  Eigen::VectorXd lambda1;
  Eigen::VectorXd lambda2_generic;
  Eigen::VectorXd lambda2_collapsed;   // sum_{i outside group} lambda_n^2 S_in^2 / (lambda_n - lambda_i)
  Eigen::VectorXd diagonal_elements;   // S_nn = <psi_n, f psi_n>
  Eigen::VectorXd identity_residual;   // <psi_n, f^2 psi_n> - sum_{i != n} S_in^2
  Eigen::VectorXd tail_estimate;
  std::vector<MetricProbeStep> steps;
  double series_tolerance = 0.0;
  double largest_admissible_t = 0.0;   // largest |t| in the grid with max_series_error <= series_tolerance
};

inline constexpr double kDefaultSeriesTolerance = 1e-6;

/// Second-order analysis of g = g0 (1 + t f): generic corrections, the
/// collapsed form of lambda2, and finite differences of exact solves.
/// `spec` must hold the modes the sums run over; the first n_modes are reported.
inline MetricProbeReport metric_side_probe(const OperatorPair& base, const SpectralData& spec, const ScalarField& f,
                                           Eigen::Index n_modes, const std::vector<double>& t_grid,
                                           double series_tolerance = kDefaultSeriesTolerance) {
  if (n_modes < 1 || n_modes > spec.mode_count())
    throw Error(ErrorKind::ModeCountMismatch, "n_modes outside the computed spectrum");
  const ConformalPerturbation pert(PerturbationSide::Metric, f);
  for (double t : t_grid) {
    ConformalPerturbation::check_positive(Eigen::VectorXd::Ones(f.values().size()) + t * f.values(), "1 + t f");
    ConformalPerturbation::check_positive(Eigen::VectorXd::Ones(f.values().size()) - t * f.values(), "1 - t f");
  }
  const PerturbationOperators ops = conformal_operators(base, pert);
  const AdaptedSpectrum adapted = adapt_degenerate_basis(spec, base, ops);
  const CorrectionEngine engine(adapted, base, ops);
  const Eigen::Index n_sum = engine.truncation();

  MetricProbeReport r;
  r.series_tolerance = series_tolerance;
  r.lambda0 = adapted.spec.eigenvalues.head(n_modes);
  r.lambda1 = engine.first_order().head(n_modes);
  r.lambda2_generic = engine.second_order().head(n_modes);
  r.tail_estimate = engine.tail_estimate().head(n_modes);

  const Eigen::MatrixXd psi = adapted.spec.eigenvectors.leftCols(n_sum);
  const Eigen::MatrixXd s = psi.transpose() * adapted.spec.mass.cwiseProduct(f.values()).asDiagonal() * psi;
  const Eigen::VectorXd f2 = f.values().cwiseProduct(f.values());
  const auto ids = adapted.spec.group_ids();
  r.lambda2_collapsed.resize(n_modes);
  r.diagonal_elements.resize(n_modes);
  r.identity_residual.resize(n_modes);
  for (Eigen::Index n = 0; n < n_modes; ++n) {
    const double ln = r.lambda0[n];
    double collapsed = 0.0;
    double off = 0.0;
    for (Eigen::Index i = 0; i < n_sum; ++i) {
      if (i != n) off += s(i, n) * s(i, n);
      if (ids[static_cast<std::size_t>(i)] == ids[static_cast<std::size_t>(n)]) continue;
      collapsed += ln * ln * s(i, n) * s(i, n) / (ln - adapted.spec.eigenvalues[i]);
    }
    r.lambda2_collapsed[n] = collapsed;
    r.diagonal_elements[n] = s(n, n);
    r.identity_residual[n] = psi.col(n).dot(adapted.spec.mass.cwiseProduct(f2).cwiseProduct(psi.col(n))) - off;
  }

  for (double t : t_grid) {
    if (t <= 0.0) continue;
    MetricProbeStep step;
    step.t = t;
    const Eigen::VectorXd plus = tracked_eigenvalues(adapted.spec, exact_perturbed_pair(base, pert, t), n_modes);
    const Eigen::VectorXd minus = tracked_eigenvalues(adapted.spec, exact_perturbed_pair(base, pert, -t), n_modes);
    step.exact = plus;
    step.fd_first = (plus - minus) / (2.0 * t);
    step.fd_second = (plus - 2.0 * r.lambda0 + minus) / (t * t);
    step.series_error = Eigen::VectorXd::Zero(n_modes);
    for (Eigen::Index n = 1; n < n_modes; ++n) {
      const double pred = r.lambda0[n] + t * r.lambda1[n] + t * t * r.lambda2_generic[n];
      step.series_error[n] = std::abs(pred - plus[n]) / r.lambda0[n];
    }
    step.max_series_error = step.series_error.maxCoeff();
    if (step.max_series_error <= series_tolerance) r.largest_admissible_t = std::max(r.largest_admissible_t, t);
    r.steps.push_back(std::move(step));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Weyl law

inline constexpr Eigen::Index kMinWeylModes = 50;

/// Area A from a least-squares fit of N(lambda) ~ A lambda / (4 pi) through the
/// origin. N is the midpoint of the counting function's jump at each level.
/// When the spectrum is a truncated prefix (`complete` false) the top level is
/// dropped because its multiplicity may be cut.
inline double weyl_volume_estimate(const Eigen::VectorXd& eigenvalues, double tol_deg = kDefaultDegeneracyTolerance,
                                   bool complete = false) {
  if (eigenvalues.size() < kMinWeylModes)
    throw Error(ErrorKind::InsufficientModes, "Weyl fit needs at least " + std::to_string(kMinWeylModes) + " modes, got " +
                                                  std::to_string(eigenvalues.size()));
  Partition levels = degeneracy_partition(eigenvalues, tol_deg);
  if (!complete && levels.size() > 1) levels.pop_back();
  double num = 0.0, den = 0.0;
  for (const auto& level : levels) {
    const double below = static_cast<double>(level.front());
    const double mid = below + 0.5 * static_cast<double>(level.size());
    for (Eigen::Index i : level) {
      num += mid * eigenvalues[i];
      den += eigenvalues[i] * eigenvalues[i];
    }
  }
  if (!(den > 0.0)) throw Error(ErrorKind::InsufficientModes, "spectrum has no positive eigenvalues");
  return 4.0 * std::numbers::pi * num / den;
}

inline double weyl_volume_estimate(const SpectralData& spec) {
  return weyl_volume_estimate(spec.eigenvalues, spec.tol_deg, spec.mode_count() == spec.eigenvectors.rows());
}

// ---------------------------------------------------------------------------
// CSV

inline void write_sweep_csv(std::ostream& out, const std::vector<double>& params, const Eigen::MatrixXd& spectra,
                            const Eigen::VectorXd& reference) {
  out << "# schema_version: 1\n";
  out << "tau_or_t,mode,eigenvalue,deviation\n";
  out.precision(17);
  for (std::size_t p = 0; p < params.size(); ++p)
    for (Eigen::Index k = 0; k < spectra.cols(); ++k) {
      const double v = spectra(static_cast<Eigen::Index>(p), k);
      const double dev = k == 0 ? std::abs(v - reference[k]) : std::abs(v - reference[k]) / std::abs(reference[k]);
      out << params[p] << ',' << k << ',' << v << ',' << dev << '\n';
    }
}

}  // namespace isospec
