#pragma once

// JSON serialization of reports. Non-finite numbers are written as null.

#include <Eigen/Dense>
#include <json.hpp>

#include <cmath>
#include <vector>

#include "isospec/eigensolve.hpp"
#include "isospec/experiments.hpp"
#include "isospec/perturb.hpp"

namespace isospec {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

namespace detail {
inline Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json vector_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v[i]));
  return a;
}

inline Json vector_json(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

// row-major nested arrays
inline Json matrix_json(const Eigen::MatrixXd& m) {
  Json a = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(vector_json(Eigen::VectorXd(m.row(r).transpose())));
  return a;
}

inline Json groups_json(const Partition& groups) {
  Json a = Json::array();
  for (const auto& g : groups) a.push_back(Json(g));
  return a;
}
}  // namespace detail

inline Json to_json(const SpectralData& spec) {
  return {{"schema_version", kSchemaVersion},
          {"kind", "spectrum"},
          {"tol_deg", spec.tol_deg},
          {"eigenvalues", detail::vector_json(spec.eigenvalues)},
          {"groups", detail::groups_json(spec.groups)}};
}

inline Json to_json(const CorrectionReport& r) {
  Json rotations = Json::array();
  for (const auto& m : r.basis_rotations) rotations.push_back(detail::matrix_json(m));
  return {{"schema_version", kSchemaVersion},
          {"kind", "corrections"},
          {"tol_deg", r.tol_deg},
          {"truncation_modes", r.truncation_modes},
          {"lambda0", detail::vector_json(r.lambda0)},
          {"lambda1", detail::vector_json(r.lambda1)},
          {"lambda2", detail::vector_json(r.lambda2)},
          {"tail_estimate", detail::vector_json(r.tail_estimate)},
          {"truncation_warning", Json(r.truncation_warning)},
          {"groups", detail::groups_json(r.groups)},
          {"basis_rotations", rotations},
          {"psi1_coeffs", detail::matrix_json(r.psi1_coeffs.transpose())}};
}

inline Json to_json(const ObstructionReport& r) {
  return {{"schema_version", kSchemaVersion},
          {"kind", "obstruction"},
          {"n_modes", r.n_modes},
          {"field_dim", r.field_dim},
          {"kernel_dim", r.kernel_dim},
          {"kernel_tol", r.kernel_tol},
          {"kernel_threshold", r.kernel_threshold},
          {"gram_condition", detail::number(r.gram_condition)},
          {"singular_values", detail::vector_json(r.singular_values)}};
}

inline Json to_json(const InductionVerdict& v) {
  Json rows = Json::array();
  for (const auto& row : v.rows)
    rows.push_back({{"mode", row.mode},
                    {"row_max", detail::number(row.row_max)},
                    {"positive_part", detail::number(row.positive_part)},
                    {"negative_part", detail::number(row.negative_part)},
                    {"implied_bound", detail::number(row.implied_bound)},
                    {"consistency_defect", detail::number(row.consistency_defect)},
                    {"certified", row.certified}});
  return {{"schema_version", kSchemaVersion},
          {"kind", "induction"},
          {"pass", v.pass},
          {"consistent", v.consistent},
          {"message", v.message},
          {"rows", rows}};
}

inline Json to_json(const ConvexityProbeReport& r) {
  return {{"schema_version", kSchemaVersion},
          {"kind", "convexity"},
          {"tau_grid", detail::vector_json(r.tau_grid)},
          {"reference_spectrum", detail::vector_json(r.reference_spectrum)},
          {"spectral_distances", detail::vector_json(r.spectral_distances)},
          {"endpoints_isospectral_gap", detail::number(r.endpoints_isospectral_gap)},
          {"spectra", detail::matrix_json(r.spectra)}};
}

inline Json to_json(const MetricProbeReport& r) {
  Json steps = Json::array();
  for (const auto& s : r.steps)
    steps.push_back({{"t", s.t},
                     {"exact", detail::vector_json(s.exact)},
                     {"fd_first", detail::vector_json(s.fd_first)},
                     {"fd_second", detail::vector_json(s.fd_second)},
                     {"series_error", detail::vector_json(s.series_error)},
                     {"max_series_error", detail::number(s.max_series_error)}});
  return {{"schema_version", kSchemaVersion},
          {"kind", "metric_probe"},
          {"lambda0", detail::vector_json(r.lambda0)},
          {"lambda1", detail::vector_json(r.lambda1)},
          {"lambda2_generic", detail::vector_json(r.lambda2_generic)},
          {"lambda2_collapsed", detail::vector_json(r.lambda2_collapsed)},
          {"diagonal_elements", detail::vector_json(r.diagonal_elements)},
          {"identity_residual", detail::vector_json(r.identity_residual)},
          {"tail_estimate", detail::vector_json(r.tail_estimate)},
          {"series_tolerance", r.series_tolerance},
          {"largest_admissible_t", r.largest_admissible_t},
          {"steps", steps}};
}

}  // namespace isospec
