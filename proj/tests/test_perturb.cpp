#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "isospec/expression.hpp"
#include "isospec/perturb.hpp"
#include "oracles.hpp"

using namespace isospec;

namespace {

struct Case {
  DiscreteSurface surface;
  OperatorPair base;
  SpectralData spec;
};

Case torus_setup(int n, Eigen::Index modes) {
  DiscreteSurface s = make_torus(n, n, 1.0, 1.0);
  OperatorPair p = assemble_base(s);
  SpectralData spec = solve(p, modes);
  return {std::move(s), std::move(p), std::move(spec)};
}

ConformalPerturbation inverse(const DiscreteSurface& s, const std::string& f1, const std::string& f2 = "") {
  if (f2.empty()) return ConformalPerturbation(PerturbationSide::InverseMetric, field_from_expression(s, f1));
  return ConformalPerturbation(PerturbationSide::InverseMetric, field_from_expression(s, f1),
                               field_from_expression(s, f2));
}

// Largest gap between the sorted exact spectrum of (K, M0/c(t)) and the sorted
// second-order prediction, over the first `count` modes.
double sorted_series_gap(const Case& st, const ConformalPerturbation& pert, const CorrectionReport& r, double t,
                         Eigen::Index count) {
  const Eigen::MatrixXd k = Eigen::MatrixXd(st.base.stiffness);
  const Eigen::VectorXd m = exact_perturbed_pair(st.base, pert, t).mass;
  const Eigen::VectorXd d = m.cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd a = d.asDiagonal() * k * d.asDiagonal();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (a + a.transpose()), Eigen::EigenvaluesOnly);
  std::vector<double> pred(static_cast<std::size_t>(count));
  for (Eigen::Index n = 0; n < count; ++n)
    pred[static_cast<std::size_t>(n)] = r.lambda0[n] + t * r.lambda1[n] + t * t * r.lambda2[n];
  std::sort(pred.begin(), pred.end());
  double gap = 0.0;
  for (Eigen::Index n = 0; n < count; ++n) gap = std::max(gap, std::abs(es.eigenvalues()[n] - pred[static_cast<std::size_t>(n)]));
  return gap;
}

}  // namespace

TEST(Corrections, ZeroFieldGivesZeroCorrections) {
  const Case st = torus_setup(8, 64);
  const auto ops = conformal_operators(st.base, inverse(st.surface, "0"));
  const CorrectionReport r = corrections(st.spec, st.base, ops);
  EXPECT_TRUE(r.lambda1.isZero(0.0));
  EXPECT_TRUE(r.lambda2.isZero(0.0));
  EXPECT_TRUE(r.psi1_coeffs.isZero(0.0));
  EXPECT_EQ(r.truncation_modes, 64);
  EXPECT_EQ(r.lambda0, st.spec.eigenvalues);
}

TEST(Corrections, ConstantScalingIsExact) {
  // c = 1 + 2t scales every eigenvalue by exactly 1 + 2t
  const Case st = torus_setup(8, 64);
  const auto ops = conformal_operators(st.base, inverse(st.surface, "2"));
  const CorrectionReport r = corrections(st.spec, st.base, ops);
  EXPECT_LE((r.lambda1 - 2.0 * st.spec.eigenvalues).cwiseAbs().maxCoeff(), 1e-10 * st.spec.eigenvalues.maxCoeff());
  EXPECT_LE(r.lambda2.cwiseAbs().maxCoeff(), 1e-9 * st.spec.eigenvalues.maxCoeff());
}

TEST(Corrections, ScalingCovariance) {
  const Case st = torus_setup(10, 100);
  const std::string f1 = "0.3*cos(2*pi*x)*cos(2*pi*y) + 0.1*sin(2*pi*x)";
  const std::string f2 = "0.2*cos(4*pi*y)";
  const CorrectionReport base_r = corrections(st.spec, st.base, conformal_operators(st.base, inverse(st.surface, f1, f2)));
  for (double s : {2.0, -1.0}) {
    const std::string sf1 = "(" + std::to_string(s) + ")*(" + f1 + ")";
    const std::string sf2 = "(" + std::to_string(s * s) + ")*(" + f2 + ")";
    const CorrectionReport r = corrections(st.spec, st.base, conformal_operators(st.base, inverse(st.surface, sf1, sf2)));
    // adapted bases may differ in order inside a group, so compare sorted group by group
    for (const auto& g : st.spec.groups) {
      std::vector<double> a1, b1, a2, b2;
      for (Eigen::Index i : g) {
        a1.push_back(r.lambda1[i]);
        b1.push_back(s * base_r.lambda1[i]);
        a2.push_back(r.lambda2[i]);
        b2.push_back(s * s * base_r.lambda2[i]);
      }
      std::sort(a1.begin(), a1.end());
      std::sort(b1.begin(), b1.end());
      for (std::size_t k = 0; k < a1.size(); ++k) EXPECT_NEAR(a1[k], b1[k], 1e-9 * (1.0 + std::abs(b1[k])));
      if (g.size() == 1) {
        EXPECT_NEAR(a2[0], b2[0], 1e-9 * (1.0 + std::abs(b2[0])));
      } else {
        std::sort(a2.begin(), a2.end());
        std::sort(b2.begin(), b2.end());
        double sa = 0, sb = 0;
        for (std::size_t k = 0; k < a2.size(); ++k) sa += a2[k], sb += b2[k];
        EXPECT_NEAR(sa, sb, 1e-8 * (1.0 + std::abs(sb)));
      }
    }
  }
}

TEST(Corrections, FirstOrderVectorSolvesFirstOrderEquation) {
  const Case st = torus_setup(8, 64);
  const auto pert = inverse(st.surface, "0.4*cos(2*pi*x)*cos(2*pi*y) + 0.2*sin(2*pi*y)", "0.1*cos(2*pi*x)");
  const auto ops = conformal_operators(st.base, pert);
  const AdaptedSpectrum ad = adapt_degenerate_basis(st.spec, st.base, ops);
  EXPECT_LE(ad.max_offdiagonal, 1e-10);
  const CorrectionEngine engine(ad, st.base, ops);
  const Eigen::MatrixXd& psi = ad.spec.eigenvectors;
  for (Eigen::Index n = 0; n < 20; ++n) {
    const Eigen::VectorXd c = engine.first_order_vector(n);
    const Eigen::VectorXd psi1 = psi * c;
    const double l0 = ad.spec.eigenvalues[n], l1 = engine.first_order()[n];
    const Eigen::VectorXd h1psi = ops.h1.apply(st.base, psi.col(n));
    // (Lap - l0) psi1 + (H1 - l1) psi0 = 0
    const Eigen::VectorXd res = st.base.laplacian(psi1) - l0 * psi1 + h1psi - l1 * psi.col(n);
    const double scale = std::sqrt(st.base.inner(h1psi, h1psi)) + 1.0;
    EXPECT_LE(std::sqrt(st.base.inner(res, res)) / scale, 1e-8) << "mode " << n;
    // normalization: 2 <psi0, psi1> + <psi0, G1 psi0> = 0
    const double g = psi.col(n).dot(st.base.mass.cwiseProduct(ops.g1.cwiseProduct(psi.col(n))));
    EXPECT_NEAR(2.0 * st.base.inner(psi.col(n), psi1) + g, 0.0, 1e-12);
  }
}

TEST(Corrections, AdaptedRotationsAreOrthogonal) {
  const Case st = torus_setup(8, 64);
  const auto ops = conformal_operators(st.base, inverse(st.surface, "0.3*cos(2*pi*(x+y))"));
  const AdaptedSpectrum ad = adapt_degenerate_basis(st.spec, st.base, ops);
  ASSERT_EQ(ad.rotations.size(), st.spec.groups.size());
  for (const auto& r : ad.rotations)
    EXPECT_LE((r.transpose() * r - Eigen::MatrixXd::Identity(r.rows(), r.cols())).cwiseAbs().maxCoeff(), 1e-12);
  const SpectralDefects d = spectral_defects(st.base, ad.spec);
  EXPECT_LE(d.orthonormality, 1e-10);
  EXPECT_LE(d.residual, 1e-9);
}

TEST(Corrections, SecondOrderAgainstExactSpectrum32) {
  const Case st = torus_setup(32, 1024);
  const auto pert = inverse(st.surface, "0.5*cos(2*pi*x)*cos(2*pi*y) + 0.25*sin(2*pi*y)", "0.2*cos(2*pi*x)");
  const CorrectionReport r = corrections(st.spec, st.base, conformal_operators(st.base, pert));
  // 13 modes = the first four complete groups, covering modes 0..9
  double prev = 0.0;
  for (double t : {2e-2, 1e-2}) {
    const double gap = std::max(sorted_series_gap(st, pert, r, t, 13), sorted_series_gap(st, pert, r, -t, 13));
    EXPECT_LE(gap, 0.05 * t * t * r.lambda2.head(13).cwiseAbs().maxCoeff()) << "t=" << t;
    if (prev > 0.0) {
      EXPECT_GE(prev / gap, 6.0);
    }
    prev = gap;
  }
}

TEST(Corrections, SecondStageAdaptationWhenFirstOrderVanishes) {
  // cos(6 pi x) couples no pair inside the low groups, so lambda1 = 0 there
  const Case st = torus_setup(16, 256);
  const auto pert = inverse(st.surface, "0.5*cos(6*pi*x)");
  const CorrectionReport r = corrections(st.spec, st.base, conformal_operators(st.base, pert));
  EXPECT_LE(r.lambda1.head(9).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_GT(r.lambda2.head(9).cwiseAbs().maxCoeff(), 0.1);
  double prev = 0.0;
  for (double t : {2e-2, 1e-2}) {
    const double gap = std::max(sorted_series_gap(st, pert, r, t, 9), sorted_series_gap(st, pert, r, -t, 9));
    EXPECT_LE(gap, 0.05 * t * t * r.lambda2.head(9).cwiseAbs().maxCoeff());
    if (prev > 0.0) {
      EXPECT_GE(prev / gap, 6.0);
    }
    prev = gap;
  }
}

TEST(Corrections, EigenvaluesIgnoreG) {
  const Case st = torus_setup(8, 64);
  auto ops = conformal_operators(st.base, inverse(st.surface, "0.3*cos(2*pi*x)*cos(2*pi*y)", "0.1*sin(2*pi*x)"));
  const CorrectionReport a = corrections(st.spec, st.base, ops);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  for (Eigen::Index i = 0; i < 64; ++i) {
    ops.g1[i] = g(rng);
    ops.g2[i] = g(rng);
  }
  const CorrectionReport b = corrections(st.spec, st.base, ops);
  EXPECT_EQ(a.lambda1, b.lambda1);
  EXPECT_EQ(a.lambda2, b.lambda2);
  EXPECT_NE(a.psi1_coeffs, b.psi1_coeffs);
}

TEST(Corrections, TruncationAndTail) {
  const Case st = torus_setup(12, 144);
  const auto ops = conformal_operators(st.base, inverse(st.surface, "0.3*cos(2*pi*x)*cos(2*pi*y)"));
  const CorrectionReport full = corrections(st.spec, st.base, ops);
  EXPECT_TRUE(full.tail_estimate.isZero(0.0));
  const CorrectionReport part = corrections(st.spec, st.base, ops, 41);
  EXPECT_EQ(part.truncation_modes, 41);
  EXPECT_EQ(part.lambda2.size(), 41);
  for (Eigen::Index n = 0; n < 41; ++n) EXPECT_GE(part.tail_estimate[n], 0.0);
  // the estimate bounds what the truncation dropped; group sums are basis independent
  for (const auto& g : st.spec.groups) {
    if (g.back() >= 21) break;
    double dropped = 0.0, bound = 0.0;
    for (Eigen::Index i : g) {
      dropped += full.lambda2[i] - part.lambda2[i];
      bound += part.tail_estimate[i];
    }
    EXPECT_GE(bound + 1e-9, std::abs(dropped)) << "group at " << g.front();
  }
  for (Eigen::Index bad : {Eigen::Index{0}, Eigen::Index{145}}) {
    try {
      corrections(st.spec, st.base, ops, bad);
      ADD_FAILURE();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::ModeCountMismatch);
    }
  }
  const AdaptedSpectrum ad = adapt_degenerate_basis(st.spec, st.base, ops, 41);
  EXPECT_THROW(CorrectionEngine(ad, st.base, ops, 41).first_order_vector(41), Error);
}

TEST(Corrections, NonConformalTailIsNaN) {
  const OperatorPair p = oracle::random_graph_pair(8, 4);
  const SpectralData spec = solve(p, 8);
  PerturbationOperators ops;
  ops.h1 = NodalOperator::general(Eigen::MatrixXd(p.mass.cwiseInverse().asDiagonal()).sparseView());
  ops.h2 = NodalOperator::zero(8);
  ops.g1 = ops.g2 = Eigen::VectorXd::Zero(8);
  EXPECT_TRUE(std::isnan(corrections(spec, p, ops, 5).tail_estimate[0]));
}

TEST(Corrections, SurfaceMismatchAndDivisionGuard) {
  const Case a = torus_setup(6, 36);
  const DiscreteSurface other = make_torus(6, 6, 1.0, 1.0);
  const auto ops = conformal_operators(assemble_base(other), inverse(other, "0.1*cos(2*pi*x)"));
  try {
    corrections(a.spec, a.base, ops);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SurfaceMismatch);
  }

  // a degenerate pair split into singleton groups by hand
  SpectralData split = a.spec;
  split.groups.clear();
  for (Eigen::Index i = 0; i < split.mode_count(); ++i) split.groups.push_back({i});
  const auto own = conformal_operators(a.base, inverse(a.surface, "0.1*cos(2*pi*x)"));
  try {
    corrections(split, a.base, own);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DivisionGuard);
  }
}

TEST(QmSpecialCase, RandomSymmetricOperatorByCharacteristicRoots) {
  const int n = 10;
  const OperatorPair p = oracle::random_graph_pair(n, 21);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd b(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) b(i, j) = b(j, i) = u(rng);
  const SparseMatrix h1 = (p.mass.cwiseInverse().asDiagonal() * b).sparseView();
  const SpectralData spec = solve(p, n);
  const QmCorrections qm = qm_special_case(spec, p, h1);

  const Eigen::MatrixXd k = Eigen::MatrixXd(p.stiffness);
  double hi = 0.0;
  for (int i = 0; i < n; ++i) hi = std::max(hi, 2.0 * (k(i, i) + b.row(i).cwiseAbs().sum()) / p.mass[i]);
  auto roots = [&](double t) { return oracle::characteristic_roots(k + t * b, p.mass, -hi, hi + 1.0, 400000); };

  const double h1s = 1e-4, h2s = 1e-3;
  const auto r0 = roots(0.0), rp1 = roots(h1s), rm1 = roots(-h1s), rp2 = roots(h2s), rm2 = roots(-h2s);
  ASSERT_EQ(r0.size(), static_cast<std::size_t>(n));
  ASSERT_EQ(rp1.size(), r0.size());
  ASSERT_EQ(rm1.size(), r0.size());
  ASSERT_EQ(rp2.size(), r0.size());
  ASSERT_EQ(rm2.size(), r0.size());
  for (std::size_t m = 0; m < r0.size(); ++m) {
    const auto mi = static_cast<Eigen::Index>(m);
    EXPECT_NEAR(spec.eigenvalues[mi], r0[m], 1e-9 * (1.0 + r0[m]));
    const double fd1 = (rp1[m] - rm1[m]) / (2.0 * h1s);
    const double fd2 = (rp2[m] - 2.0 * r0[m] + rm2[m]) / (2.0 * h2s * h2s);
    EXPECT_NEAR(qm.lambda1[mi], fd1, 1e-6 * (1.0 + std::abs(fd1))) << m;
    EXPECT_NEAR(qm.lambda2[mi], fd2, 1e-3 * (1.0 + std::abs(fd2))) << m;
  }
}

TEST(QmSpecialCase, RejectsNonSymmetricOperator) {
  const OperatorPair p = oracle::random_graph_pair(6, 2);
  const SpectralData spec = solve(p, 6);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(6, 6);
  b(0, 1) = 1.0;
  try {
    qm_special_case(spec, p, b.sparseView());
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SymmetryViolation);
  }
}
