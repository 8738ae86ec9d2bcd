// Lowest eigenvalues of the flat torus and their second-order shift under a
// conformal change of the inverse metric.

#include <cstdio>

#include "isospec/isospec.hpp"

int main() {
  using namespace isospec;
  const DiscreteSurface torus = make_torus(24, 24, 1.0, 1.0);
  const OperatorPair base = assemble_base(torus);
  const SpectralData spec = solve(base, base.size());

  const ScalarField f1 = field_from_expression(torus, "cos(2*pi*x)*cos(2*pi*y)");
  const ConformalPerturbation pert(PerturbationSide::InverseMetric, f1);
  const CorrectionReport r = corrections(spec, base, conformal_operators(base, pert));

  const double t = 0.05;
  const Eigen::VectorXd exact = solve_values(exact_perturbed_pair(base, pert, t), 10);
  std::printf("%4s %14s %14s %14s %14s\n", "n", "lambda0", "lambda1", "lambda2", "exact(t=0.05)");
  for (Eigen::Index n = 0; n < 10; ++n)
    std::printf("%4td %14.6f %14.6f %14.6f %14.6f\n", n, r.lambda0[n], r.lambda1[n], r.lambda2[n], exact[n]);
  return 0;
}
