#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "isospec/expression.hpp"
#include "oracles.hpp"

using namespace isospec;

namespace {
double eval(const std::string& text, double x = 0.0, double y = 0.0, double z = 0.0) {
  Expression::Variables v;
  v.x = x;
  v.y = y;
  v.z = z;
  return Expression::parse(text).evaluate(v);
}
}  // namespace

TEST(Expression, Arithmetic) {
  EXPECT_DOUBLE_EQ(eval("1 + 2*3"), 7.0);
  EXPECT_DOUBLE_EQ(eval("(1 + 2)*3"), 9.0);
  EXPECT_DOUBLE_EQ(eval("2^3^2"), 512.0);
  EXPECT_DOUBLE_EQ(eval("-2^2"), -4.0);
  EXPECT_DOUBLE_EQ(eval("8 / 4 / 2"), 1.0);
  EXPECT_DOUBLE_EQ(eval("1e-3 * 2"), 2e-3);
  EXPECT_DOUBLE_EQ(eval("x*y - z", 2.0, 3.0, 1.0), 5.0);
  EXPECT_DOUBLE_EQ(eval("pow(x, 3)", 2.0), 8.0);
  EXPECT_DOUBLE_EQ(eval("sin(pi/2) + cos(0)"), 2.0);
}

TEST(Expression, UnsupportedInput) {
  for (const char* bad : {"bessel(x)", "exp(x)", "1 +", "(1", "x y", "pow(x)", "w", "", "1 ** 2"}) {
    try {
      Expression::parse(bad);
      ADD_FAILURE() << "accepted '" << bad << "'";
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::UnsupportedExpression) << bad;
    }
  }
}

TEST(FieldFromExpression, ConstantOnTorus) {
  const DiscreteSurface s = make_torus(8, 8, 1.0, 1.0);
  const ScalarField f = field_from_expression(s, "1");
  EXPECT_EQ(f.size(), 64u);
  EXPECT_EQ(f.values(), Eigen::VectorXd::Ones(64));
  EXPECT_EQ(f.surface_id(), s.id());
}

TEST(FieldFromExpression, PeriodicCosine) {
  const DiscreteSurface s = make_torus(8, 6, 2.0, 3.0);
  const ScalarField f = field_from_expression(s, "cos(2*pi*x/Lx) + sin(2*pi*y/Ly)");
  for (std::size_t node = 0; node < s.node_count(); ++node) {
    const double i = static_cast<double>(node % 8), j = static_cast<double>(node / 8);
    const double expected = std::cos(2.0 * std::numbers::pi * i / 8.0) + std::sin(2.0 * std::numbers::pi * j / 6.0);
    EXPECT_NEAR(f.values()[static_cast<Eigen::Index>(node)], expected, 1e-14);
  }
}

TEST(FieldFromExpression, MeshUsesVertexCoordinates) {
  std::istringstream in(oracle::octahedron_off());
  const DiscreteSurface s = parse_off(in);
  const ScalarField f = field_from_expression(s, "x + 2*y + 3*z");
  EXPECT_EQ(f.values(), (Eigen::VectorXd(6) << 1, -1, 2, -2, 3, -3).finished());
  EXPECT_THROW(field_from_expression(s, "x/Lx"), Error);
}
