#include "fracdg/mesh.hpp"
#include "fracdg/quadrature.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace fracdg;

namespace {

constexpr double pi = std::numbers::pi;

// Orthonormal basis evaluated straight from the Legendre polynomials.
double basis(const Mesh& mesh, int j, int m, double x) {
  const double s = (x - mesh.node(j)) / mesh.h();
  if (s < 0.0 || s > 1.0) return 0.0;
  return std::sqrt((2.0 * m + 1.0) / mesh.h()) * std::legendre(m, 2.0 * s - 1.0);
}

DGFunction random_function(const Mesh& mesh, int k, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  DGFunction f(mesh, k);
  for (double& c : f.coefficients()) c = d(rng);
  return f;
}

}  // namespace

TEST(Mesh, CellSizeFromLength) {
  EXPECT_NEAR(Mesh(2.0 * pi, 4, 1).h(), pi / 2.0, 1e-15);
  EXPECT_NEAR(Mesh(1.0, 10, 2).h(), 0.1, 1e-15);
}

TEST(Mesh, RejectsBadArguments) {
  EXPECT_THROW(Mesh(0.0, 4, 1), InvalidArgument);
  EXPECT_THROW(Mesh(1.0, 1, 1), InvalidArgument);
  EXPECT_THROW(Mesh(1.0, 4, 0), InvalidArgument);
}

TEST(Mesh, QuadratureExactForProductsOfBasisPolynomials) {
  const Mesh mesh(1.0, 10, 2);
  const QuadratureRule& q = mesh.quadrature();
  for (int p = 0; p <= 6; ++p) {
    const double got = q.integrate([p](double s) { return std::pow(s, p); });
    EXPECT_NEAR(got, 1.0 / (p + 1), 1e-15) << "degree " << p;
  }
}

TEST(Mesh, CellIntegralsTileTheTorus) {
  const Mesh mesh(2.0 * pi, 64, 3);
  const DGFunction one = l2_project([](double) { return 1.0; }, mesh, 3);
  EXPECT_NEAR(total_mass(one), 2.0 * pi, 2.0 * pi * 1e-13);
}

TEST(Mesh, LocateWrapsPeriodically) {
  const Mesh mesh(1.0, 8, 1);
  int j = -1;
  double s = -1.0;
  mesh.locate(1.0 + 0.0625, j, s);
  EXPECT_EQ(j, 0);
  EXPECT_NEAR(s, 0.5, 1e-12);
  mesh.locate(-0.0625, j, s);
  EXPECT_EQ(j, 7);
  EXPECT_NEAR(s, 0.5, 1e-12);
}

TEST(QuadratureRule, GaussJacobiIntegratesWeightedMonomials) {
  // int_0^1 u^alpha u^p du = 1 / (alpha + p + 1)
  for (double alpha : {-0.5, -0.3, 0.5}) {
    const QuadratureRule r = gauss_jacobi_left(8, alpha);
    for (int p = 0; p < 16; ++p) {
      double s = 0.0;
      for (std::size_t i = 0; i < r.size(); ++i) s += r.weights[i] * std::pow(r.nodes[i], p);
      EXPECT_NEAR(s, 1.0 / (alpha + p + 1.0), 1e-13) << alpha << " " << p;
    }
  }
}

TEST(Basis, GramMatrixIsIdentity) {
  const Mesh mesh(3.0, 5, 4);
  const QuadratureRule& q = gauss_legendre(8);
  for (int m = 0; m <= 4; ++m) {
    for (int n = 0; n <= 4; ++n) {
      double g = 0.0;
      for (std::size_t i = 0; i < q.size(); ++i) {
        const double x = mesh.point(2, q.nodes[i]);
        g += q.weights[i] * mesh.h() * basis(mesh, 2, m, x) * basis(mesh, 2, n, x);
      }
      EXPECT_NEAR(g, m == n ? 1.0 : 0.0, 1e-13);
    }
  }
}

TEST(DGFunction, ConstantEvaluatesEverywhere) {
  const Mesh mesh(2.0 * pi, 16, 2);
  const DGFunction c = l2_project([](double) { return 3.25; }, mesh, 2);
  for (double x : {0.0, 0.3, 1.7, 6.0}) EXPECT_NEAR(evaluate(c, x), 3.25, 1e-13);
  for (int j = 0; j < mesh.cells(); ++j) {
    EXPECT_NEAR(trace(c, j, Side::minus), 3.25, 1e-13);
    EXPECT_NEAR(trace(c, j, Side::plus), 3.25, 1e-13);
    EXPECT_NEAR(jump(c, j), 0.0, 1e-13);
  }
}

TEST(DGFunction, ProjectionOfLinearHitsMidpoint) {
  const Mesh mesh(1.0, 4, 1);
  const DGFunction p = l2_project([](double x) { return x; }, mesh, 1);
  for (int j = 0; j < 4; ++j) EXPECT_NEAR(p.cell_value(j, 0.5), mesh.point(j, 0.5), 1e-14);
}

TEST(DGFunction, SineProjectionPointwiseError) {
  const Mesh mesh(2.0 * pi, 64, 2);
  const DGFunction p = l2_project([](double x) { return std::sin(x); }, mesh, 2);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double x = 2.0 * pi * (i + 0.37) / 1000.0;
    worst = std::max(worst, std::abs(evaluate(p, x) - std::sin(x)));
  }
  const double h = mesh.h();
  EXPECT_LT(worst, 0.1 * h * h * h);
}

TEST(DGFunction, IndicatorTraces) {
  const Mesh mesh(1.0, 4, 1);
  DGFunction f(mesh, 1);
  // value 1 on I_0: only the constant mode, scaled by sqrt(h)
  f.coefficients()[0] = std::sqrt(mesh.h());
  EXPECT_NEAR(trace(f, 1, Side::minus), 1.0, 1e-14);
  EXPECT_NEAR(trace(f, 1, Side::plus), 0.0, 1e-14);
  EXPECT_NEAR(jump(f, 1), -1.0, 1e-14);
}

TEST(DGFunction, JumpMatchesDirectEndpointEvaluation) {
  const Mesh mesh(2.5, 7, 3);
  const DGFunction f = random_function(mesh, 3, 4);
  for (int j = 0; j < mesh.cells(); ++j) {
    const int left = mesh.wrap(j - 1);
    double minus = 0.0;
    double plus = 0.0;
    for (int m = 0; m <= 3; ++m) {
      const double c_left = f.coefficients()[left * 4 + m];
      const double c_here = f.coefficients()[j * 4 + m];
      minus += c_left * std::sqrt((2.0 * m + 1.0) / mesh.h()) * std::legendre(m, 1.0);
      plus += c_here * std::sqrt((2.0 * m + 1.0) / mesh.h()) * std::legendre(m, -1.0);
    }
    EXPECT_NEAR(trace(f, j, Side::minus), minus, 1e-13);
    EXPECT_NEAR(trace(f, j, Side::plus), plus, 1e-13);
    EXPECT_NEAR(jump(f, j), plus - minus, 1e-13);
  }
}

TEST(DGFunction, TracesMatchCellPolynomialEndpoints) {
  const Mesh mesh(1.0, 6, 2);
  const DGFunction f = random_function(mesh, 2, 9);
  for (int j = 0; j < 6; ++j) {
    EXPECT_NEAR(trace(f, j, Side::plus), f.cell_value(j, 0.0), 1e-13);
    EXPECT_NEAR(trace(f, mesh.wrap(j + 1), Side::minus), f.cell_value(j, 1.0), 1e-13);
  }
}

TEST(L2Project, ReproducesGlobalPolynomials) {
  const Mesh mesh(2.0, 8, 3);
  auto cubic = [](double x) { return 1.0 - 2.0 * x + 0.5 * x * x * x; };
  const DGFunction p = l2_project(cubic, mesh, 3);
  for (int j = 0; j < 8; ++j) {
    for (int m = 0; m <= 3; ++m) {
      // direct moment with a high-order rule
      const QuadratureRule& q = gauss_legendre(12);
      double c = 0.0;
      for (std::size_t i = 0; i < q.size(); ++i) {
        const double x = mesh.point(j, q.nodes[i]);
        c += q.weights[i] * mesh.h() * cubic(x) * basis(mesh, j, m, x);
      }
      EXPECT_NEAR(p(j, m), c, 1e-13);
    }
  }
}

TEST(L2Project, ZeroGivesZero) {
  const Mesh mesh(1.0, 5, 2);
  const DGFunction p = l2_project([](double) { return 0.0; }, mesh, 2);
  for (double c : p.coefficients()) EXPECT_EQ(c, 0.0);
}

TEST(L2Project, SineErrorRatioUnderRefinement) {
  for (int k = 1; k <= 3; ++k) {
    double prev = 0.0;
    for (int N : {8, 16, 32, 64}) {
      const Mesh mesh(2.0 * pi, N, k);
      const DGFunction p = l2_project([](double x) { return std::sin(x); }, mesh, k, k + 6);
      const QuadratureRule& q = gauss_legendre(k + 8);
      double e2 = 0.0;
      for (int j = 0; j < N; ++j)
        for (std::size_t i = 0; i < q.size(); ++i) {
          const double d = p.cell_value(j, q.nodes[i]) - std::sin(mesh.point(j, q.nodes[i]));
          e2 += q.weights[i] * mesh.h() * d * d;
        }
      const double err = std::sqrt(e2);
      if (prev > 0.0) EXPECT_NEAR(std::log2(prev / err), k + 1.0, 0.1) << "k=" << k << " N=" << N;
      prev = err;
    }
  }
}

TEST(L2Project, IsIdempotentOnDGFunctions) {
  const Mesh mesh(1.5, 9, 2);
  const DGFunction f = random_function(mesh, 2, 11);
  // evaluate per cell (avoid ambiguity at interfaces by projecting cell by cell)
  DGFunction g(mesh, 2);
  for (int j = 0; j < 9; ++j) {
    const DGFunction pj = l2_project(
        [&](double x) {
          int c = 0;
          double s = 0.0;
          mesh.locate(x, c, s);
          return c == j ? f.cell_value(j, s) : 0.0;
        },
        mesh, 2);
    for (int m = 0; m <= 2; ++m) g.coefficients()[j * 3 + m] = pj(j, m);
  }
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_NEAR(g.coefficients()[i], f.coefficients()[i], 1e-12);
}

TEST(DGFunction, NormIsCoefficientSum) {
  const Mesh mesh(2.0, 6, 2);
  const DGFunction f = random_function(mesh, 2, 3);
  double s = 0.0;
  for (double c : f.coefficients()) s += c * c;
  // quadrature check of the same quantity
  const QuadratureRule& q = gauss_legendre(6);
  double quad = 0.0;
  for (int j = 0; j < 6; ++j)
    for (std::size_t i = 0; i < q.size(); ++i) {
      const double v = f.cell_value(j, q.nodes[i]);
      quad += q.weights[i] * mesh.h() * v * v;
    }
  EXPECT_NEAR(l2_norm(f) * l2_norm(f), s, 1e-12);
  EXPECT_NEAR(quad, s, 1e-12);
}

TEST(DGFunction, RaiseDegreeKeepsValues) {
  const Mesh mesh(1.0, 4, 1);
  const DGFunction f = random_function(mesh, 1, 5);
  const DGFunction g = raise_degree(f, 4);
  for (int j = 0; j < 4; ++j)
    for (double s : {0.0, 0.3, 1.0}) EXPECT_NEAR(g.cell_value(j, s), f.cell_value(j, s), 1e-14);
}

TEST(DGFunction, MismatchedArithmeticThrows) {
  const Mesh a(1.0, 4, 1), b(1.0, 8, 1);
  DGFunction f(a, 1), g(b, 1);
  EXPECT_THROW(f += g, InvalidArgument);
}
