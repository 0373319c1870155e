#pragma once

// Gauss quadrature rules and the orthonormal Legendre basis on the unit
// reference cell [0, 1].

#include <Eigen/Eigenvalues>

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace fracdg {

/// Nodes and weights of a quadrature rule on [0, 1].
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  [[nodiscard]] std::size_t size() const { return nodes.size(); }

  template <class F>
  [[nodiscard]] double integrate(F&& f) const {
    double sum = 0.0;
    for (std::size_t q = 0; q < nodes.size(); ++q) sum += weights[q] * f(nodes[q]);
    return sum;
  }
};

namespace detail {

// P_n(x) and P_n'(x) on [-1, 1] by the three-term recurrence.
inline void legendre_with_derivative(int n, double x, double& p, double& dp) {
  double p0 = 1.0;
  double p1 = x;
  if (n == 0) {
    p = 1.0;
    dp = 0.0;
    return;
  }
  for (int m = 2; m <= n; ++m) {
    const double p2 = ((2.0 * m - 1.0) * x * p1 - (m - 1.0) * p0) / m;
    p0 = p1;
    p1 = p2;
  }
  p = p1;
  dp = n * (x * p1 - p0) / (x * x - 1.0);
}

inline QuadratureRule compute_gauss_legendre(int n) {
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double p = 0.0;
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      legendre_with_derivative(n, x, p, dp);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    legendre_with_derivative(n, x, p, dp);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    // map [-1, 1] -> [0, 1]
    rule.nodes[i] = 0.5 * (1.0 - x);
    rule.nodes[n - 1 - i] = 0.5 * (1.0 + x);
    rule.weights[i] = 0.5 * w;
    rule.weights[n - 1 - i] = 0.5 * w;
  }
  return rule;
}

inline constexpr int kMaxCachedGaussPoints = 96;

}  // namespace detail

/// n-point Gauss-Legendre rule on [0, 1]; exact for polynomials of degree 2n-1.
/// Rules up to 96 points are computed once and shared.
inline const QuadratureRule& gauss_legendre(int n) {
  if (n < 1 || n > detail::kMaxCachedGaussPoints) {
    throw std::invalid_argument("gauss_legendre: point count out of range");
  }
  static const auto table = [] {
    std::array<QuadratureRule, detail::kMaxCachedGaussPoints + 1> t;
    for (int m = 1; m <= detail::kMaxCachedGaussPoints; ++m) t[m] = detail::compute_gauss_legendre(m);
    return t;
  }();
  return table[n];
}

/// n-point Gauss-Jacobi rule on [0, 1] for the weight u^alpha (alpha > -1),
/// built by Golub-Welsch. The weights absorb u^alpha, so
/// sum_q w_q p(u_q) = int_0^1 u^alpha p(u) du exactly for deg p <= 2n-1.
inline QuadratureRule gauss_jacobi_left(int n, double alpha) {
  if (n < 1 || !(alpha > -1.0)) throw std::invalid_argument("gauss_jacobi_left: bad arguments");
  // Jacobi weight (1-x)^a (1+x)^b on [-1, 1] with a = 0, b = alpha.
  const double a = 0.0;
  const double b = alpha;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const double s = 2.0 * i + a + b;
    J(i, i) = (i == 0) ? (b - a) / (a + b + 2.0) : (b * b - a * a) / (s * (s + 2.0));
    if (i + 1 < n) {
      const double m = i + 1.0;
      const double t = 2.0 * m + a + b;
      const double off =
          std::sqrt(4.0 * m * (m + a) * (m + b) * (m + a + b) / (t * t * (t + 1.0) * (t - 1.0)));
      J(i, i + 1) = off;
      J(i + 1, i) = off;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(J);
  const double mass = 1.0 / (1.0 + alpha);
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = 0.5 * (1.0 + eig.eigenvalues()(i));
    const double v = eig.eigenvectors()(0, i);
    rule.weights[i] = mass * v * v;
  }
  return rule;
}

/// Orthonormal shifted Legendre polynomials on [0, 1]:
/// phi_m(s) = sqrt(2m+1) P_m(2s-1), so int_0^1 phi_m phi_n = delta_mn.
namespace ref_basis {

/// Values phi_0..phi_k at s.
inline void values(int k, double s, double* out) {
  const double x = 2.0 * s - 1.0;
  double p0 = 1.0;
  double p1 = x;
  out[0] = 1.0;
  if (k >= 1) out[1] = std::sqrt(3.0) * x;
  for (int m = 2; m <= k; ++m) {
    const double p2 = ((2.0 * m - 1.0) * x * p1 - (m - 1.0) * p0) / m;
    p0 = p1;
    p1 = p2;
    out[m] = std::sqrt(2.0 * m + 1.0) * p2;
  }
}

/// d/ds phi_0..phi_k at s.
inline void derivatives(int k, double s, double* out) {
  // P'_{m+1} = P'_{m-1} + (2m+1) P_m, in x = 2s-1; d/ds = 2 d/dx
  const double x = 2.0 * s - 1.0;
  std::vector<double> p(k + 1);
  std::vector<double> dp(k + 1, 0.0);
  p[0] = 1.0;
  if (k >= 1) p[1] = x;
  for (int m = 2; m <= k; ++m) p[m] = ((2.0 * m - 1.0) * x * p[m - 1] - (m - 1.0) * p[m - 2]) / m;
  if (k >= 1) dp[1] = 1.0;
  for (int m = 1; m < k; ++m) dp[m + 1] = dp[m - 1] + (2.0 * m + 1.0) * p[m];
  for (int m = 0; m <= k; ++m) out[m] = 2.0 * std::sqrt(2.0 * m + 1.0) * dp[m];
}

/// Divided differences (phi_m(a) - phi_m(b)) / (a - b), m = 0..k, valid also
/// as a -> b. Uses the recurrence delta[x g] = x_a delta[g] + g(x_b).
inline void divided_differences(int k, double a, double b, double* out) {
  const double xa = 2.0 * a - 1.0;
  const double xb = 2.0 * b - 1.0;
  double pb0 = 1.0;
  double pb1 = xb;
  double d0 = 0.0;  // delta_x P_0
  double d1 = 1.0;  // delta_x P_1
  out[0] = 0.0;
  if (k >= 1) out[1] = 2.0 * std::sqrt(3.0) * d1;
  for (int m = 1; m < k; ++m) {
    const double d2 = ((2.0 * m + 1.0) * (xa * d1 + pb1) - m * d0) / (m + 1.0);
    const double pb2 = ((2.0 * m + 1.0) * xb * pb1 - m * pb0) / (m + 1.0);
    d0 = d1;
    d1 = d2;
    pb0 = pb1;
    pb1 = pb2;
    out[m + 1] = 2.0 * std::sqrt(2.0 * m + 3.0) * d2;
  }
}

}  // namespace ref_basis

}  // namespace fracdg
