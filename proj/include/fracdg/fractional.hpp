#pragma once

// Fractional Laplacian g_lambda = -(-d^2/dx^2)^{lambda/2}, lambda in (0,1), on
// the periodic DG space.
//
// The weak form D(p, q) = (g_lambda[p], q) is realized through the symmetric
// double integral
//   D(p, q) = -(c_lambda/2) int_T int_R (p(x)-p(y)) (q(x)-q(y)) |x-y|^{-1-lambda} dy dx,
// which on a uniform periodic mesh is block circulant: the (k+1)x(k+1) block
// coupling cell i to cell j depends only on d = (j - i) mod N.
//
// In reference units every block reduces to one-dimensional integrals over the
// separation r in (-1, 1) against the periodized kernel
//   kappa_d(r) = sum_M |r + d + M N|^{-1-lambda}.
// Image sums are Hurwitz zeta values; the three near terms that touch the
// singularity (d = 0, 1, N-1) are integrated exactly with Gauss-Jacobi rules.

#include "fracdg/errors.hpp"
#include "fracdg/mesh.hpp"
#include "fracdg/quadrature.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <fftw3.h>
#include <gsl/gsl_sf_zeta.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace fracdg {

inline void require_lambda(double lambda) {
  if (!(lambda > 0.0 && lambda < 1.0)) {
    throw InvalidArgument("lambda must lie in the open interval (0,1), got " + std::to_string(lambda));
  }
}

// ---------------------------------------------------------------------------
// Normalization constant of the integral representation.

/// c_lambda = lambda / (2 Gamma(1-lambda) cos(pi lambda / 2)).
inline double c_lambda_closed_form(double lambda) {
  require_lambda(lambda);
  return lambda / (2.0 * std::tgamma(1.0 - lambda) * std::cos(0.5 * std::numbers::pi * lambda));
}

/// I(xi) = int_R (cos(xi z) - 1) |z|^{-1-lambda} dz by quadrature. The range is
/// split at a = split_periods * pi / xi; the oscillatory tail is rotated onto
/// z = a + i t where it decays like exp(-xi t).
inline double cosine_difference_integral(double lambda, double xi, double split_periods = 1.0,
                                         double tol = 1e-14) {
  require_lambda(lambda);
  if (!(xi > 0.0)) throw InvalidArgument("cosine_difference_integral: wavenumber must be positive");
  const double s = 1.0 + lambda;
  const double a = split_periods * std::numbers::pi / xi;

  boost::math::quadrature::tanh_sinh<double> ts;
  const double head = ts.integrate(
      [&](double z) {
        if (z <= 0.0) return 0.0;
        const double sn = std::sin(0.5 * xi * z) / z;
        return -2.0 * sn * sn * std::pow(z, 1.0 - lambda);
      },
      0.0, a, tol);

  boost::math::quadrature::exp_sinh<double> es;
  auto rotated = [&](double t, bool real_part) {
    const std::complex<double> z(a, t);
    const std::complex<double> v = std::exp(-xi * t) * std::pow(z, -s);
    return real_part ? v.real() : v.imag();
  };
  const double re = es.integrate([&](double t) { return rotated(t, true); }, tol);
  const double im = es.integrate([&](double t) { return rotated(t, false); }, tol);
  // int_a^inf e^{i xi z} z^{-s} dz = i e^{i xi a} (re + i im)
  const std::complex<double> tail_c = std::complex<double>(0.0, 1.0) * std::polar(1.0, xi * a) *
                                      std::complex<double>(re, im);
  const double tail = tail_c.real() - std::pow(a, -lambda) / lambda;
  return 2.0 * (head + tail);
}

/// c_lambda chosen so that g_lambda[cos(xi .)](0) = -|xi|^lambda for the
/// integral representation; derived numerically from the mode xi.
inline double derive_c_lambda_for_mode(double lambda, double xi, double split_periods = 1.0,
                                       double tol = 1e-14) {
  const double I = cosine_difference_integral(lambda, xi, split_periods, tol);
  return std::pow(xi, lambda) / (-I);
}

/// Cached numerical derivation from the unit mode.
inline double derive_c_lambda(double lambda) {
  require_lambda(lambda);
  static std::mutex mu;
  static std::map<double, double> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(lambda);
  if (it != cache.end()) return it->second;
  const double c = derive_c_lambda_for_mode(lambda, 1.0);
  cache.emplace(lambda, c);
  return c;
}

// ---------------------------------------------------------------------------
// Fourier-multiplier oracle on the torus.

/// g_lambda acts on e^{i xi_k x}, xi_k = 2 pi k / L, as multiplication by -|xi_k|^lambda.
struct SpectralOracle {
  double lambda;
  double length;
  int cutoff;  ///< highest resolved mode index K

  SpectralOracle(double lambda_, double length_, int cutoff_) : lambda(lambda_), length(length_), cutoff(cutoff_) {
    require_lambda(lambda);
    if (!(length > 0.0) || cutoff < 1) throw InvalidArgument("SpectralOracle: bad domain or cutoff");
  }

  [[nodiscard]] double wavenumber(int k) const { return 2.0 * std::numbers::pi * k / length; }
  [[nodiscard]] double multiplier(int k) const { return -std::pow(std::abs(wavenumber(k)), lambda); }

  /// Complex Fourier coefficients vhat_k = (1/L) int_T v e^{-i xi_k x}, k = 0..K,
  /// from 2K+2 equispaced samples (exact for trigonometric polynomials of degree <= K).
  template <class F>
  [[nodiscard]] std::vector<std::complex<double>> coefficients(F&& v) const {
    const int M = 2 * cutoff + 2;
    std::vector<std::complex<double>> out(cutoff + 1);
    std::vector<double> samples(M);
    for (int i = 0; i < M; ++i) samples[i] = v(length * i / M);
    for (int k = 0; k <= cutoff; ++k) {
      std::complex<double> acc = 0.0;
      for (int i = 0; i < M; ++i) acc += samples[i] * std::polar(1.0, -2.0 * std::numbers::pi * k * i / M);
      out[k] = acc / static_cast<double>(M);
    }
    return out;
  }

  /// -int_T g[v] v dx = L sum_k |xi_k|^lambda |vhat_k|^2 (k over both signs).
  template <class F>
  [[nodiscard]] double seminorm_squared(F&& v) const {
    const auto c = coefficients(v);
    double s = 0.0;
    for (int k = 1; k <= cutoff; ++k) s += 2.0 * (-multiplier(k)) * std::norm(c[k]);
    return length * s;
  }

  /// Pointwise g_lambda[v](x) of the resolved trigonometric interpolant of v.
  template <class F>
  [[nodiscard]] std::function<double(double)> apply(F&& v) const {
    auto c = coefficients(v);
    std::vector<std::complex<double>> gc(c.size());
    for (int k = 1; k <= cutoff; ++k) gc[k] = multiplier(k) * c[k];
    const SpectralOracle self = *this;
    return [self, gc](double x) {
      double s = 0.0;
      for (int k = 1; k <= self.cutoff; ++k) s += 2.0 * (gc[k] * std::polar(1.0, self.wavenumber(k) * x)).real();
      return s;
    };
  }
};

// ---------------------------------------------------------------------------
// Block assembly.

namespace detail {

inline double hurwitz_zeta(double s, double q) { return gsl_sf_hzeta(s, q); }

// Regular (non-singular) part of kappa_d(r), r in [-1, 1].
inline double kappa_regular(int d, int N, double s, double r) {
  const int m0 = (d <= 1) ? 1 : 0;
  const int m1 = (d == N - 1) ? 2 : 1;
  const double q = (d + r) / N;
  return std::pow(static_cast<double>(N), -s) * (hurwitz_zeta(s, m0 + q) + hurwitz_zeta(s, m1 - q));
}

// Correlation tables of the reference basis for one quadrature node set.
struct CorrelationTables {
  int k = 0;
  std::vector<double> nodes;        // rho in (0,1)
  std::vector<double> weights;
  std::vector<double> neg;          // G_{mn}(rho - 1), [q][m][n]
  std::vector<double> pos;          // G_{mn}(rho)
};

inline int dof2(int k) { return (k + 1) * (k + 1); }

// G_{mn}(r) = int phi_n(s) phi_m(s + r) ds over the admissible s.
inline void correlation(int k, double r, const QuadratureRule& inner, double* out) {
  const int n1 = k + 1;
  std::fill(out, out + n1 * n1, 0.0);
  std::vector<double> ps(n1), pt(n1);
  const double len = 1.0 - std::abs(r);
  const double s0 = (r >= 0.0) ? 0.0 : -r;
  for (std::size_t q = 0; q < inner.size(); ++q) {
    const double s = s0 + len * inner.nodes[q];
    ref_basis::values(k, s, ps.data());
    ref_basis::values(k, s + r, pt.data());
    const double w = len * inner.weights[q];
    for (int m = 0; m < n1; ++m)
      for (int n = 0; n < n1; ++n) out[m * n1 + n] += w * pt[m] * ps[n];
  }
}

inline CorrelationTables make_correlation_tables(int k, int points) {
  CorrelationTables t;
  t.k = k;
  const QuadratureRule& rule = gauss_legendre(points);
  const QuadratureRule& inner = gauss_legendre(k + 2);
  t.nodes = rule.nodes;
  t.weights = rule.weights;
  const int b = dof2(k);
  t.neg.resize(points * b);
  t.pos.resize(points * b);
  for (int q = 0; q < points; ++q) {
    correlation(k, rule.nodes[q] - 1.0, inner, &t.neg[q * b]);
    correlation(k, rule.nodes[q], inner, &t.pos[q * b]);
  }
  return t;
}

// Exactly integrated singular pieces, in reference units.
struct SingularPieces {
  std::vector<double> left;      // int_{-1}^{1} (1+r)^{-1-lambda} G(r) dr, Jacobi part only
  std::vector<double> right;     // int_{-1}^{1} (1-r)^{-1-lambda} G(r) dr, Jacobi part only
  std::vector<double> self;      // -A/2 - C for the diagonal block
};

inline SingularPieces make_singular_pieces(int k, double lambda) {
  const int n1 = k + 1;
  const int b = n1 * n1;
  SingularPieces sp;
  sp.left.assign(b, 0.0);
  sp.right.assign(b, 0.0);
  sp.self.assign(b, 0.0);
  const QuadratureRule& inner = gauss_legendre(k + 2);
  std::vector<double> ps(n1), pt(n1);

  // (1+r)^{-s} G(r) on r = u - 1: G = u Q(u), Q(u) = int_0^1 phi_n(1-u+u sigma) phi_m(u sigma) dsigma.
  const QuadratureRule jac0 = gauss_jacobi_left(k + 3, -lambda);
  for (std::size_t a = 0; a < jac0.size(); ++a) {
    const double u = jac0.nodes[a];
    for (std::size_t q = 0; q < inner.size(); ++q) {
      const double sg = inner.nodes[q];
      const double w = jac0.weights[a] * inner.weights[q];
      ref_basis::values(k, 1.0 - u + u * sg, ps.data());
      ref_basis::values(k, u * sg, pt.data());
      for (int m = 0; m < n1; ++m)
        for (int n = 0; n < n1; ++n) sp.left[m * n1 + n] += w * pt[m] * ps[n];
      // (1-r)^{-s} G(r) on r = 1 - u: s = u sigma, t = 1 - u + u sigma
      ref_basis::values(k, u * sg, ps.data());
      ref_basis::values(k, 1.0 - u + u * sg, pt.data());
      for (int m = 0; m < n1; ++m)
        for (int n = 0; n < n1; ++n) sp.right[m * n1 + n] += w * pt[m] * ps[n];
    }
  }

  // Same-cell Gagliardo part A = 2 int_0^1 u^{1-lambda} H(u) du with
  // H(u) = int_0^{1-u} D_n(tau+u, tau) D_m(tau+u, tau) dtau.
  const QuadratureRule jac1 = gauss_jacobi_left(k + 3, 1.0 - lambda);
  std::vector<double> A(b, 0.0);
  std::vector<double> dm(n1);
  for (std::size_t a = 0; a < jac1.size(); ++a) {
    const double u = jac1.nodes[a];
    for (std::size_t q = 0; q < inner.size(); ++q) {
      const double tau = (1.0 - u) * inner.nodes[q];
      const double w = 2.0 * jac1.weights[a] * (1.0 - u) * inner.weights[q];
      ref_basis::divided_differences(k, tau + u, tau, dm.data());
      for (int m = 0; m < n1; ++m)
        for (int n = 0; n < n1; ++n) A[m * n1 + n] += w * dm[m] * dm[n];
    }
  }
  // C = (1/lambda) int_0^1 phi_n phi_m (sigma^{-lambda} + (1-sigma)^{-lambda}) dsigma.
  std::vector<double> C(b, 0.0);
  for (std::size_t a = 0; a < jac0.size(); ++a) {
    ref_basis::values(k, jac0.nodes[a], ps.data());
    for (int m = 0; m < n1; ++m)
      for (int n = 0; n < n1; ++n) {
        const double parity = ((m + n) % 2 == 0) ? 2.0 : 0.0;
        C[m * n1 + n] += jac0.weights[a] * parity * ps[m] * ps[n] / lambda;
      }
  }
  for (int i = 0; i < b; ++i) sp.self[i] = -0.5 * A[i] - C[i];
  return sp;
}

// Reference block R_d (B_d = c_lambda h^{-lambda} R_d) for one node set.
inline void reference_block(int d, int N, double lambda, const CorrelationTables& t, const SingularPieces& sp,
                            double* out) {
  const int b = dof2(t.k);
  const double s = 1.0 + lambda;
  std::fill(out, out + b, 0.0);
  const bool left_near = (d == 1);
  const bool right_near = (d == N - 1);
  for (std::size_t q = 0; q < t.nodes.size(); ++q) {
    const double rho = t.nodes[q];
    const double rn = rho - 1.0;
    const double rp = rho;
    double wn = t.weights[q] * kappa_regular(d, N, s, rn);
    double wp = t.weights[q] * kappa_regular(d, N, s, rp);
    // regular halves of the near terms
    if (left_near) wp += t.weights[q] * std::pow(1.0 + rp, -s);
    if (right_near) wn += t.weights[q] * std::pow(1.0 - rn, -s);
    const double* gn = &t.neg[q * b];
    const double* gp = &t.pos[q * b];
    for (int i = 0; i < b; ++i) out[i] += wn * gn[i] + wp * gp[i];
  }
  if (d == 0) {
    for (int i = 0; i < b; ++i) out[i] += sp.self[i];
  }
  if (left_near) {
    for (int i = 0; i < b; ++i) out[i] += sp.left[i];
  }
  if (right_near) {
    for (int i = 0; i < b; ++i) out[i] += sp.right[i];
  }
}

struct FftwPlanDeleter {
  void operator()(fftw_plan_s* p) const;
};

inline std::mutex& fftw_planner_mutex() {
  static std::mutex mu;
  return mu;
}

inline void FftwPlanDeleter::operator()(fftw_plan_s* p) const {
  std::lock_guard<std::mutex> lock(fftw_planner_mutex());
  fftw_destroy_plan(p);
}

using FftwPlan = std::shared_ptr<fftw_plan_s>;

struct FftwBuffer {
  explicit FftwBuffer(std::size_t n) : p(static_cast<double*>(fftw_malloc(sizeof(double) * std::max<std::size_t>(n, 1)))) {}
  ~FftwBuffer() { fftw_free(p); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  double* p;
};

}  // namespace detail

/// Assembled block-circulant representation of D on the degree-k DG space.
class FractionalOperator {
 public:
  FractionalOperator(const Mesh& mesh, int degree, double lambda, double c_lambda, double tolerance,
                     std::vector<double> blocks)
      : mesh_(mesh), degree_(degree), lambda_(lambda), c_lambda_(c_lambda), tolerance_(tolerance),
        blocks_(std::move(blocks)) {
    if (blocks_.size() != static_cast<std::size_t>(mesh.cells()) * detail::dof2(degree)) {
      throw InvalidArgument("FractionalOperator: block storage has the wrong size");
    }
    build_fast_path();
  }

  [[nodiscard]] const Mesh& mesh() const { return mesh_; }
  [[nodiscard]] int degree() const { return degree_; }
  [[nodiscard]] double lambda() const { return lambda_; }
  [[nodiscard]] double c_lambda() const { return c_lambda_; }
  [[nodiscard]] double tolerance() const { return tolerance_; }
  [[nodiscard]] int cells() const { return mesh_.cells(); }
  [[nodiscard]] const std::vector<double>& blocks() const { return blocks_; }

  /// Entry B_d[m, n]: coupling of basis (i, n) into test function (i + d, m).
  [[nodiscard]] double block(int d, int m, int n) const {
    const int n1 = degree_ + 1;
    return blocks_[static_cast<std::size_t>(mesh_.wrap(d)) * n1 * n1 + m * n1 + n];
  }

  /// Global entry B[(j,m),(i,n)] = D(phi_{i,n}, phi_{j,m}).
  [[nodiscard]] double entry(int j, int m, int i, int n) const { return block(j - i, m, n); }

  /// v[(j,m)] = D(phi, phi_{j,m}) by direct O(N^2 (k+1)^2) summation.
  [[nodiscard]] std::vector<double> apply_dense(std::span<const double> c) const {
    require_size(c);
    const int N = mesh_.cells();
    const int n1 = degree_ + 1;
    std::vector<double> v(c.size(), 0.0);
    for (int j = 0; j < N; ++j) {
      for (int i = 0; i < N; ++i) {
        const double* B = &blocks_[static_cast<std::size_t>(mesh_.wrap(j - i)) * n1 * n1];
        for (int m = 0; m < n1; ++m) {
          double acc = 0.0;
          for (int n = 0; n < n1; ++n) acc += B[m * n1 + n] * c[static_cast<std::size_t>(i) * n1 + n];
          v[static_cast<std::size_t>(j) * n1 + m] += acc;
        }
      }
    }
    return v;
  }

  /// Same result via FFT diagonalization of the circulant block structure.
  [[nodiscard]] std::vector<double> apply_fast(std::span<const double> c) const {
    require_size(c);
    const int N = mesh_.cells();
    const int n1 = degree_ + 1;
    const int nf = N / 2 + 1;
    detail::FftwBuffer real(N);
    detail::FftwBuffer spec_in(2 * static_cast<std::size_t>(nf) * n1);
    detail::FftwBuffer spec_out(2 * static_cast<std::size_t>(nf));
    auto* chat = reinterpret_cast<fftw_complex*>(spec_in.p);
    for (int n = 0; n < n1; ++n) {
      for (int i = 0; i < N; ++i) real.p[i] = c[static_cast<std::size_t>(i) * n1 + n];
      fftw_execute_dft_r2c(forward_.get(), real.p, chat + static_cast<std::size_t>(n) * nf);
    }
    std::vector<double> v(c.size(), 0.0);
    auto* vhat = reinterpret_cast<fftw_complex*>(spec_out.p);
    for (int m = 0; m < n1; ++m) {
      for (int w = 0; w < nf; ++w) {
        std::complex<double> acc = 0.0;
        for (int n = 0; n < n1; ++n) {
          const auto& bh = block_hat_[(static_cast<std::size_t>(w) * n1 + m) * n1 + n];
          const fftw_complex& cc = chat[static_cast<std::size_t>(n) * nf + w];
          acc += bh * std::complex<double>(cc[0], cc[1]);
        }
        vhat[w][0] = acc.real();
        vhat[w][1] = acc.imag();
      }
      fftw_execute_dft_c2r(backward_.get(), vhat, real.p);
      for (int j = 0; j < N; ++j) v[static_cast<std::size_t>(j) * n1 + m] = real.p[j] / N;
    }
    return v;
  }

  [[nodiscard]] std::vector<double> apply(std::span<const double> c) const { return apply_fast(c); }

  [[nodiscard]] std::vector<double> apply(const DGFunction& phi) const {
    require_function(phi);
    return apply_fast(phi.coefficients());
  }

  /// D(phi, psi) = psi^T B phi.
  [[nodiscard]] double form(const DGFunction& phi, const DGFunction& psi) const {
    require_function(psi);
    const auto v = apply(phi);
    double s = 0.0;
    auto c = psi.coefficients();
    for (std::size_t i = 0; i < v.size(); ++i) s += v[i] * c[i];
    return s;
  }

  /// Largest block entry magnitude; sets the scale for round-off tolerances.
  [[nodiscard]] double scale() const {
    double s = 0.0;
    for (double b : blocks_) s = std::max(s, std::abs(b));
    return s;
  }

 private:
  void require_size(std::span<const double> c) const {
    if (c.size() != blocks_.size() / (degree_ + 1)) throw InvalidArgument("FractionalOperator: vector size mismatch");
  }
  void require_function(const DGFunction& phi) const {
    if (phi.degree() != degree_ || !phi.mesh().same_grid(mesh_)) {
      throw InvalidArgument("FractionalOperator: mesh or degree mismatch");
    }
  }

  void build_fast_path() {
    const int N = mesh_.cells();
    const int n1 = degree_ + 1;
    const int nf = N / 2 + 1;
    detail::FftwBuffer real(N);
    detail::FftwBuffer spec(2 * static_cast<std::size_t>(nf));
    {
      std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
      forward_ = detail::FftwPlan(
          fftw_plan_dft_r2c_1d(N, real.p, reinterpret_cast<fftw_complex*>(spec.p), FFTW_ESTIMATE | FFTW_UNALIGNED),
          detail::FftwPlanDeleter{});
      backward_ = detail::FftwPlan(
          fftw_plan_dft_c2r_1d(N, reinterpret_cast<fftw_complex*>(spec.p), real.p, FFTW_ESTIMATE | FFTW_UNALIGNED),
          detail::FftwPlanDeleter{});
    }
    block_hat_.assign(static_cast<std::size_t>(nf) * n1 * n1, 0.0);
    auto* out = reinterpret_cast<fftw_complex*>(spec.p);
    for (int m = 0; m < n1; ++m) {
      for (int n = 0; n < n1; ++n) {
        for (int d = 0; d < N; ++d) real.p[d] = blocks_[static_cast<std::size_t>(d) * n1 * n1 + m * n1 + n];
        fftw_execute_dft_r2c(forward_.get(), real.p, out);
        for (int w = 0; w < nf; ++w) block_hat_[(static_cast<std::size_t>(w) * n1 + m) * n1 + n] = {out[w][0], out[w][1]};
      }
    }
  }

  Mesh mesh_;
  int degree_;
  double lambda_;
  double c_lambda_;
  double tolerance_;
  std::vector<double> blocks_;  // [d][m][n]
  std::vector<std::complex<double>> block_hat_;  // [w][m][n]
  detail::FftwPlan forward_;
  detail::FftwPlan backward_;
};

inline constexpr double kDefaultAssemblyTolerance = 1e-10;

/// Reference blocks R_d for all offsets with `points` Gauss nodes per half interval.
inline std::vector<double> reference_blocks(int N, int k, double lambda, int points) {
  const auto tables = detail::make_correlation_tables(k, points);
  const auto sp = detail::make_singular_pieces(k, lambda);
  const int b = detail::dof2(k);
  std::vector<double> R(static_cast<std::size_t>(N) * b);
  for (int d = 0; d < N; ++d) detail::reference_block(d, N, lambda, tables, sp, &R[static_cast<std::size_t>(d) * b]);
  return R;
}

/// Assembles the operator; the regular-kernel quadrature is refined until two
/// successive node counts agree to tolerance * max|entry|.
inline FractionalOperator assemble(const Mesh& mesh, int k, double lambda,
                                   double tolerance = kDefaultAssemblyTolerance) {
  require_lambda(lambda);
  if (k < 0) throw InvalidArgument("assemble: negative degree");
  if (!(tolerance > 0.0)) throw InvalidArgument("assemble: tolerance must be positive");
  const int N = mesh.cells();
  const double c = derive_c_lambda(lambda);
  const double factor = c * std::pow(mesh.h(), -lambda);
  const int ladder[] = {12, 20, 32, 48, 64, 96};
  std::vector<double> prev = reference_blocks(N, k, lambda, ladder[0]);
  double last_change = 0.0;
  for (std::size_t i = 1; i < std::size(ladder); ++i) {
    std::vector<double> cur = reference_blocks(N, k, lambda, ladder[i]);
    double change = 0.0;
    double size = 0.0;
    for (std::size_t e = 0; e < cur.size(); ++e) {
      change = std::max(change, std::abs(cur[e] - prev[e]));
      size = std::max(size, std::abs(cur[e]));
    }
    last_change = change / size;
    if (last_change <= tolerance) {
      for (double& v : cur) v *= factor;
      return FractionalOperator(mesh, k, lambda, c, tolerance, std::move(cur));
    }
    prev = std::move(cur);
  }
  throw AssemblyFailure("assemble: kernel quadrature did not reach relative tolerance " + std::to_string(tolerance) +
                        " (last change " + std::to_string(last_change) + ", N=" + std::to_string(N) +
                        ", k=" + std::to_string(k) + ")");
}

/// |phi|_{H^{lambda/2}} = sqrt(-D(phi, phi)), the Fourier-normalized seminorm
/// (sum_k |xi_k|^lambda |phihat_k|^2 L).
inline double seminorm_squared(const FractionalOperator& op, const DGFunction& phi) {
  const double q = op.form(phi, phi);
  const double nrm2 = inner_product(phi, phi);
  const double tol = 1e-11 * op.scale() * nrm2;
  if (-q < -tol) {
    throw NumericalConsistencyError("seminorm: quadratic form is positive (" + std::to_string(q) +
                                    "), operator is not negative semidefinite");
  }
  return std::max(0.0, -q);
}

inline double seminorm(const FractionalOperator& op, const DGFunction& phi) {
  return std::sqrt(seminorm_squared(op, phi));
}

// ---------------------------------------------------------------------------
// Inverse inequality |phi|^2 <= C h^{-lambda} ||phi||^2.

struct InverseInequalityReport {
  int cells = 0;
  double h = 0.0;
  int samples = 0;
  double max_ratio = 0.0;
  double min_ratio = 0.0;
  double mean_ratio = 0.0;
  bool consistent = true;  ///< every sample gave a nonnegative seminorm
};

/// Ratios |phi|^2 h^lambda / ||phi||^2 over random DG functions with
/// independent standard normal coefficients.
inline InverseInequalityReport inverse_inequality_ratios(const FractionalOperator& op, int samples,
                                                         std::uint64_t seed) {
  if (samples <= 0) throw InvalidArgument("inverse inequality: samples must be positive");
  InverseInequalityReport rep;
  rep.cells = op.cells();
  rep.h = op.mesh().h();
  rep.samples = samples;
  rep.min_ratio = std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  const double hl = std::pow(rep.h, op.lambda());
  double sum = 0.0;
  for (int s = 0; s < samples; ++s) {
    DGFunction phi(op.mesh(), op.degree());
    for (double& c : phi.coefficients()) c = dist(rng);
    const double n2 = inner_product(phi, phi);
    if (n2 == 0.0) continue;
    double r = 0.0;
    try {
      r = seminorm_squared(op, phi) * hl / n2;
    } catch (const NumericalConsistencyError&) {
      rep.consistent = false;
      r = -op.form(phi, phi) * hl / n2;
    }
    rep.max_ratio = std::max(rep.max_ratio, r);
    rep.min_ratio = std::min(rep.min_ratio, r);
    sum += r;
  }
  rep.mean_ratio = sum / samples;
  return rep;
}

inline InverseInequalityReport check_inverse_inequality(const Mesh& mesh, int k, double lambda, int samples,
                                                        std::uint64_t seed) {
  return inverse_inequality_ratios(assemble(mesh, k, lambda), samples, seed);
}

struct InverseInequalityStudy {
  std::vector<InverseInequalityReport> grids;
  double coarse_max = 0.0;
  double fine_max = 0.0;
  bool pass = false;  ///< fine max <= growth_limit * coarse max and all samples consistent
};

/// Runs the ratio over a refinement sequence; the first half of the grids is
/// "coarse", the rest "fine".
inline InverseInequalityStudy inverse_inequality_study(const std::vector<FractionalOperator>& ops, int samples,
                                                       std::uint64_t seed, double growth_limit = 1.2) {
  InverseInequalityStudy st;
  bool consistent = true;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    st.grids.push_back(inverse_inequality_ratios(ops[i], samples, seed + i));
    consistent = consistent && st.grids.back().consistent && st.grids.back().min_ratio >= 0.0;
  }
  const std::size_t half = std::max<std::size_t>(1, ops.size() / 2);
  for (std::size_t i = 0; i < st.grids.size(); ++i) {
    if (i < half) st.coarse_max = std::max(st.coarse_max, st.grids[i].max_ratio);
    else st.fine_max = std::max(st.fine_max, st.grids[i].max_ratio);
  }
  st.pass = consistent && st.coarse_max > 0.0 && st.fine_max <= growth_limit * st.coarse_max;
  return st;
}

// ---------------------------------------------------------------------------
// Binary block cache keyed by (L, N, k, lambda, tolerance).

namespace operator_cache {

inline constexpr char kMagic[8] = {'F', 'R', 'A', 'C', 'D', 'G', 'O', 'P'};
inline constexpr std::uint32_t kVersion = 1;

inline std::string hex_bits(double v) {
  std::ostringstream os;
  os << std::hex << std::bit_cast<std::uint64_t>(v);
  return os.str();
}

inline std::filesystem::path file_for(const std::filesystem::path& dir, double L, int N, int k, double lambda,
                                      double tol) {
  return dir / ("blocks_N" + std::to_string(N) + "_k" + std::to_string(k) + "_L" + hex_bits(L) + "_lam" +
                hex_bits(lambda) + "_eps" + hex_bits(tol) + ".bin");
}

template <class T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
bool get(std::istream& is, T& v) {
  return static_cast<bool>(is.read(reinterpret_cast<char*>(&v), sizeof(T)));
}

inline void save(const FractionalOperator& op, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("operator cache: cannot write " + path.string());
  os.write(kMagic, sizeof(kMagic));
  put(os, kVersion);
  put(os, op.mesh().length());
  put(os, static_cast<std::int32_t>(op.cells()));
  put(os, static_cast<std::int32_t>(op.degree()));
  put(os, op.lambda());
  put(os, op.tolerance());
  put(os, op.c_lambda());
  put(os, static_cast<std::uint64_t>(op.blocks().size()));
  os.write(reinterpret_cast<const char*>(op.blocks().data()),
           static_cast<std::streamsize>(op.blocks().size() * sizeof(double)));
}

/// Loads a cached operator if the file exists and its header matches the key exactly.
inline std::optional<FractionalOperator> load(const std::filesystem::path& path, const Mesh& mesh, int k,
                                              double lambda, double tol) {
  std::ifstream is(path, std::ios::binary);
  if (!is) return std::nullopt;
  char magic[8];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) return std::nullopt;
  std::uint32_t version = 0;
  double L = 0, lam = 0, eps = 0, c = 0;
  std::int32_t N = 0, deg = 0;
  std::uint64_t count = 0;
  if (!get(is, version) || version != kVersion) return std::nullopt;
  if (!get(is, L) || !get(is, N) || !get(is, deg) || !get(is, lam) || !get(is, eps) || !get(is, c) || !get(is, count))
    return std::nullopt;
  if (L != mesh.length() || N != mesh.cells() || deg != k || lam != lambda || eps != tol) return std::nullopt;
  if (count != static_cast<std::uint64_t>(N) * detail::dof2(k)) return std::nullopt;
  std::vector<double> blocks(count);
  if (!is.read(reinterpret_cast<char*>(blocks.data()), static_cast<std::streamsize>(count * sizeof(double))))
    return std::nullopt;
  return FractionalOperator(mesh, k, lambda, c, tol, std::move(blocks));
}

}  // namespace operator_cache

/// assemble() backed by the on-disk cache in `cache_dir` (no caching when empty).
inline FractionalOperator assemble_cached(const Mesh& mesh, int k, double lambda, double tol,
                                          const std::filesystem::path& cache_dir) {
  if (cache_dir.empty()) return assemble(mesh, k, lambda, tol);
  const auto path = operator_cache::file_for(cache_dir, mesh.length(), mesh.cells(), k, lambda, tol);
  if (auto hit = operator_cache::load(path, mesh, k, lambda, tol)) return std::move(*hit);
  FractionalOperator op = assemble(mesh, k, lambda, tol);
  std::filesystem::create_directories(cache_dir);
  // write aside and rename so concurrent readers never see a partial file
  std::random_device rd;
  auto tmp = path;
  tmp += ".tmp" + std::to_string(rd());
  operator_cache::save(op, tmp);
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) std::filesystem::remove(tmp, ec);
  return op;
}

}  // namespace fracdg
