#pragma once

// Uniform periodic mesh and the discontinuous piecewise-polynomial space on it.
// Each cell carries the L2-orthonormal scaled Legendre basis
//   phi_{j,m}(x) = h^{-1/2} sqrt(2m+1) P_m(2 (x - x_j)/h - 1),
// so the mass matrix is the identity and coefficients are L2 moments.

#include "fracdg/errors.hpp"
#include "fracdg/quadrature.hpp"

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace fracdg {

enum class Side { minus, plus };

class Mesh {
 public:
  Mesh(double length, int cells, int degree) : length_(length), cells_(cells), degree_(degree) {
    if (!(length > 0.0) || !std::isfinite(length)) throw InvalidArgument("Mesh: domain length must be positive");
    if (cells < 2) throw InvalidArgument("Mesh: need at least 2 cells");
    if (degree < 1) throw InvalidArgument("Mesh: polynomial degree must be >= 1");
    h_ = length / cells;
  }

  [[nodiscard]] double length() const { return length_; }
  [[nodiscard]] int cells() const { return cells_; }
  [[nodiscard]] double h() const { return h_; }
  [[nodiscard]] int degree() const { return degree_; }

  /// Volume rule with degree+2 points per cell (exact to degree 2k+3).
  [[nodiscard]] const QuadratureRule& quadrature() const { return gauss_legendre(degree_ + 2); }

  [[nodiscard]] int wrap(int j) const { return ((j % cells_) + cells_) % cells_; }
  [[nodiscard]] double node(int j) const { return j * h_; }
  [[nodiscard]] double point(int j, double s) const { return (j + s) * h_; }

  /// Cell index and local coordinate s in [0,1) of a point, after periodic wrap.
  void locate(double x, int& cell, double& s) const {
    if (!std::isfinite(x)) throw InvalidArgument("Mesh::locate: non-finite coordinate");
    double y = std::fmod(x, length_);
    if (y < 0.0) y += length_;
    if (!(y >= 0.0 && y < length_)) y = 0.0;
    double r = y / h_;
    cell = static_cast<int>(std::floor(r));
    if (cell >= cells_) cell = cells_ - 1;
    s = r - cell;
  }

  [[nodiscard]] bool same_grid(const Mesh& o) const { return length_ == o.length_ && cells_ == o.cells_; }

 private:
  double length_;
  int cells_;
  int degree_;
  double h_;
};

inline Mesh build_mesh(double length, int cells, int degree) { return Mesh(length, cells, degree); }

/// Values of the physical basis phi_{j,0..k} at the left / right cell ends.
inline double basis_left(int m, double h) { return (m % 2 == 0 ? 1.0 : -1.0) * std::sqrt((2.0 * m + 1.0) / h); }
inline double basis_right(int m, double h) { return std::sqrt((2.0 * m + 1.0) / h); }

class DGFunction {
 public:
  DGFunction(const Mesh& mesh, int degree)
      : mesh_(mesh), degree_(degree), coeffs_(static_cast<std::size_t>(mesh.cells()) * (degree + 1), 0.0) {
    if (degree < 0) throw InvalidArgument("DGFunction: negative degree");
  }
  DGFunction(const Mesh& mesh, int degree, std::vector<double> coeffs)
      : mesh_(mesh), degree_(degree), coeffs_(std::move(coeffs)) {
    if (coeffs_.size() != static_cast<std::size_t>(mesh.cells()) * (degree + 1)) {
      throw InvalidArgument("DGFunction: coefficient count does not match mesh and degree");
    }
  }

  [[nodiscard]] const Mesh& mesh() const { return mesh_; }
  [[nodiscard]] int degree() const { return degree_; }
  [[nodiscard]] int dofs_per_cell() const { return degree_ + 1; }
  [[nodiscard]] std::size_t size() const { return coeffs_.size(); }

  double& operator()(int j, int m) { return coeffs_[static_cast<std::size_t>(j) * (degree_ + 1) + m]; }
  [[nodiscard]] double operator()(int j, int m) const {
    return coeffs_[static_cast<std::size_t>(j) * (degree_ + 1) + m];
  }

  [[nodiscard]] std::span<const double> coefficients() const { return coeffs_; }
  [[nodiscard]] std::span<double> coefficients() { return coeffs_; }
  [[nodiscard]] std::span<const double> cell(int j) const {
    return std::span<const double>(coeffs_).subspan(static_cast<std::size_t>(j) * (degree_ + 1), degree_ + 1);
  }

  /// Value of the cell-j polynomial at local coordinate s in [0,1].
  [[nodiscard]] double cell_value(int j, double s) const {
    std::vector<double> p(degree_ + 1);
    ref_basis::values(degree_, s, p.data());
    double v = 0.0;
    for (int m = 0; m <= degree_; ++m) v += (*this)(j, m) * p[m];
    return v / std::sqrt(mesh_.h());
  }

  [[nodiscard]] bool compatible(const DGFunction& o) const {
    return degree_ == o.degree_ && mesh_.same_grid(o.mesh_);
  }

  DGFunction& operator+=(const DGFunction& o) {
    require_compatible(o);
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += o.coeffs_[i];
    return *this;
  }
  DGFunction& operator-=(const DGFunction& o) {
    require_compatible(o);
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= o.coeffs_[i];
    return *this;
  }
  DGFunction& operator*=(double a) {
    for (double& c : coeffs_) c *= a;
    return *this;
  }
  friend DGFunction operator+(DGFunction a, const DGFunction& b) { return a += b; }
  friend DGFunction operator-(DGFunction a, const DGFunction& b) { return a -= b; }
  friend DGFunction operator*(double s, DGFunction a) { return a *= s; }

  void require_compatible(const DGFunction& o) const {
    if (!compatible(o)) throw InvalidArgument("DGFunction: mesh or degree mismatch");
  }

 private:
  Mesh mesh_;
  int degree_;
  std::vector<double> coeffs_;
};

/// Point value of the polynomial of the cell containing x (right-continuous at nodes).
inline double evaluate(const DGFunction& phi, double x) {
  int j = 0;
  double s = 0.0;
  phi.mesh().locate(x, j, s);
  return phi.cell_value(j, s);
}

/// phi(x_j^-) (from cell j-1) or phi(x_j^+) (from cell j); j wraps modulo N.
inline double trace(const DGFunction& phi, int j, Side side) {
  const Mesh& mesh = phi.mesh();
  const double h = mesh.h();
  double v = 0.0;
  if (side == Side::minus) {
    const int c = mesh.wrap(j - 1);
    for (int m = 0; m <= phi.degree(); ++m) v += phi(c, m) * basis_right(m, h);
  } else {
    const int c = mesh.wrap(j);
    for (int m = 0; m <= phi.degree(); ++m) v += phi(c, m) * basis_left(m, h);
  }
  return v;
}

/// [[phi]]_j = phi(x_j^+) - phi(x_j^-).
inline double jump(const DGFunction& phi, int j) { return trace(phi, j, Side::plus) - trace(phi, j, Side::minus); }

/// L2 projection onto the degree-k space; quad_points <= 0 selects k+2.
template <class F>
DGFunction l2_project(F&& v, const Mesh& mesh, int k, int quad_points = 0) {
  const QuadratureRule& rule = gauss_legendre(quad_points > 0 ? quad_points : k + 2);
  DGFunction out(mesh, k);
  std::vector<double> p(k + 1);
  const double sh = std::sqrt(mesh.h());
  for (int j = 0; j < mesh.cells(); ++j) {
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double val = v(mesh.point(j, rule.nodes[q])) * rule.weights[q] * sh;
      ref_basis::values(k, rule.nodes[q], p.data());
      for (int m = 0; m <= k; ++m) out(j, m) += val * p[m];
    }
  }
  return out;
}

inline double inner_product(const DGFunction& a, const DGFunction& b) {
  a.require_compatible(b);
  double s = 0.0;
  auto ca = a.coefficients();
  auto cb = b.coefficients();
  for (std::size_t i = 0; i < ca.size(); ++i) s += ca[i] * cb[i];
  return s;
}

inline double l2_norm(const DGFunction& a) { return std::sqrt(inner_product(a, a)); }

/// Integral of phi over the torus, sum_j h * (cell mean).
inline double total_mass(const DGFunction& phi) {
  double s = 0.0;
  const double sh = std::sqrt(phi.mesh().h());
  for (int j = 0; j < phi.mesh().cells(); ++j) s += phi(j, 0) * sh;
  return s;
}

/// Same function expressed with degree `to` >= degree (the basis is hierarchical).
inline DGFunction raise_degree(const DGFunction& phi, int to) {
  if (to < phi.degree()) throw InvalidArgument("raise_degree: target degree below source degree");
  DGFunction out(phi.mesh(), to);
  for (int j = 0; j < phi.mesh().cells(); ++j)
    for (int m = 0; m <= phi.degree(); ++m) out(j, m) = phi(j, m);
  return out;
}

}  // namespace fracdg
