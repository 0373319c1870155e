#pragma once

// Left/right Gauss-Radau projections, the time-dependent upwind choice between
// them, and counting of per-cell switches along a run.

#include "fracdg/errors.hpp"
#include "fracdg/mesh.hpp"
#include "fracdg/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <type_traits>
#include <string>
#include <vector>

namespace fracdg {

enum class RadauSide : std::uint8_t { left, right };

inline std::string to_string(RadauSide s) { return s == RadauSide::left ? "left" : "right"; }

/// Per-cell choice of Gauss-Radau projection.
using ProjectionChoice = std::vector<RadauSide>;

/// Degree-k polynomial per cell that is orthogonal to P^{k-1} and matches v at
/// the included endpoint (x_j^+ for left, x_{j+1}^- for right). In the
/// orthonormal basis the orthogonality rows fix c_0..c_{k-1} to the L2 moments
/// and the endpoint row determines c_k.
template <class F>
void gauss_radau_cell(F&& v, const Mesh& mesh, int k, int j, RadauSide side, DGFunction& out,
                            const QuadratureRule& rule) {
  const double h = mesh.h();
  const double sh = std::sqrt(h);
  std::vector<double> p(k + 1);
  for (int m = 0; m < k; ++m) out(j, m) = 0.0;
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const double val = v(mesh.point(j, rule.nodes[q])) * rule.weights[q] * sh;
    ref_basis::values(k, rule.nodes[q], p.data());
    for (int m = 0; m < k; ++m) out(j, m) += val * p[m];
  }
  const bool right = side == RadauSide::right;
  const double target = v(right ? mesh.node(j + 1) : mesh.node(j));
  double partial = 0.0;
  for (int m = 0; m < k; ++m) partial += out(j, m) * (right ? basis_right(m, h) : basis_left(m, h));
  out(j, k) = (target - partial) / (right ? basis_right(k, h) : basis_left(k, h));
}

namespace detail {
inline const QuadratureRule& radau_rule(int k, int quad_points) {
  return gauss_legendre(quad_points > 0 ? quad_points : k + 2);
}
}  // namespace detail

template <class F>
DGFunction gauss_radau_project(F&& v, const Mesh& mesh, int k, RadauSide side, int quad_points = 0) {
  if (k < 1) throw InvalidArgument("gauss_radau_project: degree must be >= 1");
  DGFunction out(mesh, k);
  const QuadratureRule& rule = detail::radau_rule(k, quad_points);
  for (int j = 0; j < mesh.cells(); ++j) gauss_radau_cell(v, mesh, k, j, side, out, rule);
  return out;
}

/// Per-cell dispatch to the left or right projection.
template <class F>
DGFunction upwind_project(F&& v, const ProjectionChoice& choice, const Mesh& mesh, int k, int quad_points = 0) {
  if (static_cast<int>(choice.size()) != mesh.cells()) {
    throw InvalidArgument("upwind_project: choice size does not match the mesh");
  }
  if (k < 1) throw InvalidArgument("upwind_project: degree must be >= 1");
  DGFunction out(mesh, k);
  const QuadratureRule& rule = detail::radau_rule(k, quad_points);
  for (int j = 0; j < mesh.cells(); ++j) gauss_radau_cell(v, mesh, k, j, choice[j], out, rule);
  return out;
}

/// Sample points of cell j used for the pointwise sign conditions: both
/// endpoints and the k+2 Gauss nodes.
inline std::vector<double> choice_samples(const Mesh& mesh, int j) {
  const QuadratureRule& rule = gauss_legendre(mesh.degree() + 2);
  std::vector<double> xs;
  xs.reserve(rule.size() + 2);
  xs.push_back(mesh.node(j));
  for (double s : rule.nodes) xs.push_back(mesh.point(j, s));
  xs.push_back(mesh.node(j + 1));
  return xs;
}

/// Upwind projection choice. Level 0: right where f'(u) > 0 on the whole cell,
/// left otherwise. Later levels: right where f'(u) > threshold, left where
/// f'(u) < -threshold, previous choice elsewhere.
///
/// `fprime_of_x` is either x -> f'(u(x)) or (j, x) -> f'(u(x)) restricted to
/// cell j; the latter resolves shared endpoints of discontinuous data.
template <class F>
ProjectionChoice upwind_projection_choice(F&& fprime_of_x, const Mesh& mesh, double threshold,
                                          const std::optional<ProjectionChoice>& previous, int level) {
  if (level < 0) throw InvalidArgument("upwind_projection_choice: negative time level");
  if (level > 0 && !previous) {
    throw InvalidArgument("upwind_projection_choice: previous choice required at time level " + std::to_string(level));
  }
  if (level > 0 && static_cast<int>(previous->size()) != mesh.cells()) {
    throw InvalidArgument("upwind_projection_choice: previous choice size does not match the mesh");
  }
  ProjectionChoice out(mesh.cells());
  for (int j = 0; j < mesh.cells(); ++j) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (double x : choice_samples(mesh, j)) {
      double d = 0.0;
      if constexpr (std::is_invocable_v<F&, int, double>) d = fprime_of_x(j, x);
      else d = fprime_of_x(x);
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    if (level == 0) {
      out[j] = lo > 0.0 ? RadauSide::right : RadauSide::left;
    } else if (lo > threshold) {
      out[j] = RadauSide::right;
    } else if (hi < -threshold) {
      out[j] = RadauSide::left;
    } else {
      out[j] = (*previous)[j];
    }
  }
  return out;
}

struct SwitchCounter {
  std::vector<int> counts;  ///< #O_j per cell
  int levels = 0;           ///< number of transitions examined

  [[nodiscard]] int max_count() const { return counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end()); }
};

/// Counts, per cell, the levels n with choice[n+1] != choice[n].
inline SwitchCounter count_switches(const std::vector<ProjectionChoice>& trajectory) {
  SwitchCounter sc;
  if (trajectory.empty()) return sc;
  const std::size_t cells = trajectory.front().size();
  sc.counts.assign(cells, 0);
  for (std::size_t n = 1; n < trajectory.size(); ++n) {
    if (trajectory[n].size() != cells) throw InvalidArgument("count_switches: inconsistent choice sizes");
    for (std::size_t j = 0; j < cells; ++j)
      if (trajectory[n][j] != trajectory[n - 1][j]) ++sc.counts[j];
  }
  sc.levels = static_cast<int>(trajectory.size()) - 1;
  return sc;
}

struct SwitchBoundReport {
  double final_time = 0.0;
  double h = 0.0;
  int alpha = 2;
  double c_t_alpha = 0.0;
  int max_count = 0;
  int levels = 0;
  double bound = 0.0;  ///< alpha T C^{1/alpha} h^{-1/alpha}
  bool pass = false;
};

inline SwitchBoundReport verify_switch_bound(const SwitchCounter& counter, double T, double h, int alpha,
                                             double c_t_alpha) {
  if (alpha < 1 || !(h > 0.0) || T < 0.0 || c_t_alpha < 0.0) throw InvalidArgument("verify_switch_bound: bad arguments");
  SwitchBoundReport r;
  r.final_time = T;
  r.h = h;
  r.alpha = alpha;
  r.c_t_alpha = c_t_alpha;
  r.max_count = counter.max_count();
  r.levels = counter.levels;
  r.bound = alpha * T * std::pow(c_t_alpha, 1.0 / alpha) * std::pow(h, -1.0 / alpha);
  r.pass = r.max_count <= r.bound;
  return r;
}

}  // namespace fracdg
