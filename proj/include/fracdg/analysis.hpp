#pragma once

// Error norms of a run against a reference field, experimental orders of
// convergence, and the per-step residual of the discrete energy identity.

#include "fracdg/errors.hpp"
#include "fracdg/fractional.hpp"
#include "fracdg/mesh.hpp"
#include "fracdg/projections.hpp"
#include "fracdg/reference.hpp"
#include "fracdg/scheme.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

namespace fracdg {

/// (sum_j [[phi]]_j^2)^{1/2}.
inline double jump_seminorm(const DGFunction& phi) {
  double s = 0.0;
  for (int j = 0; j < phi.mesh().cells(); ++j) {
    const double d = jump(phi, j);
    s += d * d;
  }
  return std::sqrt(s);
}

/// ||v - phi||_{L2} by a per-cell Gauss rule with `points` nodes.
template <class F>
double l2_error(F&& v, const DGFunction& phi, int points) {
  const Mesh& mesh = phi.mesh();
  const QuadratureRule& rule = gauss_legendre(points);
  double s = 0.0;
  for (int j = 0; j < mesh.cells(); ++j) {
    double cell = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double d = v(mesh.point(j, rule.nodes[q])) - phi.cell_value(j, rule.nodes[q]);
      cell += rule.weights[q] * d * d;
    }
    s += cell * mesh.h();
  }
  return std::sqrt(s);
}

struct ErrorRecord {
  double h = 0.0;
  double tau = 0.0;  ///< nominal step (largest step of the run)
  int cells = 0;
  int degree = 0;
  double lambda = 0.0;
  double l2_error = 0.0;      ///< at the final time
  double energy_error = 0.0;  ///< max_n ||e^n|| + (sum_{m<n} tau_m |e^m|^2)^{1/2}
  double jump = 0.0;          ///< jump seminorm of the final error
  double wall_time = 0.0;     ///< seconds; informational only
};

struct ErrorNormOptions {
  int l2_points = 0;         ///< per-cell rule for L2 errors; 0 selects k+8
  int projection_points = 0; ///< rule for the degree-(k+3) interpolant; 0 selects k+8
};

/// Errors of a trajectory with snapshots at every step. `aux` is the
/// fractional operator of degree k+3 on the same grid; the seminorm of
/// u - u_h is evaluated on the degree-(k+3) representation of u.
template <class Exact>
ErrorRecord error_norms(const TrajectoryRecord& traj, Exact&& exact, const FractionalOperator& aux,
                        ErrorNormOptions opts = {}) {
  if (traj.snapshots.empty() || traj.snapshots.size() != traj.times.size()) {
    throw InvalidArgument("error_norms: a snapshot at every time level is required (cadence 1)");
  }
  for (std::size_t n = 0; n < traj.snapshot_steps.size(); ++n)
    if (traj.snapshot_steps[n] != static_cast<int>(n)) throw InvalidArgument("error_norms: snapshots are not consecutive");
  const DGFunction& first = traj.snapshots.front();
  const Mesh& mesh = first.mesh();
  const int k = first.degree();
  if (!aux.mesh().same_grid(mesh) || aux.degree() < k) {
    throw InvalidArgument("error_norms: auxiliary operator must live on the same grid with degree >= k");
  }
  const int lq = opts.l2_points > 0 ? opts.l2_points : k + 8;
  const int pq = opts.projection_points > 0 ? opts.projection_points : aux.degree() + 5;

  ErrorRecord rec;
  rec.h = mesh.h();
  rec.cells = mesh.cells();
  rec.degree = k;
  rec.lambda = aux.lambda();
  double dissipated = 0.0;  // sum_{m<n} tau_m |e^m|^2
  for (std::size_t n = 0; n < traj.snapshots.size(); ++n) {
    const double t = traj.times[n];
    auto un = [&](double x) { return exact(t, x); };
    const double l2 = l2_error(un, traj.snapshots[n], lq);
    rec.energy_error = std::max(rec.energy_error, l2 + std::sqrt(dissipated));
    if (n + 1 < traj.snapshots.size()) {
      const double tau = traj.times[n + 1] - t;
      rec.tau = std::max(rec.tau, tau);
      DGFunction e = l2_project(un, mesh, aux.degree(), pq);
      e -= raise_degree(traj.snapshots[n], aux.degree());
      dissipated += tau * seminorm_squared(aux, e);
    } else {
      rec.l2_error = l2;
    }
  }
  rec.jump = jump_seminorm(traj.snapshots.back());
  return rec;
}

struct EocRow {
  double h = 0.0;
  double error = 0.0;
  std::optional<double> eoc;
};

using EocTable = std::vector<EocRow>;

/// eoc_i = log(e_{i-1}/e_i) / log(h_{i-1}/h_i); null for the first row or
/// when an error is not positive.
inline EocTable eoc(const std::vector<std::pair<double, double>>& rows) {
  if (rows.empty()) throw InvalidArgument("eoc: at least one row required");
  EocTable out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EocRow r{rows[i].first, rows[i].second, std::nullopt};
    if (!(r.h > 0.0)) throw InvalidArgument("eoc: mesh sizes must be positive");
    if (i > 0) {
      const double hp = rows[i - 1].first;
      const double ep = rows[i - 1].second;
      if (!(r.h < hp)) throw InvalidArgument("eoc: mesh sizes must be strictly decreasing");
      if (ep > 0.0 && r.error > 0.0) r.eoc = std::log(ep / r.error) / std::log(hp / r.h);
    }
    out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Energy identity.

struct EnergyIdentityStep {
  int step = 0;
  double t = 0.0;
  double lhs = 0.0;       ///< ||xi^{n+1}||^2 - ||xi^n||^2
  double rhs = 0.0;
  double residual = 0.0;  ///< |lhs - rhs|
  double scale = 0.0;     ///< largest participating term
  double relative = 0.0;  ///< residual / scale (0 when every term vanishes)
};

struct EnergyIdentityReport {
  std::vector<EnergyIdentityStep> steps;
  double max_relative = 0.0;
  int quad_points = 0;
};

namespace detail {

using Vec = Eigen::VectorXd;

inline Vec to_vec(const DGFunction& f) {
  auto c = f.coefficients();
  return Eigen::Map<const Vec>(c.data(), static_cast<Eigen::Index>(c.size()));
}
inline Vec to_vec(const std::vector<double>& v) {
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// H_j(v, phi_{j,m}) for a continuous function v: cell quadrature of
// f(v) phi' plus point fluxes f(v(x_j)).
template <class F>
Vec exact_convective(const FluxModel& model, F&& v, const Mesh& mesh, int k, int points) {
  const QuadratureRule& rule = gauss_legendre(points);
  const double h = mesh.h();
  const double isq = 1.0 / std::sqrt(h);
  Vec out = Vec::Zero(static_cast<Eigen::Index>(mesh.cells()) * (k + 1));
  std::vector<double> d(k + 1);
  for (int j = 0; j < mesh.cells(); ++j) {
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double fv = model.f(v(mesh.point(j, rule.nodes[q])));
      ref_basis::derivatives(k, rule.nodes[q], d.data());
      for (int m = 0; m <= k; ++m) out(j * (k + 1) + m) += rule.weights[q] * fv * d[m] * isq;
    }
    const double fl = model.f(v(mesh.node(j)));
    const double fr = model.f(v(mesh.node(j + 1)));
    for (int m = 0; m <= k; ++m) out(j * (k + 1) + m) += -fr * basis_right(m, h) + fl * basis_left(m, h);
  }
  return out;
}

}  // namespace detail

/// Runs the scheme for a linear flux with Fourier-exact solution and returns,
/// per step, both sides of
///   ||xi^{n+1}||^2 - ||xi^n||^2 = ||xi^{n+1} - zeta||^2 + K(xi) + L(zeta)
///       - tau (D(zeta_pi, zeta) + D(xi_pi, xi)) - tau (|xi|^2 + |zeta|^2),
/// with xi = u_h - Pi u, zeta = w_h - Pi w and Pi the upwind projection.
/// All pairings with non-discrete functions use `quad_points` per cell
/// (0 selects k+12).
inline EnergyIdentityReport energy_identity_residual(const SchemeConfig& cfg, const FourierSolution& exact,
                                                     int quad_points = 0) {
  const FluxModel& model = cfg.flux.model();
  if (!model.linear) throw Unsupported("energy identity: only linear fluxes have an exact oracle");
  if (cfg.source) throw Unsupported("energy identity: source terms are not part of the identity");
  if (std::abs(exact.speed() - model.speed) > 1e-14 * (1.0 + std::abs(model.speed)) ||
      exact.lambda() != cfg.op->lambda() || exact.length() != cfg.mesh().length()) {
    throw InvalidArgument("energy identity: exact solution does not match the scheme configuration");
  }
  using detail::Vec;
  const Mesh& mesh = cfg.mesh();
  const int k = cfg.degree();
  const int q = quad_points > 0 ? quad_points : k + 12;
  const FractionalOperator& B = *cfg.op;
  const double h = mesh.h();
  const double lambda = B.lambda();

  auto moments = [&](auto&& v) { return detail::to_vec(l2_project(v, mesh, k, q)); };
  auto project = [&](auto&& v, const ProjectionChoice& ch) { return detail::to_vec(upwind_project(v, ch, mesh, k, q)); };
  auto apply_B = [&](const Vec& v) {
    return detail::to_vec(B.apply(std::span<const double>(v.data(), static_cast<std::size_t>(v.size()))));
  };
  auto fprime = [&](double) { return model.speed; };

  const std::vector<double> levels = time_levels(cfg);
  EnergyIdentityReport rep;
  rep.quad_points = q;

  ProjectionChoice choice = upwind_projection_choice(fprime, mesh, h, std::nullopt, 0);
  DGFunction uh = upwind_project([&](double x) { return exact.value(0.0, x); }, choice, mesh, k, q);

  for (std::size_t n = 0; n + 1 < levels.size(); ++n) {
    const double t = levels[n];
    const double tau = levels[n + 1] - t;
    const double t1 = levels[n + 1];
    auto u = [&](double x) { return exact.value(t, x); };
    auto w = [&](double x) { return exact.value(t, x) + tau * exact.dt(t, x); };
    auto u1 = [&](double x) { return exact.value(t1, x); };
    auto gu = [&](double x) { return exact.frac(t, x); };
    auto gw = [&](double x) {
      return exact.modal_sum(t, x, [&](int kk) {
        const double sym = -std::pow(std::abs(exact.wavenumber(kk)), lambda);
        return sym * (1.0 + tau * exact.growth(kk));
      });
    };

    const RkStages st = rk2_stages(cfg, uh, t, tau);
    const ProjectionChoice next_choice = upwind_projection_choice(fprime, mesh, h, choice, static_cast<int>(n) + 1);

    const Vec Pu = project(u, choice);
    const Vec Pw = project(w, choice);
    const Vec Pu1 = project(u1, next_choice);
    const Vec mu = moments(u);
    const Vec mw = moments(w);
    const Vec mu1 = moments(u1);
    const Vec mgu = moments(gu);
    const Vec mgw = moments(gw);
    const Vec hu = detail::exact_convective(model, u, mesh, k, q);
    const Vec hw = detail::exact_convective(model, w, mesh, k, q);
    const Vec Huh = detail::to_vec(convective_operator(cfg.flux, uh));
    const Vec Hwh = detail::to_vec(convective_operator(cfg.flux, st.w));

    const Vec xi = detail::to_vec(uh) - Pu;
    const Vec zeta = detail::to_vec(st.w) - Pw;
    const Vec xi1 = detail::to_vec(st.next) - Pu1;
    const Vec mE = mu1 - 0.5 * (mu + mw) - 0.5 * tau * (hw + mgw);

    const double K = ((mw - Pw) - (mu - Pu)).dot(xi) + tau * (Huh - hu).dot(xi);
    const double Lz = (2.0 * (mu1 - Pu1) - (mw - Pw) - (mu - Pu) - 2.0 * mE).dot(zeta) + tau * (Hwh - hw).dot(zeta);
    const double Dz = mgw.dot(zeta) - apply_B(Pw).dot(zeta);
    const double Dx = mgu.dot(xi) - apply_B(Pu).dot(xi);
    // dissipation -tau(|xi|^2 + |zeta|^2); throws if the operator is not semidefinite on these errors
    auto as_function = [&](const Vec& v) { return DGFunction(mesh, k, std::vector<double>(v.data(), v.data() + v.size())); };
    const double S = -tau * (seminorm_squared(B, as_function(xi)) + seminorm_squared(B, as_function(zeta)));
    const double jump_term = (xi1 - zeta).squaredNorm();

    EnergyIdentityStep s;
    s.step = static_cast<int>(n);
    s.t = t;
    s.lhs = xi1.squaredNorm() - xi.squaredNorm();
    s.rhs = jump_term + K + Lz - tau * (Dz + Dx) + S;
    s.residual = std::abs(s.lhs - s.rhs);
    s.scale = std::max({xi1.squaredNorm(), xi.squaredNorm(), std::abs(s.lhs), jump_term, std::abs(K), std::abs(Lz),
                        std::abs(tau * Dz), std::abs(tau * Dx), std::abs(S)});
    s.relative = s.scale > 0.0 ? s.residual / s.scale : 0.0;
    rep.max_relative = std::max(rep.max_relative, s.relative);
    rep.steps.push_back(s);

    uh = st.next;
    choice = next_choice;
  }
  return rep;
}

}  // namespace fracdg
