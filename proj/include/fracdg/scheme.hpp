#pragma once

// Convective DG operator, the two-stage explicit Runge-Kutta update and the
// time-marching loop.
//
// With the orthonormal basis every stage is a coefficient update:
//   w   = u + tau (H(u) + D(u) + S(t))
//   u+  = (u + w)/2 + tau/2 (H(w) + D(w) + S(t + tau))
// where H is the upwind convective form, D the fractional form and S the L2
// projection of an optional source.

#include "fracdg/errors.hpp"
#include "fracdg/flux.hpp"
#include "fracdg/fractional.hpp"
#include "fracdg/mesh.hpp"
#include "fracdg/projections.hpp"
#include "fracdg/reference.hpp"

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace fracdg {

struct SchemeConfig {
  SchemeConfig(NumericalFlux flux_, std::shared_ptr<const FractionalOperator> op_, double final_time_,
               double cfl_ = 0.1)
      : flux(std::move(flux_)), op(std::move(op_)), cfl(cfl_), final_time(final_time_) {
    if (!op) throw InvalidArgument("SchemeConfig: fractional operator required");
    if (!(cfl > 0.0)) throw InvalidArgument("SchemeConfig: CFL constant must be positive");
    if (!(final_time >= 0.0)) throw InvalidArgument("SchemeConfig: final time must be >= 0");
  }

  NumericalFlux flux;
  std::shared_ptr<const FractionalOperator> op;
  double cfl = 0.1;
  double final_time = 0.0;
  std::function<double(double, double)> source;  ///< s(t, x); empty means none
  int cadence = 1;                                ///< snapshot every `cadence` steps (final step always kept)
  std::optional<int> fixed_steps;                 ///< uniform tau = T / steps instead of the CFL rule

  [[nodiscard]] const Mesh& mesh() const { return op->mesh(); }
  [[nodiscard]] int degree() const { return op->degree(); }
};

/// tau = cfl h for k = 1, cfl h^{4/3} for k >= 2.
inline double nominal_time_step(double cfl, double h, int k) {
  if (!(cfl > 0.0) || !(h > 0.0) || k < 1) throw InvalidArgument("nominal_time_step: bad arguments");
  return k == 1 ? cfl * h : cfl * std::pow(h, 4.0 / 3.0);
}

/// Time levels 0 = t_0 < ... < t_n = T with uniform spacing tau except for a
/// shortened final step.
inline std::vector<double> time_levels(double T, double tau) {
  if (!(T >= 0.0) || !(tau > 0.0)) throw InvalidArgument("time_levels: bad arguments");
  std::vector<double> t{0.0};
  if (T == 0.0) return t;
  const auto n = static_cast<long long>(std::ceil(T / tau * (1.0 - 1e-12)));
  for (long long i = 1; i < n; ++i) t.push_back(static_cast<double>(i) * tau);
  t.push_back(T);
  return t;
}

inline std::vector<double> uniform_time_levels(double T, int steps) {
  if (!(T >= 0.0) || steps < 1) throw InvalidArgument("uniform_time_levels: bad arguments");
  std::vector<double> t(steps + 1);
  for (int i = 0; i <= steps; ++i) t[i] = T * i / steps;
  t[steps] = T;
  return t;
}

inline std::vector<double> time_levels(const SchemeConfig& cfg) {
  if (cfg.fixed_steps) return uniform_time_levels(cfg.final_time, *cfg.fixed_steps);
  return time_levels(cfg.final_time, nominal_time_step(cfg.cfl, cfg.mesh().h(), cfg.degree()));
}

/// Non-finite state or state outside the flux working interval.
class BlowUpError : public std::runtime_error {
 public:
  BlowUpError(const std::string& what, int step, double t, double tau, double h)
      : std::runtime_error(what + " (step " + std::to_string(step) + ", t=" + std::to_string(t) + ", tau=" +
                           std::to_string(tau) + ", tau/h=" + std::to_string(tau / h) + ")"),
        step_(step), t_(t), tau_(tau), h_(h) {}

  [[nodiscard]] int step() const { return step_; }
  [[nodiscard]] double time() const { return t_; }
  [[nodiscard]] double tau() const { return tau_; }
  [[nodiscard]] double h() const { return h_; }
  [[nodiscard]] const std::shared_ptr<const DGFunction>& last_good() const { return last_good_; }
  void set_last_good(std::shared_ptr<const DGFunction> u) { last_good_ = std::move(u); }

 private:
  int step_;
  double t_;
  double tau_;
  double h_;
  std::shared_ptr<const DGFunction> last_good_;
};

namespace detail {

struct CellTables {
  std::vector<double> values;       // [q][m]
  std::vector<double> derivatives;  // [q][m]
};

inline const CellTables& cell_tables(int k) {
  static thread_local std::vector<std::unique_ptr<CellTables>> cache;
  if (static_cast<int>(cache.size()) <= k) cache.resize(k + 1);
  if (!cache[k]) {
    auto t = std::make_unique<CellTables>();
    const QuadratureRule& rule = gauss_legendre(k + 2);
    t->values.resize(rule.size() * (k + 1));
    t->derivatives.resize(rule.size() * (k + 1));
    for (std::size_t q = 0; q < rule.size(); ++q) {
      ref_basis::values(k, rule.nodes[q], &t->values[q * (k + 1)]);
      ref_basis::derivatives(k, rule.nodes[q], &t->derivatives[q * (k + 1)]);
    }
    cache[k] = std::move(t);
  }
  return *cache[k];
}

inline double interface_flux(const NumericalFlux& flux, const DGFunction& u, int node) {
  return flux(trace(u, node, Side::minus), trace(u, node, Side::plus));
}

// int_{I_j} f(u) phi_{j,m}' dx for m = 0..k via the k+2 point rule.
inline void volume_terms(const FluxModel& model, const DGFunction& u, int j, double* out) {
  const int k = u.degree();
  const CellTables& tab = cell_tables(k);
  const QuadratureRule& rule = gauss_legendre(k + 2);
  const double isq = 1.0 / std::sqrt(u.mesh().h());
  std::fill(out, out + k + 1, 0.0);
  for (std::size_t q = 0; q < rule.size(); ++q) {
    double v = 0.0;
    for (int m = 0; m <= k; ++m) v += u(j, m) * tab.values[q * (k + 1) + m];
    v *= isq;
    const double fv = model.linear ? model.speed * v : model.f(v);
    const double w = rule.weights[q] * fv * isq;
    for (int m = 0; m <= k; ++m) out[m] += w * tab.derivatives[q * (k + 1) + m];
  }
}

}  // namespace detail

/// H_j(u, phi_{j,m}) = int_{I_j} f(u) phi' - h_{j+1} phi(x_{j+1}^-) + h_j phi(x_j^+).
inline double convective_form(const NumericalFlux& flux, const DGFunction& u, int j, int m) {
  const int k = u.degree();
  if (m < 0 || m > k) throw InvalidArgument("convective_form: test index out of range");
  const Mesh& mesh = u.mesh();
  j = mesh.wrap(j);
  std::vector<double> vol(k + 1);
  detail::volume_terms(flux.model(), u, j, vol.data());
  const double h = mesh.h();
  return vol[m] - detail::interface_flux(flux, u, j + 1) * basis_right(m, h) +
         detail::interface_flux(flux, u, j) * basis_left(m, h);
}

/// All H_j(u, phi_{j,m}) as a coefficient vector.
inline std::vector<double> convective_operator(const NumericalFlux& flux, const DGFunction& u) {
  const Mesh& mesh = u.mesh();
  const int N = mesh.cells();
  const int n1 = u.degree() + 1;
  const double h = mesh.h();
  std::vector<double> fluxes(N);
  for (int j = 0; j < N; ++j) fluxes[j] = detail::interface_flux(flux, u, j);
  std::vector<double> out(static_cast<std::size_t>(N) * n1);
  for (int j = 0; j < N; ++j) {
    double* cell = &out[static_cast<std::size_t>(j) * n1];
    detail::volume_terms(flux.model(), u, j, cell);
    const double right = fluxes[mesh.wrap(j + 1)];
    const double left = fluxes[j];
    for (int m = 0; m < n1; ++m) cell[m] += -right * basis_right(m, h) + left * basis_left(m, h);
  }
  return out;
}

/// H(u) + D(u) + S(t).
inline std::vector<double> stage_rhs(const SchemeConfig& cfg, const DGFunction& u, double t) {
  for (double c : u.coefficients())
    if (!std::isfinite(c)) throw BlowUpError("non-finite coefficient", -1, t, 0.0, cfg.mesh().h());
  std::vector<double> r = convective_operator(cfg.flux, u);
  const std::vector<double> d = cfg.op->apply(u);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] += d[i];
  if (cfg.source) {
    const DGFunction s = l2_project([&](double x) { return cfg.source(t, x); }, cfg.mesh(), cfg.degree());
    auto sc = s.coefficients();
    for (std::size_t i = 0; i < r.size(); ++i) r[i] += sc[i];
  }
  return r;
}

struct RkStages {
  DGFunction w;
  DGFunction next;
};

inline RkStages rk2_stages(const SchemeConfig& cfg, const DGFunction& u, double t, double tau) {
  if (!(tau > 0.0)) throw InvalidArgument("rk2_step: tau must be positive");
  if (u.degree() != cfg.degree() || !u.mesh().same_grid(cfg.mesh())) {
    throw InvalidArgument("rk2_step: state does not match the configured mesh/degree");
  }
  const double h = cfg.mesh().h();
  auto guarded = [&](const DGFunction& v, double tv) {
    try {
      return stage_rhs(cfg, v, tv);
    } catch (const BlowUpError&) {
      throw BlowUpError("non-finite coefficient", -1, t, tau, h);
    } catch (const InvalidArgument& e) {
      throw BlowUpError(std::string("state left the flux working interval: ") + e.what(), -1, t, tau, h);
    }
  };
  const std::vector<double> r1 = guarded(u, t);
  DGFunction w = u;
  {
    auto wc = w.coefficients();
    for (std::size_t i = 0; i < r1.size(); ++i) wc[i] += tau * r1[i];
  }
  const std::vector<double> r2 = guarded(w, t + tau);
  DGFunction next = u;
  {
    auto nc = next.coefficients();
    auto wc = w.coefficients();
    for (std::size_t i = 0; i < r2.size(); ++i) nc[i] = 0.5 * (nc[i] + wc[i]) + 0.5 * tau * r2[i];
    for (double c : nc)
      if (!std::isfinite(c)) throw BlowUpError("non-finite coefficient", -1, t, tau, h);
  }
  return {std::move(w), std::move(next)};
}

inline DGFunction rk2_step(const SchemeConfig& cfg, const DGFunction& u, double t, double tau) {
  return rk2_stages(cfg, u, t, tau).next;
}

struct TrajectoryRecord {
  std::vector<double> times;     ///< t^n, n = 0..steps
  std::vector<double> mass;      ///< sum_j h * cell mean
  std::vector<double> l2;
  std::vector<double> seminorm;  ///< Fourier-normalized H^{lambda/2} seminorm
  std::vector<int> snapshot_steps;
  std::vector<DGFunction> snapshots;

  [[nodiscard]] int steps() const { return static_cast<int>(times.size()) - 1; }
  [[nodiscard]] const DGFunction& final_state() const { return snapshots.back(); }
  [[nodiscard]] double mass_drift() const {
    double d = 0.0;
    for (double m : mass) d = std::max(d, std::abs(m - mass.front()));
    return d;
  }
};

/// Upwind projection of the initial datum (level-0 rule).
template <class F>
DGFunction initial_datum(const SchemeConfig& cfg, F&& u0) {
  const Mesh& mesh = cfg.mesh();
  const FluxModel& model = cfg.flux.model();
  const ProjectionChoice choice =
      upwind_projection_choice([&](double x) { return model.df(u0(x)); }, mesh, mesh.h(), std::nullopt, 0);
  return upwind_project(u0, choice, mesh, cfg.degree());
}

using StepObserver = std::function<void(int, double, const DGFunction&)>;

template <class F>
TrajectoryRecord run(const SchemeConfig& cfg, F&& u0, const Mesh& mesh, const StepObserver& observer = {}) {
  if (!mesh.same_grid(cfg.mesh())) throw InvalidArgument("run: mesh does not match the configured operator");
  if (cfg.cadence < 1) throw InvalidArgument("run: cadence must be >= 1");
  const std::vector<double> levels = time_levels(cfg);
  TrajectoryRecord rec;
  DGFunction u = initial_datum(cfg, u0);
  auto record = [&](int n, double t, const DGFunction& v, bool keep) {
    rec.times.push_back(t);
    rec.mass.push_back(total_mass(v));
    rec.l2.push_back(l2_norm(v));
    rec.seminorm.push_back(seminorm(*cfg.op, v));
    if (keep) {
      rec.snapshot_steps.push_back(n);
      rec.snapshots.push_back(v);
    }
    if (observer) observer(n, t, v);
  };
  const int steps = static_cast<int>(levels.size()) - 1;
  record(0, 0.0, u, true);
  for (int n = 0; n < steps; ++n) {
    const double t = levels[n];
    const double tau = levels[n + 1] - levels[n];
    try {
      u = rk2_step(cfg, u, t, tau);
    } catch (const BlowUpError& e) {
      BlowUpError err(std::string("blow-up: ") + e.what(), n, t, tau, mesh.h());
      err.set_last_good(std::make_shared<DGFunction>(u));
      throw err;
    }
    record(n + 1, levels[n + 1], u, (n + 1) % cfg.cadence == 0 || n + 1 == steps);
  }
  return rec;
}

/// ||E|| for the stage-2 defect
///   E = u(t+tau) - u/2 - w/2 + (tau/2) f'(w) w_x - (tau/2) g[w] - (tau/2) s(t+tau),
/// w = u + tau u_t, evaluated on `samples` equispaced points with g applied
/// spectrally to the sampled w.
inline double consistency_defect(const SchemeConfig& cfg, const SpaceTimeFunction& exact, double t, double tau,
                                 int samples = 256) {
  if (!(tau > 0.0) || samples < 8) throw InvalidArgument("consistency_defect: bad arguments");
  const double L = exact.length;
  const FluxModel& model = cfg.flux.model();
  auto w = [&](double x) { return exact.value(t, x) + tau * exact.dt(t, x); };
  const SpectralOracle oracle(cfg.op->lambda(), L, samples / 2 - 1);
  const auto gw = oracle.apply(w);
  double sum = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double x = L * i / samples;
    const double wx = exact.dx(t, x) + tau * exact.dxt(t, x);
    const double wv = w(x);
    double e = exact.value(t + tau, x) - 0.5 * exact.value(t, x) - 0.5 * wv + 0.5 * tau * model.df(wv) * wx -
               0.5 * tau * gw(x);
    if (cfg.source) e -= 0.5 * tau * cfg.source(t + tau, x);
    sum += e * e;
  }
  return std::sqrt(sum * L / samples);
}

}  // namespace fracdg
