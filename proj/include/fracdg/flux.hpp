#pragma once

// Physical flux models, monotone numerical fluxes and the flux-difference
// quantity a(p) used in the stability analysis of upwind DG schemes.

#include "fracdg/errors.hpp"
#include "fracdg/quadrature.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace fracdg {

/// Smooth flux f with three derivatives and sup-bounds on a working interval.
struct FluxModel {
  std::string name;
  std::function<double(double)> f;
  std::function<double(double)> df;
  std::function<double(double)> d2f;
  std::function<double(double)> d3f;
  double u_min = -1.0;
  double u_max = 1.0;
  double bound1 = 0.0;  ///< >= sup |f'|
  double bound2 = 0.0;  ///< >= sup |f''|
  double bound3 = 0.0;  ///< >= sup |f'''|
  bool linear = false;
  double speed = 0.0;   ///< f(u) = speed * u when linear

  void require_in_range(double a, double b) const {
    if (!(a >= u_min && a <= u_max && b >= u_min && b <= u_max)) {
      throw InvalidArgument("flux argument outside working interval [" + std::to_string(u_min) + ", " +
                            std::to_string(u_max) + "]");
    }
  }
};

/// f(u) = c u.
inline FluxModel linear_flux(double c, double u_min, double u_max) {
  if (!(u_min < u_max)) throw InvalidArgument("linear_flux: empty working interval");
  FluxModel m;
  m.name = "linear";
  m.f = [c](double u) { return c * u; };
  m.df = [c](double) { return c; };
  m.d2f = [](double) { return 0.0; };
  m.d3f = [](double) { return 0.0; };
  m.u_min = u_min;
  m.u_max = u_max;
  m.bound1 = std::abs(c);
  m.linear = true;
  m.speed = c;
  return m;
}

/// f(u) = u^2 / 2.
inline FluxModel burgers_flux(double u_min, double u_max) {
  if (!(u_min < u_max)) throw InvalidArgument("burgers_flux: empty working interval");
  FluxModel m;
  m.name = "burgers";
  m.f = [](double u) { return 0.5 * u * u; };
  m.df = [](double u) { return u; };
  m.d2f = [](double) { return 1.0; };
  m.d3f = [](double) { return 0.0; };
  m.u_min = u_min;
  m.u_max = u_max;
  m.bound1 = std::max(std::abs(u_min), std::abs(u_max));
  m.bound2 = 1.0;
  m.bound3 = 0.0;
  return m;
}

namespace detail {

inline constexpr int kRootScanSegments = 32;

// Roots of g on [lo, hi] found by sign scanning and TOMS 748 refinement.
template <class G>
std::vector<double> bracketed_roots(const G& g, double lo, double hi) {
  std::vector<double> roots;
  if (!(hi > lo)) return roots;
  const double step = (hi - lo) / kRootScanSegments;
  double a = lo;
  double ga = g(a);
  for (int i = 1; i <= kRootScanSegments; ++i) {
    const double b = (i == kRootScanSegments) ? hi : lo + i * step;
    const double gb = g(b);
    if (ga == 0.0) {
      roots.push_back(a);
    } else if (ga * gb < 0.0) {
      std::uintmax_t iters = 100;
      auto tol = [](double x, double y) { return std::abs(x - y) <= 4 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x)); };
      auto r = boost::math::tools::toms748_solve(g, a, b, ga, gb, tol, iters);
      roots.push_back(0.5 * (r.first + r.second));
    }
    a = b;
    ga = gb;
  }
  if (ga == 0.0) roots.push_back(hi);
  return roots;
}

}  // namespace detail

/// Range [min f', max f'] over [lo, hi]: endpoints plus interior critical points of f'.
inline std::pair<double, double> derivative_range(const FluxModel& model, double lo, double hi) {
  double mn = std::min(model.df(lo), model.df(hi));
  double mx = std::max(model.df(lo), model.df(hi));
  if (!model.linear) {
    for (double r : detail::bracketed_roots(model.d2f, lo, hi)) {
      mn = std::min(mn, model.df(r));
      mx = std::max(mx, model.df(r));
    }
  }
  return {mn, mx};
}

/// Godunov flux: min of f over [a,b] if a <= b, max of f over [b,a] otherwise.
inline double godunov_flux(const FluxModel& model, double a, double b) {
  model.require_in_range(a, b);
  const double lo = std::min(a, b);
  const double hi = std::max(a, b);
  const auto [dmin, dmax] = derivative_range(model, lo, hi);
  if (dmin >= 0.0) return model.f(a);
  if (dmax <= 0.0) return model.f(b);
  double best = (a <= b) ? std::min(model.f(a), model.f(b)) : std::max(model.f(a), model.f(b));
  for (double r : detail::bracketed_roots(model.df, lo, hi)) {
    const double fr = model.f(r);
    best = (a <= b) ? std::min(best, fr) : std::max(best, fr);
  }
  return best;
}

/// Upwind flux: f(a) if f' >= 0 between the traces, f(b) if f' < 0 there,
/// and the Godunov value when f' changes sign.
inline double upwind_flux(const FluxModel& model, double a, double b) {
  model.require_in_range(a, b);
  const auto [dmin, dmax] = derivative_range(model, std::min(a, b), std::max(a, b));
  if (dmin >= 0.0) return model.f(a);
  if (dmax < 0.0) return model.f(b);
  return godunov_flux(model, a, b);
}

/// Engquist-Osher flux: (f(a) + f(b) - int_a^b |f'(s)| ds) / 2, with an
/// oriented integral (negative when b < a).
inline double engquist_osher_flux(const FluxModel& model, double a, double b) {
  model.require_in_range(a, b);
  if (a == b) return model.f(a);
  const double lo = std::min(a, b);
  const double hi = std::max(a, b);
  std::vector<double> breaks{lo};
  for (double r : detail::bracketed_roots(model.df, lo, hi))
    if (r > breaks.back()) breaks.push_back(r);
  if (hi > breaks.back()) breaks.push_back(hi);
  const QuadratureRule& rule = gauss_legendre(16);
  double variation = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double len = breaks[i + 1] - breaks[i];
    variation += len * rule.integrate([&](double s) { return std::abs(model.df(breaks[i] + len * s)); });
  }
  if (b < a) variation = -variation;
  return 0.5 * (model.f(a) + model.f(b) - variation);
}

enum class FluxKind { godunov, engquist_osher, pure_upwind };

inline std::string to_string(FluxKind k) {
  switch (k) {
    case FluxKind::godunov: return "godunov";
    case FluxKind::engquist_osher: return "engquist_osher";
    case FluxKind::pure_upwind: return "pure_upwind";
  }
  return "unknown";
}

inline FluxKind flux_kind_from_string(const std::string& s) {
  if (s == "godunov") return FluxKind::godunov;
  if (s == "engquist_osher") return FluxKind::engquist_osher;
  if (s == "pure_upwind" || s == "upwind") return FluxKind::pure_upwind;
  throw InvalidArgument("unknown numerical flux '" + s + "'");
}

/// Monotone numerical flux h(a, b) bound to a flux model.
class NumericalFlux {
 public:
  NumericalFlux(FluxModel model, FluxKind kind) : model_(std::move(model)), kind_(kind) {}

  [[nodiscard]] double operator()(double a, double b) const {
    if (model_.linear) {
      model_.require_in_range(a, b);
      return model_.speed >= 0.0 ? model_.speed * a : model_.speed * b;
    }
    switch (kind_) {
      case FluxKind::godunov: return godunov_flux(model_, a, b);
      case FluxKind::engquist_osher: return engquist_osher_flux(model_, a, b);
      case FluxKind::pure_upwind: return upwind_flux(model_, a, b);
    }
    return 0.0;
  }

  [[nodiscard]] const FluxModel& model() const { return model_; }
  [[nodiscard]] FluxKind kind() const { return kind_; }

 private:
  FluxModel model_;
  FluxKind kind_;
};

/// a(p) = (f(pbar) - h(p-, p+)) / [[p]] for [[p]] != 0, |f'(pbar)| otherwise.
inline double a_quantity(const FluxModel& model, const NumericalFlux& flux, double p_minus, double p_plus) {
  const double jmp = p_plus - p_minus;
  const double mean = 0.5 * (p_plus + p_minus);
  if (jmp == 0.0) return std::abs(model.df(mean));
  return (model.f(mean) - flux(p_minus, p_plus)) / jmp;
}

/// Outcome of sampling the a(p) inequalities. Margins are rhs - lhs; a
/// negative worst margin (beyond round-off) is a violation.
struct FluxDifferenceReport {
  std::string flux_kind;
  std::string flux_model;
  int samples = 0;
  std::uint64_t seed = 0;
  double c_star = 0.0;
  double c = 1.0;
  double a_bound = 0.0;
  double worst_nonnegative = std::numeric_limits<double>::infinity();
  double worst_bounded = std::numeric_limits<double>::infinity();
  double worst_lower_derivative = std::numeric_limits<double>::infinity();   // (1/2)|f'(pbar)| <= a + c*|[[p]]|
  double worst_lower_curvature = std::numeric_limits<double>::infinity();    // -f''(pbar)[[p]]/8 <= a + c*[[p]]^2
  double worst_upper = std::numeric_limits<double>::infinity();              // a <= c|f'(pbar)| + c*|[[p]]|
  int violations = 0;
  bool pass_nonnegative = true;
  bool pass_bounded = true;
  bool pass_lower_derivative = true;
  bool pass_lower_curvature = true;
  bool pass_upper = true;

  [[nodiscard]] bool pass() const {
    return pass_nonnegative && pass_bounded && pass_lower_derivative && pass_lower_curvature && pass_upper;
  }
};

/// Samples (p-, p+) uniformly from the working interval and checks
/// a >= 0, a <= sup|f'| and the three a(p) inequalities with
/// c* = max(sup|f''|, sup|f'''|) and c = 1.
inline FluxDifferenceReport check_flux_difference(const FluxModel& model, const NumericalFlux& flux, int samples,
                                   std::uint64_t seed) {
  if (samples <= 0) throw InvalidArgument("check_flux_difference: samples must be positive");
  FluxDifferenceReport rep;
  rep.flux_kind = to_string(flux.kind());
  rep.flux_model = model.name;
  rep.samples = samples;
  rep.seed = seed;
  rep.c_star = std::max(model.bound2, model.bound3);
  rep.c = 1.0;
  rep.a_bound = model.bound1;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(model.u_min, model.u_max);
  auto record = [&](double margin, double scale, double& worst, bool& ok) {
    worst = std::min(worst, margin);
    if (margin < -1e-12 * (1.0 + scale)) {
      ok = false;
      ++rep.violations;
    }
  };
  for (int i = 0; i < samples; ++i) {
    const double pm = dist(rng);
    const double pp = dist(rng);
    const double a = a_quantity(model, flux, pm, pp);
    const double jmp = pp - pm;
    const double mean = 0.5 * (pp + pm);
    const double d1 = std::abs(model.df(mean));
    const double scale = std::abs(a) + d1 + std::abs(jmp);
    record(a, scale, rep.worst_nonnegative, rep.pass_nonnegative);
    record(rep.a_bound - a, scale, rep.worst_bounded, rep.pass_bounded);
    record(a + rep.c_star * std::abs(jmp) - 0.5 * d1, scale, rep.worst_lower_derivative, rep.pass_lower_derivative);
    record(a + rep.c_star * jmp * jmp + 0.125 * model.d2f(mean) * jmp, scale, rep.worst_lower_curvature,
           rep.pass_lower_curvature);
    record(rep.c * d1 + rep.c_star * std::abs(jmp) - a, scale, rep.worst_upper, rep.pass_upper);
  }
  return rep;
}

}  // namespace fracdg
