#pragma once

// Closed-form reference fields on the torus: exact Fourier solutions of the
// linear problem u_t + c u_x = g_lambda[u] and trigonometric manufactured
// targets for nonlinear fluxes. g_lambda is applied through its symbol.

#include "fracdg/errors.hpp"
#include "fracdg/flux.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

namespace fracdg {

/// A space-time field with the derivatives needed by consistency and source
/// computations. `frac` is g_lambda applied in x; it may be empty.
struct SpaceTimeFunction {
  std::function<double(double, double)> value;
  std::function<double(double, double)> dt;
  std::function<double(double, double)> dx;
  std::function<double(double, double)> dxt;
  std::function<double(double, double)> frac;
  double length = 2.0 * std::numbers::pi;
};

/// One Fourier term: contributes Re(amplitude * e^{i xi x}) at t = 0 with
/// xi = 2 pi index / L, index >= 1. amplitude = a - i b encodes a cos + b sin.
struct FourierMode {
  int index = 1;
  std::complex<double> amplitude;
};

/// u(t,x) = mean + sum Re(A_k exp(mu_k t) exp(i xi_k x)),
/// mu_k = -i xi_k c - |xi_k|^lambda.
class FourierSolution {
 public:
  FourierSolution(double length, double speed, double lambda, double mean = 0.0, std::vector<FourierMode> modes = {})
      : length_(length), speed_(speed), lambda_(lambda), mean_(mean), modes_(std::move(modes)) {
    if (!(length > 0.0)) throw InvalidArgument("FourierSolution: domain length must be positive");
    if (!(lambda > 0.0 && lambda < 1.0)) throw InvalidArgument("FourierSolution: lambda must lie in (0,1)");
    for (const auto& m : modes_)
      if (m.index < 1) throw InvalidArgument("FourierSolution: mode index must be >= 1");
  }

  FourierSolution& add_sin(int index, double amp) {
    modes_.push_back({index, {0.0, -amp}});
    return *this;
  }
  FourierSolution& add_cos(int index, double amp) {
    modes_.push_back({index, {amp, 0.0}});
    return *this;
  }

  [[nodiscard]] double length() const { return length_; }
  [[nodiscard]] double speed() const { return speed_; }
  [[nodiscard]] double lambda() const { return lambda_; }
  [[nodiscard]] double mean() const { return mean_; }
  [[nodiscard]] const std::vector<FourierMode>& modes() const { return modes_; }
  [[nodiscard]] int max_index() const {
    int k = 0;
    for (const auto& m : modes_) k = std::max(k, m.index);
    return k;
  }

  [[nodiscard]] double wavenumber(int index) const { return 2.0 * std::numbers::pi * index / length_; }
  [[nodiscard]] std::complex<double> growth(int index) const {
    const double xi = wavenumber(index);
    return {-std::pow(std::abs(xi), lambda_), -xi * speed_};
  }

  /// Mode amplitude at time t.
  [[nodiscard]] std::complex<double> amplitude(const FourierMode& m, double t) const {
    return m.amplitude * std::exp(growth(m.index) * t);
  }

  [[nodiscard]] double value(double t, double x) const { return mean_ + sum(t, x, [](std::complex<double>, int) { return std::complex<double>(1.0); }); }
  [[nodiscard]] double dt(double t, double x) const {
    return sum(t, x, [this](std::complex<double>, int k) { return growth(k); });
  }
  [[nodiscard]] double dx(double t, double x) const {
    return sum(t, x, [this](std::complex<double>, int k) { return std::complex<double>(0.0, wavenumber(k)); });
  }
  [[nodiscard]] double dxt(double t, double x) const {
    return sum(t, x, [this](std::complex<double>, int k) { return std::complex<double>(0.0, wavenumber(k)) * growth(k); });
  }
  /// g_lambda[u(t, .)](x) through the symbol.
  [[nodiscard]] double frac(double t, double x) const {
    return sum(t, x, [this](std::complex<double>, int k) { return std::complex<double>(-std::pow(std::abs(wavenumber(k)), lambda_)); });
  }
  [[nodiscard]] double initial(double x) const { return value(0.0, x); }

  /// ||u(t, .)||_{L2(torus)}^2 from Parseval.
  [[nodiscard]] double l2_norm_squared(double t) const {
    double s = length_ * mean_ * mean_;
    // combine modes sharing an index
    std::vector<std::complex<double>> acc(max_index() + 1);
    for (const auto& m : modes_) acc[m.index] += amplitude(m, t);
    for (std::size_t k = 1; k < acc.size(); ++k) s += 0.5 * length_ * std::norm(acc[k]);
    return s;
  }

  /// sum_k Re(A_k(t) factor(k) e^{i xi_k x}) over the non-constant modes.
  template <class Factor>
  [[nodiscard]] double modal_sum(double t, double x, Factor&& factor) const {
    return sum(t, x, [&](std::complex<double>, int k) { return factor(k); });
  }

  [[nodiscard]] SpaceTimeFunction as_space_time() const {
    const FourierSolution self = *this;
    SpaceTimeFunction f;
    f.value = [self](double t, double x) { return self.value(t, x); };
    f.dt = [self](double t, double x) { return self.dt(t, x); };
    f.dx = [self](double t, double x) { return self.dx(t, x); };
    f.dxt = [self](double t, double x) { return self.dxt(t, x); };
    f.frac = [self](double t, double x) { return self.frac(t, x); };
    f.length = length_;
    return f;
  }

 private:
  template <class Factor>
  double sum(double t, double x, Factor&& factor) const {
    double s = 0.0;
    for (const auto& m : modes_) {
      const std::complex<double> a = amplitude(m, t) * factor(m.amplitude, m.index);
      s += (a * std::polar(1.0, wavenumber(m.index) * x)).real();
    }
    return s;
  }

  double length_;
  double speed_;
  double lambda_;
  double mean_;
  std::vector<FourierMode> modes_;
};

inline double exact_linear(const FourierSolution& sol, double t, double x) { return sol.value(t, x); }

/// One decaying trigonometric term e^{-rate t}(a cos(xi x) + b sin(xi x)).
struct TrigTerm {
  int index = 1;
  double cos_amp = 0.0;
  double sin_amp = 0.0;
  double rate = 0.0;
};

/// u*(t,x) = constant + sum of TrigTerms on a torus of length L.
struct TrigTarget {
  double length = 2.0 * std::numbers::pi;
  double constant = 0.0;
  std::vector<TrigTerm> terms;

  [[nodiscard]] double wavenumber(int index) const { return 2.0 * std::numbers::pi * index / length; }

  [[nodiscard]] SpaceTimeFunction as_space_time(double lambda) const {
    const TrigTarget self = *this;
    auto eval = [self](double t, double x, int dt_order, int dx_order, bool fractional, double lam) {
      double s = (dt_order == 0 && dx_order == 0 && !fractional) ? self.constant : 0.0;
      for (const auto& term : self.terms) {
        const double xi = self.wavenumber(term.index);
        const double decay = std::exp(-term.rate * t) * (dt_order ? -term.rate : 1.0);
        double c = std::cos(xi * x);
        double sn = std::sin(xi * x);
        double v = dx_order == 0 ? term.cos_amp * c + term.sin_amp * sn : xi * (-term.cos_amp * sn + term.sin_amp * c);
        if (fractional) v *= -std::pow(std::abs(xi), lam);
        s += decay * v;
      }
      return s;
    };
    SpaceTimeFunction f;
    f.value = [eval, lambda](double t, double x) { return eval(t, x, 0, 0, false, lambda); };
    f.dt = [eval, lambda](double t, double x) { return eval(t, x, 1, 0, false, lambda); };
    f.dx = [eval, lambda](double t, double x) { return eval(t, x, 0, 1, false, lambda); };
    f.dxt = [eval, lambda](double t, double x) { return eval(t, x, 1, 1, false, lambda); };
    f.frac = [eval, lambda](double t, double x) { return eval(t, x, 0, 0, true, lambda); };
    f.length = length;
    return f;
  }
};

/// Source s = u*_t + f'(u*) u*_x - g_lambda[u*] making u* an exact solution
/// of the forced equation.
inline std::function<double(double, double)> manufactured(const FluxModel& model, const SpaceTimeFunction& target) {
  if (!target.frac) {
    throw Unsupported("manufactured: target has no g_lambda evaluator (only trigonometric targets are supported)");
  }
  const auto df = model.df;
  return [df, target](double t, double x) {
    return target.dt(t, x) + df(target.value(t, x)) * target.dx(t, x) - target.frac(t, x);
  };
}

inline std::function<double(double, double)> manufactured(const FluxModel& model, double lambda,
                                                          const TrigTarget& target) {
  return manufactured(model, target.as_space_time(lambda));
}

}  // namespace fracdg
