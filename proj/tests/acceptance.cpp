// Acceptance battery. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include "fracdg/fracdg.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

using namespace fracdg;

namespace {

constexpr double pi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

FourierSolution acceptance_solution(double lambda) {
  FourierSolution s(2.0 * pi, 1.0, lambda);
  s.add_sin(1, 1.0).add_cos(2, 0.5);
  return s;
}

std::shared_ptr<const FractionalOperator> operator_for(const Mesh& mesh, int k, double lambda) {
  return std::make_shared<const FractionalOperator>(
      assemble_cached(mesh, k, lambda, kDefaultAssemblyTolerance, cache_dir_from_env()));
}

struct SpatialRun {
  std::vector<double> h, energy;
  double max_mass_drift = 0.0;
  std::string failure;
};

// linear advection with speed 1 at lambda = 0.5 to T = 0.5 on each grid
SpatialRun spatial_study(int k, const std::vector<int>& grids) {
  const double lambda = 0.5;
  const FourierSolution sol = acceptance_solution(lambda);
  SpatialRun out;
  for (int N : grids) {
    const Mesh mesh(2.0 * pi, N, k);
    SchemeConfig cfg(NumericalFlux(linear_flux(1.0, -1e6, 1e6), FluxKind::godunov), operator_for(mesh, k, lambda), 0.5,
                     0.1);
    try {
      const TrajectoryRecord tr = run(cfg, [&](double x) { return sol.initial(x); }, mesh);
      const auto aux = operator_for(mesh, k + 3, lambda);
      const ErrorRecord r = error_norms(tr, [&](double t, double x) { return sol.value(t, x); }, *aux);
      out.h.push_back(r.h);
      out.energy.push_back(r.energy_error);
      out.max_mass_drift = std::max(out.max_mass_drift, tr.mass_drift());
    } catch (const BlowUpError& e) {
      out.failure = "N=" + std::to_string(N) + ": " + e.what();
      break;
    }
  }
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

Outcome spatial_order(const SpatialRun& run, double lo, double hi) {
  if (!run.failure.empty()) return {false, run.failure};
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < run.h.size(); ++i) pts.emplace_back(run.h[i], run.energy[i]);
  const EocTable t = eoc(pts);
  std::string orders;
  for (const auto& row : t)
    if (row.eoc) orders += (orders.empty() ? "" : ", ") + fmt(*row.eoc);
  const auto& last = t.back().eoc;
  const bool ok = last && *last >= lo && *last <= hi;
  return {ok, "energy eoc [" + orders + "], last pair in [" + fmt(lo) + ", " + fmt(hi) + "]"};
}

Outcome temporal_order() {
  RunConfig c;
  c.kind = "temporal-order";
  c.k = 2;
  c.cells = 128;
  c.lambda = 0.5;
  c.final_time = 0.25;
  c.time_steps = {50, 100, 200, 400};
  c.reference_steps = 800;
  c.out = (std::filesystem::temp_directory_path() / "fracdg_acceptance_temporal").string();
  const StudyResult r = run_study(c);
  const Json& rows = r.summary["results"]["rows"];
  if (!r.summary["results"]["failure"].is_null()) return {false, r.summary["results"]["failure"].dump()};
  bool ok = rows.size() == 4;
  std::string orders;
  for (const auto& row : rows) {
    if (row["eoc"].is_null()) continue;
    const double e = row["eoc"].get<double>();
    ok = ok && std::abs(e - 2.0) <= 0.25;
    orders += (orders.empty() ? "" : ", ") + fmt(e);
  }
  return {ok, "tau eoc [" + orders + "] within 2 +- 0.25 (T=0.25, N=128, k=2)"};
}

Outcome local_consistency() {
  const double lambda = 0.5;
  const Mesh mesh(2.0 * pi, 8, 1);
  const SchemeConfig cfg(NumericalFlux(linear_flux(1.0, -1e6, 1e6), FluxKind::godunov), operator_for(mesh, 1, lambda),
                         1.0);
  const SpaceTimeFunction u = acceptance_solution(lambda).as_space_time();
  bool ok = true;
  std::string ratios;
  double tau = 0.1;
  double prev = consistency_defect(cfg, u, 0.2, tau);
  for (int i = 0; i < 3; ++i) {
    tau *= 0.5;
    const double d = consistency_defect(cfg, u, 0.2, tau);
    const double ratio = prev / d;
    ok = ok && ratio >= 7.0 && ratio <= 9.0;
    ratios += (ratios.empty() ? "" : ", ") + fmt(ratio);
    prev = d;
  }
  return {ok, "defect ratios [" + ratios + "] in [7, 9]"};
}

Outcome operator_properties() {
  RunConfig c;
  c.kind = "operator-check";
  c.k = 1;
  c.lambda = 0.5;
  c.u0 = "sin:1:1.0";
  c.grids = {32, 64, 128, 256};
  c.inverse_grids = {16, 32};
  c.out = (std::filesystem::temp_directory_path() / "fracdg_acceptance_operator").string();
  const StudyResult r = run_study(c);
  const Json& res = r.summary["results"];
  bool ok = res["seminorm_monotone"].get<bool>();
  ok = ok && std::abs(res["exact_seminorm"].get<double>() - std::sqrt(pi)) <= 1e-12;
  double worst_sym = 0.0, worst_quad = -1e300, worst_const = 0.0, worst_df = 0.0;
  for (const auto& row : res["rows"]) {
    ok = ok && row["pass"].get<bool>();
    worst_sym = std::max(worst_sym, row["symmetry"].get<double>());
    worst_quad = std::max(worst_quad, row["max_quadratic"].get<double>());
    worst_const = std::max(worst_const, row["constant_residual"].get<double>());
    worst_df = std::max(worst_df, row["dense_fast"].get<double>());
  }
  const double final_err = res["rows"].back()["seminorm_error"].get<double>();
  return {ok, "symmetry " + fmt(worst_sym) + ", max quadratic " + fmt(worst_quad) + ", constants " + fmt(worst_const) +
                  ", dense/fast " + fmt(worst_df) + ", |seminorm - sqrt(pi)| at N=256 " + fmt(final_err) +
                  (res["seminorm_monotone"].get<bool>() ? " (monotone)" : " (not monotone)")};
}

Outcome inverse_inequality() {
  std::vector<FractionalOperator> ops;
  for (int N : {16, 32, 64, 128}) ops.push_back(*operator_for(Mesh(2.0 * pi, N, 1), 1, 0.5));
  const InverseInequalityStudy st = inverse_inequality_study(ops, 100, 12345);
  return {st.pass, "max ratio coarse " + fmt(st.coarse_max) + ", fine " + fmt(st.fine_max) + " (limit 1.2x)"};
}

Outcome conservation(const SpatialRun& run) {
  const bool ok = run.failure.empty() && run.max_mass_drift <= 1e-10;
  return {ok, run.failure.empty() ? "max mass drift " + fmt(run.max_mass_drift) + ", no blow-up" : run.failure};
}

Outcome energy_identity() {
  const double lambda = 0.5;
  const Mesh mesh(2.0 * pi, 32, 1);
  const SchemeConfig cfg(NumericalFlux(linear_flux(1.0, -1e6, 1e6), FluxKind::godunov), operator_for(mesh, 1, lambda),
                         0.5);
  const EnergyIdentityReport r = energy_identity_residual(cfg, acceptance_solution(lambda));
  return {r.max_relative <= 1e-6,
          "max relative residual " + fmt(r.max_relative) + " over " + std::to_string(r.steps.size()) + " steps"};
}

Outcome switch_bound() {
  const SwitchStudy st = switch_count_study(1.0, 2.0 * pi, 1.0, 0.1, {4, 5, 6, 7, 8});
  std::string counts;
  bool bound_ok = true;
  for (const auto& r : st.reports) {
    counts += (counts.empty() ? "" : ", ") + std::to_string(r.max_count) + "<=" + fmt(r.bound);
    bound_ok = bound_ok && r.pass;
  }
  return {st.pass && bound_ok, "max switches [" + counts + "], slope " + fmt(st.slope) + " >= -0.6"};
}

Outcome flux_difference_sampler() {
  const FluxModel b = burgers_flux(-2.0, 2.0);
  const FluxDifferenceReport r = check_flux_difference(b, NumericalFlux(b, FluxKind::godunov), 10000, 12345);
  return {r.pass() && r.violations == 0,
          std::to_string(r.violations) + " violations in " + std::to_string(r.samples) + " samples, worst margins " +
              fmt(r.worst_nonnegative) + ", " + fmt(r.worst_lower_derivative) + ", " + fmt(r.worst_lower_curvature) +
              ", " + fmt(r.worst_upper)};
}

Outcome radau_projection() {
  bool ok = true;
  double worst_poly = 0.0, worst_end = 0.0;
  std::string orders;
  for (int k = 1; k <= 3; ++k) {
    const Mesh coarse(2.0, 6, k);
    auto p = [k](double x) {
      double v = 0.0;
      for (int i = 0; i <= k; ++i) v += (i % 2 ? -0.5 : 1.0) * std::pow(x, i);
      return v;
    };
    const DGFunction want = l2_project(p, coarse, k, k + 4);
    for (RadauSide side : {RadauSide::left, RadauSide::right}) {
      const DGFunction got = gauss_radau_project(p, coarse, k, side);
      for (std::size_t i = 0; i < got.size(); ++i)
        worst_poly = std::max(worst_poly, std::abs(got.coefficients()[i] - want.coefficients()[i]));
    }
    double prev = 0.0;
    for (int N : {16, 32, 64, 128}) {
      const Mesh mesh(2.0 * pi, N, k);
      auto v = [](double x) { return std::sin(x); };
      for (RadauSide side : {RadauSide::left, RadauSide::right}) {
        const DGFunction pr = gauss_radau_project(v, mesh, k, side);
        for (int j = 0; j < N; ++j) {
          const double e = side == RadauSide::right ? pr.cell_value(j, 1.0) - v(mesh.node(j + 1))
                                                     : pr.cell_value(j, 0.0) - v(mesh.node(j));
          worst_end = std::max(worst_end, std::abs(e));
        }
      }
      const DGFunction pr = gauss_radau_project(v, mesh, k, RadauSide::right);
      const double err = l2_error(v, pr, k + 8);
      if (prev > 0.0) {
        const double order = std::log2(prev / err);
        ok = ok && std::abs(order - (k + 1.0)) <= 0.1;
        orders += (orders.empty() ? "" : ", ") + fmt(order);
      }
      prev = err;
    }
  }
  ok = ok && worst_poly <= 1e-13 && worst_end <= 1e-13;
  return {ok, "reproduction " + fmt(worst_poly) + ", endpoint " + fmt(worst_end) + ", eoc k=1..3 [" + orders + "]"};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const std::string& name, const std::function<Outcome()>& f) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failures;
    std::printf("%s [%2d] %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
  };

  SpatialRun k1;
  report(1, "spatial order k=1", [&] {
    k1 = spatial_study(1, {32, 64, 128, 256});
    return spatial_order(k1, 1.75, 2.35);
  });
  report(2, "spatial order k=2", [] { return spatial_order(spatial_study(2, {16, 32, 64, 128}), 2.75, 3.35); });
  report(3, "temporal order", temporal_order);
  report(4, "local consistency", local_consistency);
  report(5, "operator properties", operator_properties);
  report(6, "inverse inequality", inverse_inequality);
  report(7, "conservation and stability", [&] { return conservation(k1); });
  report(8, "energy identity", energy_identity);
  report(9, "switch-count bound", switch_bound);
  report(10, "flux difference sampler", flux_difference_sampler);
  report(11, "Gauss-Radau projection", radau_projection);
  std::printf("%d of 11 criteria passed\n", 11 - failures);
  return failures == 0 ? 0 : 1;
}
