#pragma once

// CSV, plot-text and JSON serialization of run artifacts.

#include "fracdg/analysis.hpp"
#include "fracdg/flux.hpp"
#include "fracdg/fractional.hpp"
#include "fracdg/projections.hpp"
#include "fracdg/scheme.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace fracdg {

using Json = nlohmann::ordered_json;

/// Shortest decimal text that round-trips the double ("%.17g" trimmed).
inline std::string format_number(double v) {
  if (std::isnan(v)) return "null";
  char buf[40];
  for (int prec = 6; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline std::string format_optional(const std::optional<double>& v) { return v ? format_number(*v) : "null"; }

inline Json json_number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }
inline Json json_optional(const std::optional<double>& v) { return v ? json_number(*v) : Json(nullptr); }

inline constexpr const char* kErrorCsvHeader = "h,tau,N,k,lambda,l2_error,energy_error,jump,eoc";
inline constexpr const char* kTrajectoryCsvHeader = "n,t,mass,l2,seminorm";

/// One row per grid; the eoc column is the energy-norm order.
inline void write_error_csv(std::ostream& os, const std::vector<ErrorRecord>& rows, const EocTable& energy_eoc) {
  os << kErrorCsvHeader << '\n';
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const ErrorRecord& r = rows[i];
    os << format_number(r.h) << ',' << format_number(r.tau) << ',' << r.cells << ',' << r.degree << ','
       << format_number(r.lambda) << ',' << format_number(r.l2_error) << ',' << format_number(r.energy_error) << ','
       << format_number(r.jump) << ',' << (i < energy_eoc.size() ? format_optional(energy_eoc[i].eoc) : "null")
       << '\n';
  }
}

inline void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& tr) {
  os << kTrajectoryCsvHeader << '\n';
  for (std::size_t n = 0; n < tr.times.size(); ++n) {
    os << n << ',' << format_number(tr.times[n]) << ',' << format_number(tr.mass[n]) << ',' << format_number(tr.l2[n])
       << ',' << format_number(tr.seminorm[n]) << '\n';
  }
}

/// Two whitespace-separated columns x, u; each cell sampled at 2(k+1) points
/// including both ends so jumps show up as repeated abscissae.
inline void write_snapshot(std::ostream& os, const DGFunction& u) {
  const Mesh& mesh = u.mesh();
  const int per_cell = 2 * (u.degree() + 1);
  os << "# x u\n";
  for (int j = 0; j < mesh.cells(); ++j) {
    for (int i = 0; i < per_cell; ++i) {
      const double s = static_cast<double>(i) / (per_cell - 1);
      os << format_number(mesh.point(j, s)) << ' ' << format_number(u.cell_value(j, s)) << '\n';
    }
  }
}

inline Json to_json(const ErrorRecord& r) {
  return Json{{"h", r.h},       {"tau", r.tau},       {"N", r.cells},
              {"k", r.degree},  {"lambda", r.lambda}, {"l2_error", json_number(r.l2_error)},
              {"energy_error", json_number(r.energy_error)}, {"jump", json_number(r.jump)}};
}

inline Json to_json(const EocTable& t) {
  Json a = Json::array();
  for (const auto& row : t) a.push_back(Json{{"h", row.h}, {"error", json_number(row.error)}, {"eoc", json_optional(row.eoc)}});
  return a;
}

inline Json to_json(const FluxDifferenceReport& r) {
  return Json{{"flux_kind", r.flux_kind},
              {"flux_model", r.flux_model},
              {"samples", r.samples},
              {"seed", r.seed},
              {"c_star", r.c_star},
              {"c", r.c},
              {"a_bound", r.a_bound},
              {"worst_margin",
               Json{{"nonnegative", r.worst_nonnegative},
                    {"bounded", r.worst_bounded},
                    {"lower_derivative", r.worst_lower_derivative},
                    {"lower_curvature", r.worst_lower_curvature},
                    {"upper", r.worst_upper}}},
              {"pass_flags",
               Json{{"nonnegative", r.pass_nonnegative},
                    {"bounded", r.pass_bounded},
                    {"lower_derivative", r.pass_lower_derivative},
                    {"lower_curvature", r.pass_lower_curvature},
                    {"upper", r.pass_upper}}},
              {"violations", r.violations},
              {"pass", r.pass()}};
}

inline Json to_json(const InverseInequalityReport& r) {
  return Json{{"N", r.cells},
              {"h", r.h},
              {"samples", r.samples},
              {"max_ratio", json_number(r.max_ratio)},
              {"min_ratio", json_number(r.min_ratio)},
              {"mean_ratio", json_number(r.mean_ratio)},
              {"consistent", r.consistent}};
}

inline Json to_json(const InverseInequalityStudy& s) {
  Json grids = Json::array();
  for (const auto& g : s.grids) grids.push_back(to_json(g));
  return Json{{"grids", grids}, {"coarse_max", s.coarse_max}, {"fine_max", s.fine_max}, {"pass", s.pass}};
}

inline Json to_json(const ProjectionChoice& c) {
  Json a = Json::array();
  for (RadauSide s : c) a.push_back(to_string(s));
  return a;
}

inline Json to_json(const SwitchCounter& c) { return Json{{"counts", c.counts}, {"levels", c.levels}}; }

inline Json to_json(const SwitchBoundReport& r) {
  return Json{{"T", r.final_time}, {"h", r.h},         {"alpha", r.alpha}, {"c_t_alpha", r.c_t_alpha},
              {"max_count", r.max_count}, {"levels", r.levels}, {"bound", r.bound}, {"pass", r.pass}};
}

inline Json to_json(const EnergyIdentityReport& r) {
  Json steps = Json::array();
  for (const auto& s : r.steps) {
    steps.push_back(Json{{"n", s.step},
                         {"t", s.t},
                         {"lhs", s.lhs},
                         {"rhs", s.rhs},
                         {"residual", s.residual},
                         {"scale", s.scale},
                         {"relative", s.relative}});
  }
  return Json{{"quad_points", r.quad_points}, {"max_relative", r.max_relative}, {"steps", steps}};
}

}  // namespace fracdg
