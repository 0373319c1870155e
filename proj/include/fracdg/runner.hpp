#pragma once

// Configuration-driven studies: single solves, spatial and temporal
// convergence, operator property checks and the diagnostic suite.
//
// Configuration files are flat `key = value` lines grouped in [problem],
// [discretization], [study] and [output] sections. Key names are unique
// across sections, so command-line overrides are given by key alone.

#include "fracdg/analysis.hpp"
#include "fracdg/errors.hpp"
#include "fracdg/flux.hpp"
#include "fracdg/fractional.hpp"
#include "fracdg/io.hpp"
#include "fracdg/projections.hpp"
#include "fracdg/reference.hpp"
#include "fracdg/reference_grid.hpp"
#include "fracdg/scheme.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fracdg {

struct RunConfig {
  // [problem]
  std::string flux = "linear";            ///< linear | burgers
  double speed = 1.0;                     ///< advection speed of the linear flux
  std::string numerical_flux = "godunov"; ///< godunov | engquist_osher | pure_upwind
  double lambda = 0.5;
  double length = 2.0 * std::numbers::pi;
  std::string u0 = "sin:1:1.0, cos:2:0.5";  ///< mode list or preset name
  double final_time = 0.5;
  double u_min = -2.0;  ///< flux working interval
  double u_max = 2.0;
  std::string reference = "auto";  ///< auto | fourier | manufactured | fine-grid
  double manufactured_rate = 1.0;  ///< decay rate of manufactured targets

  // [discretization]
  int k = 1;
  int cells = 64;  ///< grid of `solve`, `temporal-order` and `diagnostics`
  std::vector<int> grids = {32, 64, 128, 256};
  double cfl = 0.1;
  double assembly_tolerance = kDefaultAssemblyTolerance;
  int fine_grid_factor = 8;

  // [study]
  std::string kind = "solve";
  std::vector<int> time_steps = {50, 100, 200, 400};
  int reference_steps = 800;
  std::vector<std::string> checks = {"flux_difference", "energy_identity", "switch_bound", "inverse_inequality"};
  int samples = 10000;
  int inverse_samples = 100;
  std::vector<int> inverse_grids = {16, 32, 64, 128};
  double switch_amplitude = 1.0;
  double switch_frequency = 2.0 * std::numbers::pi;
  std::vector<int> switch_levels = {4, 5, 6, 7, 8};
  double identity_tolerance = 1e-6;
  std::optional<double> min_order;
  std::string fault = "none";  ///< none | corrupt_block
  std::uint64_t seed = 12345;

  // [output]
  std::string out = "out";
  int cadence = 1;
};

// ---------------------------------------------------------------------------
// Parsing.

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  char* end = nullptr;
  const double d = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || !std::isfinite(d)) throw ConfigError(key, "malformed number '" + v + "'");
  return d;
}

inline long long parse_integer(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  char* end = nullptr;
  const long long i = std::strtoll(t.c_str(), &end, 10);
  if (t.empty() || end != t.c_str() + t.size()) throw ConfigError(key, "malformed integer '" + v + "'");
  return i;
}

inline int parse_int(const std::string& key, const std::string& v) {
  const long long i = parse_integer(key, v);
  if (i < -2147483647LL || i > 2147483647LL) throw ConfigError(key, "integer out of range '" + v + "'");
  return static_cast<int>(i);
}

inline std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  for (const auto& tok : split(v, ',')) out.push_back(parse_int(key, tok));
  if (out.empty()) throw ConfigError(key, "empty list");
  return out;
}

inline const std::map<std::string, std::string>& key_sections() {
  static const std::map<std::string, std::string> m = {
      {"flux", "problem"},          {"speed", "problem"},
      {"numerical_flux", "problem"}, {"lambda", "problem"},
      {"L", "problem"},             {"u0", "problem"},
      {"T", "problem"},             {"u_min", "problem"},
      {"u_max", "problem"},         {"reference", "problem"},
      {"manufactured_rate", "problem"},
      {"k", "discretization"},      {"N", "discretization"},
      {"grids", "discretization"},  {"cfl", "discretization"},
      {"assembly_tolerance", "discretization"}, {"fine_grid_factor", "discretization"},
      {"kind", "study"},            {"time_steps", "study"},
      {"reference_steps", "study"}, {"checks", "study"},
      {"samples", "study"},         {"inverse_samples", "study"},
      {"inverse_grids", "study"},   {"switch_amplitude", "study"},
      {"switch_frequency", "study"}, {"switch_levels", "study"},
      {"identity_tolerance", "study"}, {"min_order", "study"},
      {"fault", "study"},           {"seed", "study"},
      {"out", "output"},            {"cadence", "output"},
  };
  return m;
}

}  // namespace detail

/// Applies one `key = value` setting; `section` may be empty (flag overrides).
inline void apply_setting(RunConfig& c, const std::string& section, const std::string& key, const std::string& raw) {
  const auto& ks = detail::key_sections();
  auto it = ks.find(key);
  if (it == ks.end()) throw ConfigError(key, "unknown key");
  if (!section.empty() && it->second != section) {
    throw ConfigError(key, "belongs to section [" + it->second + "], found in [" + section + "]");
  }
  const std::string v = detail::trim(raw);
  using namespace detail;
  if (key == "flux") c.flux = v;
  else if (key == "speed") c.speed = parse_double(key, v);
  else if (key == "numerical_flux") c.numerical_flux = v;
  else if (key == "lambda") c.lambda = parse_double(key, v);
  else if (key == "L") c.length = parse_double(key, v);
  else if (key == "u0") c.u0 = v;
  else if (key == "T") c.final_time = parse_double(key, v);
  else if (key == "u_min") c.u_min = parse_double(key, v);
  else if (key == "u_max") c.u_max = parse_double(key, v);
  else if (key == "reference") c.reference = v;
  else if (key == "manufactured_rate") c.manufactured_rate = parse_double(key, v);
  else if (key == "k") c.k = parse_int(key, v);
  else if (key == "N") c.cells = parse_int(key, v);
  else if (key == "grids") c.grids = parse_int_list(key, v);
  else if (key == "cfl") c.cfl = parse_double(key, v);
  else if (key == "assembly_tolerance") c.assembly_tolerance = parse_double(key, v);
  else if (key == "fine_grid_factor") c.fine_grid_factor = parse_int(key, v);
  else if (key == "kind") c.kind = v;
  else if (key == "time_steps") c.time_steps = parse_int_list(key, v);
  else if (key == "reference_steps") c.reference_steps = parse_int(key, v);
  else if (key == "checks") c.checks = split(v, ',');
  else if (key == "samples") c.samples = parse_int(key, v);
  else if (key == "inverse_samples") c.inverse_samples = parse_int(key, v);
  else if (key == "inverse_grids") c.inverse_grids = parse_int_list(key, v);
  else if (key == "switch_amplitude") c.switch_amplitude = parse_double(key, v);
  else if (key == "switch_frequency") c.switch_frequency = parse_double(key, v);
  else if (key == "switch_levels") c.switch_levels = parse_int_list(key, v);
  else if (key == "identity_tolerance") c.identity_tolerance = parse_double(key, v);
  else if (key == "min_order") c.min_order = parse_double(key, v);
  else if (key == "fault") c.fault = v;
  else if (key == "seed") {
    const long long s = parse_integer(key, v);
    if (s < 0) throw ConfigError(key, "seed must be nonnegative");
    c.seed = static_cast<std::uint64_t>(s);
  } else if (key == "out") c.out = v;
  else if (key == "cadence") c.cadence = parse_int(key, v);
}

/// Checks ranges and cross-field consistency.
inline void validate(const RunConfig& c) {
  static const std::set<std::string> kinds = {"solve", "convergence", "temporal-order", "operator-check", "diagnostics"};
  static const std::set<std::string> checks = {"flux_difference", "energy_identity", "switch_bound", "inverse_inequality"};
  if (c.flux != "linear" && c.flux != "burgers") throw ConfigError("flux", "expected 'linear' or 'burgers'");
  try {
    (void)flux_kind_from_string(c.numerical_flux);
  } catch (const InvalidArgument&) {
    throw ConfigError("numerical_flux", "expected godunov, engquist_osher or pure_upwind");
  }
  if (!(c.lambda > 0.0 && c.lambda < 1.0)) {
    throw ConfigError("lambda", "value " + format_number(c.lambda) + " outside the supported range (0,1)");
  }
  if (!(c.length > 0.0)) throw ConfigError("L", "domain length must be positive");
  if (!(c.final_time >= 0.0)) throw ConfigError("T", "final time must be >= 0");
  if (!(c.u_min < c.u_max)) throw ConfigError("u_min", "working interval must satisfy u_min < u_max");
  if (c.reference != "auto" && c.reference != "fourier" && c.reference != "manufactured" && c.reference != "fine-grid") {
    throw ConfigError("reference", "expected auto, fourier, manufactured or fine-grid");
  }
  if (c.reference == "fourier" && c.flux != "linear") throw ConfigError("reference", "fourier reference needs the linear flux");
  if (c.k < 1) throw ConfigError("k", "polynomial degree must be >= 1");
  if (c.k > 8) throw ConfigError("k", "polynomial degree above 8 is not supported");
  if (c.cells < 2) throw ConfigError("N", "need at least 2 cells");
  for (std::size_t i = 0; i < c.grids.size(); ++i) {
    if (c.grids[i] < 2) throw ConfigError("grids", "every grid needs at least 2 cells");
    if (i > 0 && c.grids[i] <= c.grids[i - 1]) throw ConfigError("grids", "grid list must be strictly increasing");
  }
  if (!(c.cfl > 0.0)) throw ConfigError("cfl", "CFL constant must be positive");
  if (!(c.assembly_tolerance > 0.0)) throw ConfigError("assembly_tolerance", "must be positive");
  if (c.fine_grid_factor < 1) throw ConfigError("fine_grid_factor", "must be >= 1");
  if (!kinds.count(c.kind)) throw ConfigError("kind", "unknown study kind '" + c.kind + "'");
  for (std::size_t i = 0; i < c.time_steps.size(); ++i) {
    if (c.time_steps[i] < 1) throw ConfigError("time_steps", "step counts must be >= 1");
    if (i > 0 && c.time_steps[i] <= c.time_steps[i - 1]) throw ConfigError("time_steps", "must be strictly increasing");
  }
  if (c.reference_steps < 1) throw ConfigError("reference_steps", "must be >= 1");
  for (const auto& ch : c.checks)
    if (!checks.count(ch)) throw ConfigError("checks", "unknown check '" + ch + "'");
  if (c.samples < 1) throw ConfigError("samples", "must be >= 1");
  if (c.inverse_samples < 1) throw ConfigError("inverse_samples", "must be >= 1");
  for (int n : c.inverse_grids)
    if (n < 2) throw ConfigError("inverse_grids", "every grid needs at least 2 cells");
  for (int e : c.switch_levels)
    if (e < 1 || e > 20) throw ConfigError("switch_levels", "exponents must lie in 1..20");
  if (!(c.identity_tolerance > 0.0)) throw ConfigError("identity_tolerance", "must be positive");
  if (c.fault != "none" && c.fault != "corrupt_block") throw ConfigError("fault", "expected none or corrupt_block");
  if (c.cadence < 1) throw ConfigError("cadence", "must be >= 1");
}

/// Parses configuration text, then applies `overrides` (key -> value).
inline RunConfig parse_config_text(const std::string& text, const std::map<std::string, std::string>& overrides = {}) {
  RunConfig c;
  std::istringstream is(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno), "malformed section header");
      section = detail::trim(line.substr(1, line.size() - 2));
      if (section != "problem" && section != "discretization" && section != "study" && section != "output") {
        throw ConfigError(section, "unknown section");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno), "expected key = value");
    apply_setting(c, section, detail::trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  for (const auto& [k, v] : overrides) apply_setting(c, "", k, v);
  validate(c);
  return c;
}

inline RunConfig parse_config(const std::filesystem::path& path, const std::map<std::string, std::string>& overrides = {}) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config", "cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str(), overrides);
}

inline Json to_json(const RunConfig& c) {
  return Json{{"problem",
               {{"flux", c.flux},
                {"speed", c.speed},
                {"numerical_flux", c.numerical_flux},
                {"lambda", c.lambda},
                {"L", c.length},
                {"u0", c.u0},
                {"T", c.final_time},
                {"u_min", c.u_min},
                {"u_max", c.u_max},
                {"reference", c.reference},
                {"manufactured_rate", c.manufactured_rate}}},
              {"discretization",
               {{"k", c.k},
                {"N", c.cells},
                {"grids", c.grids},
                {"cfl", c.cfl},
                {"assembly_tolerance", c.assembly_tolerance},
                {"fine_grid_factor", c.fine_grid_factor}}},
              {"study",
               {{"kind", c.kind},
                {"time_steps", c.time_steps},
                {"reference_steps", c.reference_steps},
                {"checks", c.checks},
                {"samples", c.samples},
                {"inverse_samples", c.inverse_samples},
                {"inverse_grids", c.inverse_grids},
                {"switch_amplitude", c.switch_amplitude},
                {"switch_frequency", c.switch_frequency},
                {"switch_levels", c.switch_levels},
                {"identity_tolerance", c.identity_tolerance},
                {"min_order", json_optional(c.min_order)},
                {"fault", c.fault},
                {"seed", c.seed}}},
              {"output", {{"out", c.out}, {"cadence", c.cadence}}}};
}

// ---------------------------------------------------------------------------
// Initial data.

/// Mean plus cosine/sine terms, e.g. "sin:1:1.0, cos:2:0.5, const:0.25".
struct ModeSpec {
  double mean = 0.0;
  std::vector<TrigTerm> terms;  // rate unused here
};

inline std::string expand_preset(const std::string& spec) {
  if (spec == "acceptance") return "sin:1:1.0, cos:2:0.5";
  if (spec == "sine") return "sin:1:1.0";
  if (spec == "burgers-smooth") return "const:0.5, sin:1:0.25";
  if (spec == "constant") return "const:1.0";
  return spec;
}

inline ModeSpec parse_modes(const std::string& raw) {
  ModeSpec m;
  const auto tokens = detail::split(expand_preset(detail::trim(raw)), ',');
  if (tokens.empty()) throw ConfigError("u0", "empty mode list");
  for (const auto& tok : tokens) {
    const auto parts = detail::split(tok, ':');
    if (parts.size() == 2 && parts[0] == "const") {
      m.mean += detail::parse_double("u0", parts[1]);
    } else if (parts.size() == 3 && (parts[0] == "sin" || parts[0] == "cos")) {
      const int idx = detail::parse_int("u0", parts[1]);
      if (idx < 1) throw ConfigError("u0", "mode index must be >= 1 in '" + tok + "'");
      const double amp = detail::parse_double("u0", parts[2]);
      TrigTerm t;
      t.index = idx;
      (parts[0] == "sin" ? t.sin_amp : t.cos_amp) = amp;
      m.terms.push_back(t);
    } else {
      throw ConfigError("u0", "malformed mode '" + tok + "' (expected sin:k:a, cos:k:a or const:c)");
    }
  }
  return m;
}

inline FourierSolution fourier_solution(const RunConfig& c, double speed) {
  const ModeSpec m = parse_modes(c.u0);
  FourierSolution sol(c.length, speed, c.lambda, m.mean);
  for (const auto& t : m.terms) {
    if (t.sin_amp != 0.0) sol.add_sin(t.index, t.sin_amp);
    if (t.cos_amp != 0.0) sol.add_cos(t.index, t.cos_amp);
  }
  return sol;
}

inline TrigTarget manufactured_target(const RunConfig& c) {
  const ModeSpec m = parse_modes(c.u0);
  TrigTarget t;
  t.length = c.length;
  t.constant = m.mean;
  t.terms = m.terms;
  for (auto& term : t.terms) term.rate = c.manufactured_rate;
  return t;
}

inline FluxModel flux_model(const RunConfig& c) {
  return c.flux == "linear" ? linear_flux(c.speed, c.u_min, c.u_max) : burgers_flux(c.u_min, c.u_max);
}

inline NumericalFlux numerical_flux(const RunConfig& c) {
  return NumericalFlux(flux_model(c), flux_kind_from_string(c.numerical_flux));
}

/// Effective reference for convergence studies.
inline std::string reference_kind(const RunConfig& c) {
  if (c.reference != "auto") return c.reference;
  return c.flux == "linear" ? "fourier" : "manufactured";
}

inline std::filesystem::path cache_dir_from_env() {
  const char* d = std::getenv("FRACDG_CACHE_DIR");
  return d ? std::filesystem::path(d) : std::filesystem::path();
}

/// Negates the same-cell block (fault-injection fixture).
inline FractionalOperator corrupt_same_cell_block(const FractionalOperator& op) {
  std::vector<double> blocks = op.blocks();
  const int b = (op.degree() + 1) * (op.degree() + 1);
  for (int i = 0; i < b; ++i) blocks[i] = -blocks[i];
  return FractionalOperator(op.mesh(), op.degree(), op.lambda(), op.c_lambda(), op.tolerance(), std::move(blocks));
}

inline std::shared_ptr<const FractionalOperator> build_operator(const RunConfig& c, int cells, int degree) {
  const Mesh mesh(c.length, cells, std::max(degree, 1));
  FractionalOperator op = assemble_cached(mesh, degree, c.lambda, c.assembly_tolerance, cache_dir_from_env());
  if (c.fault == "corrupt_block") op = corrupt_same_cell_block(op);
  return std::make_shared<const FractionalOperator>(std::move(op));
}

// ---------------------------------------------------------------------------
// Studies. Each returns a JSON summary and writes its artifacts into `out`.

struct StudyResult {
  Json summary;
  bool pass = true;
  std::vector<std::filesystem::path> files;  ///< relative to the output directory
};

namespace detail {

inline void write_text(const std::filesystem::path& dir, const std::string& name, const std::string& content,
                       StudyResult& res) {
  std::ofstream os(dir / name, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + (dir / name).string());
  os << content;
  res.files.emplace_back(name);
}

struct Problem {
  SchemeConfig scheme;
  std::function<double(double)> u0;
  std::function<double(double, double)> exact;  // empty when unavailable
};

inline Problem make_problem(const RunConfig& c, int cells, bool for_convergence) {
  auto op = build_operator(c, cells, c.k);
  SchemeConfig sc(numerical_flux(c), op, c.final_time, c.cfl);
  sc.cadence = for_convergence ? 1 : c.cadence;
  const std::string ref = reference_kind(c);
  if (c.flux == "linear" && ref != "manufactured") {
    const FourierSolution sol = fourier_solution(c, c.speed);
    return {sc, [sol](double x) { return sol.initial(x); }, [sol](double t, double x) { return sol.value(t, x); }};
  }
  if (ref == "manufactured") {
    const TrigTarget target = manufactured_target(c);
    const SpaceTimeFunction st = target.as_space_time(c.lambda);
    sc.source = manufactured(flux_model(c), st);
    return {sc, [st](double x) { return st.value(0.0, x); }, st.value};
  }
  // fine-grid or plain solve of a nonlinear problem: initial data only
  const FourierSolution sol = fourier_solution(c, 0.0);
  return {sc, [sol](double x) { return sol.initial(x); }, {}};
}

}  // namespace detail

inline StudyResult run_solve(const RunConfig& c, const std::filesystem::path& out) {
  StudyResult res;
  auto p = detail::make_problem(c, c.cells, false);
  Json results;
  try {
    const TrajectoryRecord tr = run(p.scheme, p.u0, p.scheme.mesh());
    std::ostringstream traj, snap;
    write_trajectory_csv(traj, tr);
    write_snapshot(snap, tr.final_state());
    detail::write_text(out, "trajectory.csv", traj.str(), res);
    detail::write_text(out, "snapshot_final.dat", snap.str(), res);
    results = Json{{"N", c.cells},
                   {"h", p.scheme.mesh().h()},
                   {"steps", tr.steps()},
                   {"final_time", tr.times.back()},
                   {"mass_drift", tr.mass_drift()},
                   {"final_l2_norm", tr.l2.back()},
                   {"blow_up", false}};
    if (p.exact) {
      results["l2_error"] = l2_error([&](double x) { return p.exact(tr.times.back(), x); }, tr.final_state(), c.k + 8);
    }
  } catch (const BlowUpError& e) {
    res.pass = false;
    results = Json{{"N", c.cells}, {"blow_up", true}, {"message", e.what()}, {"step", e.step()}};
  }
  res.summary = results;
  return res;
}

inline StudyResult run_convergence(const RunConfig& c, const std::filesystem::path& out) {
  StudyResult res;
  const std::string ref = reference_kind(c);
  std::vector<ErrorRecord> rows;
  std::vector<std::pair<double, double>> energy_pts, l2_pts;
  Json failure = nullptr;

  // fine-grid reference: solved once on factor * finest grid
  std::optional<DGFunction> fine_final;
  if (ref == "fine-grid") {
    auto p = detail::make_problem(c, c.grids.back(), false);
    FineGridOptions fo;
    fo.cache_dir = cache_dir_from_env();
    try {
      fine_final = fine_grid_reference(p.scheme, p.u0, c.fine_grid_factor * c.grids.back(), fo).final_state();
    } catch (const BlowUpError& e) {
      res.pass = false;
      failure = Json{{"grid", c.fine_grid_factor * c.grids.back()}, {"message", e.what()}};
    }
  }

  for (int N : c.grids) {
    if (!failure.is_null()) break;
    auto p = detail::make_problem(c, N, true);
    try {
      const TrajectoryRecord tr = run(p.scheme, p.u0, p.scheme.mesh());
      ErrorRecord r;
      if (ref == "fine-grid") {
        r.h = p.scheme.mesh().h();
        r.cells = N;
        r.degree = c.k;
        r.lambda = c.lambda;
        for (std::size_t i = 0; i + 1 < tr.times.size(); ++i) r.tau = std::max(r.tau, tr.times[i + 1] - tr.times[i]);
        r.l2_error = cross_grid_l2_error(tr.final_state(), *fine_final);
        r.energy_error = std::numeric_limits<double>::quiet_NaN();
        r.jump = jump_seminorm(tr.final_state());
      } else {
        auto aux = build_operator(c, N, c.k + 3);
        r = error_norms(tr, p.exact, *aux);
      }
      rows.push_back(r);
      energy_pts.emplace_back(r.h, r.energy_error);
      l2_pts.emplace_back(r.h, r.l2_error);
    } catch (const BlowUpError& e) {
      res.pass = false;
      failure = Json{{"grid", N}, {"message", e.what()}, {"step", e.step()}};
    }
  }

  EocTable energy_eoc, l2_eoc;
  if (!rows.empty()) {
    l2_eoc = eoc(l2_pts);
    if (ref != "fine-grid") energy_eoc = eoc(energy_pts);
  }
  std::ostringstream csv;
  write_error_csv(csv, rows, energy_eoc);
  detail::write_text(out, "errors.csv", csv.str(), res);
  // two-column curves (h, error) for plotting
  std::ostringstream l2_curve, energy_curve;
  l2_curve << "# h l2_error\n";
  energy_curve << "# h energy_error\n";
  for (const auto& r : rows) {
    l2_curve << format_number(r.h) << ' ' << format_number(r.l2_error) << '\n';
    energy_curve << format_number(r.h) << ' ' << format_number(r.energy_error) << '\n';
  }
  detail::write_text(out, "l2_error.dat", l2_curve.str(), res);
  if (ref != "fine-grid") detail::write_text(out, "energy_error.dat", energy_curve.str(), res);

  Json jrows = Json::array();
  for (const auto& r : rows) jrows.push_back(to_json(r));
  res.summary = Json{{"reference", ref},
                     {"rows", jrows},
                     {"energy_eoc", to_json(energy_eoc)},
                     {"l2_eoc", to_json(l2_eoc)},
                     {"failure", failure}};
  if (c.min_order && !rows.empty()) {
    const EocTable& t = ref == "fine-grid" ? l2_eoc : energy_eoc;
    const bool ok = t.size() >= 2 && t.back().eoc && *t.back().eoc >= *c.min_order;
    res.summary["min_order_check"] = Json{{"min_order", *c.min_order}, {"pass", ok}};
    res.pass = res.pass && ok;
  }
  return res;
}

/// Errors at T for uniform step counts against the Richardson extrapolation
/// (4 u_{2R} - u_R) / 3 of two finer runs with R and 2R steps.
inline StudyResult run_temporal_order(const RunConfig& c, const std::filesystem::path& out) {
  StudyResult res;
  auto p = detail::make_problem(c, c.cells, false);
  auto solve = [&](int steps) {
    SchemeConfig sc = p.scheme;
    sc.fixed_steps = steps;
    sc.cadence = 1 << 30;
    return run(sc, p.u0, sc.mesh()).final_state();
  };
  Json rows = Json::array();
  std::ostringstream csv;
  csv << "tau,steps,error,eoc\n";
  try {
    const DGFunction coarse_ref = solve(c.reference_steps);
    const DGFunction fine_ref = solve(2 * c.reference_steps);
    const DGFunction ref = (4.0 / 3.0) * fine_ref - (1.0 / 3.0) * coarse_ref;
    std::vector<std::pair<double, double>> pts;
    for (int s : c.time_steps) {
      const double err = l2_norm(solve(s) - ref);
      pts.emplace_back(c.final_time / s, err);
    }
    const EocTable t = eoc(pts);
    for (std::size_t i = 0; i < t.size(); ++i) {
      csv << format_number(t[i].h) << ',' << c.time_steps[i] << ',' << format_number(t[i].error) << ','
          << format_optional(t[i].eoc) << '\n';
      rows.push_back(Json{{"tau", t[i].h}, {"steps", c.time_steps[i]}, {"error", json_number(t[i].error)},
                          {"eoc", json_optional(t[i].eoc)}});
    }
    res.summary = Json{{"N", c.cells}, {"reference_steps", c.reference_steps}, {"rows", rows}, {"failure", nullptr}};
    if (c.min_order) {
      bool ok = t.size() >= 2;
      for (std::size_t i = 1; i < t.size(); ++i) ok = ok && t[i].eoc && *t[i].eoc >= *c.min_order;
      res.summary["min_order_check"] = Json{{"min_order", *c.min_order}, {"pass", ok}};
      res.pass = ok;
    }
  } catch (const BlowUpError& e) {
    res.pass = false;
    res.summary = Json{{"N", c.cells}, {"rows", rows}, {"failure", Json{{"message", e.what()}, {"step", e.step()}}}};
  }
  detail::write_text(out, "temporal.csv", csv.str(), res);
  return res;
}

struct OperatorCheckRow {
  int cells = 0;
  double symmetry = 0.0;        ///< max relative |phi^T B psi - psi^T B phi|
  double max_quadratic = 0.0;   ///< max phi^T B phi / ||phi||^2 (should be <= 0)
  double constant_residual = 0.0;
  double dense_fast = 0.0;      ///< max |dense - fast| / ||phi||
  double seminorm = 0.0;        ///< of the projected initial datum
  double seminorm_error = 0.0;  ///< against the Parseval value
};

/// Operator properties on every grid of the study.
inline StudyResult run_operator_check(const RunConfig& c, const std::filesystem::path& out) {
  StudyResult res;
  const FourierSolution sol = fourier_solution(c, 0.0);
  const SpectralOracle oracle(c.lambda, c.length, std::max(4, 2 * sol.max_index() + 2));
  const double exact_semi = std::sqrt(oracle.seminorm_squared([&](double x) { return sol.initial(x); }));
  std::mt19937_64 rng(c.seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  Json rows = Json::array();
  std::ostringstream csv;
  csv << "N,symmetry,max_quadratic,constant_residual,dense_fast,seminorm,seminorm_error\n";
  bool pass = true;
  double prev_err = std::numeric_limits<double>::infinity();
  bool monotone = true;
  for (int N : c.grids) {
    auto op = build_operator(c, N, c.k);
    const Mesh& mesh = op->mesh();
    OperatorCheckRow r;
    r.cells = N;
    r.max_quadratic = -std::numeric_limits<double>::infinity();
    for (int s = 0; s < 5; ++s) {
      DGFunction a(mesh, c.k), b(mesh, c.k);
      for (double& v : a.coefficients()) v = dist(rng);
      for (double& v : b.coefficients()) v = dist(rng);
      const double ab = op->form(a, b);
      const double ba = op->form(b, a);
      r.symmetry = std::max(r.symmetry, std::abs(ab - ba) / std::max({std::abs(ab), std::abs(ba), 1e-300}));
      r.max_quadratic = std::max(r.max_quadratic, op->form(a, a) / inner_product(a, a));
      const auto d = op->apply_dense(a.coefficients());
      const auto f = op->apply_fast(a.coefficients());
      double diff = 0.0;
      for (std::size_t i = 0; i < d.size(); ++i) diff = std::max(diff, std::abs(d[i] - f[i]));
      r.dense_fast = std::max(r.dense_fast, diff / l2_norm(a));
    }
    const DGFunction one = l2_project([](double) { return 1.0; }, mesh, c.k);
    double cres = 0.0;
    for (double v : op->apply(one)) cres += v * v;
    r.constant_residual = std::sqrt(cres) / l2_norm(one);
    try {
      r.seminorm = seminorm(*op, l2_project([&](double x) { return sol.initial(x); }, mesh, c.k, c.k + 8));
    } catch (const NumericalConsistencyError&) {
      r.seminorm = std::numeric_limits<double>::quiet_NaN();
    }
    r.seminorm_error = std::abs(r.seminorm - exact_semi);
    const bool ok = r.symmetry <= 1e-12 && r.max_quadratic <= 1e-12 && r.constant_residual <= 1e-10 &&
                    r.dense_fast <= 1e-12 && std::isfinite(r.seminorm);
    pass = pass && ok;
    if (!(r.seminorm_error < prev_err)) monotone = false;
    prev_err = r.seminorm_error;
    csv << N << ',' << format_number(r.symmetry) << ',' << format_number(r.max_quadratic) << ','
        << format_number(r.constant_residual) << ',' << format_number(r.dense_fast) << ',' << format_number(r.seminorm)
        << ',' << format_number(r.seminorm_error) << '\n';
    rows.push_back(Json{{"N", N},
                        {"symmetry", r.symmetry},
                        {"max_quadratic", r.max_quadratic},
                        {"constant_residual", r.constant_residual},
                        {"dense_fast", r.dense_fast},
                        {"seminorm", json_number(r.seminorm)},
                        {"seminorm_error", json_number(r.seminorm_error)},
                        {"pass", ok}});
  }
  std::vector<FractionalOperator> ops;
  for (int N : c.inverse_grids) ops.push_back(*build_operator(c, N, c.k));
  const InverseInequalityStudy inv = inverse_inequality_study(ops, c.inverse_samples, c.seed);
  detail::write_text(out, "operator_check.csv", csv.str(), res);
  res.pass = pass && monotone && inv.pass;
  res.summary = Json{{"c_lambda", derive_c_lambda(c.lambda)},
                     {"c_lambda_closed_form", c_lambda_closed_form(c.lambda)},
                     {"exact_seminorm", exact_semi},
                     {"rows", rows},
                     {"seminorm_monotone", monotone},
                     {"inverse_inequality", to_json(inv)}};
  return res;
}

/// Switch counts for the synthetic family f'(u(t, .)) = A sin(omega t) on
/// meshes with h = 2^-e (L = 1), tau = cfl h.
struct SwitchStudy {
  std::vector<SwitchBoundReport> reports;
  double slope = 0.0;  ///< least-squares slope of log max count vs log h
  bool pass = false;
};

inline SwitchStudy switch_count_study(double amplitude, double omega, double T, double cfl,
                                      const std::vector<int>& exponents) {
  SwitchStudy st;
  std::vector<double> lx, ly;
  bool ok = true;
  for (int e : exponents) {
    const int N = 1 << e;
    const Mesh mesh(1.0, N, 1);
    const double h = mesh.h();
    const std::vector<double> levels = time_levels(T, cfl * h);
    std::vector<ProjectionChoice> traj;
    std::optional<ProjectionChoice> prev;
    for (std::size_t n = 0; n < levels.size(); ++n) {
      const double fp = amplitude * std::sin(omega * levels[n]);
      ProjectionChoice ch = upwind_projection_choice([&](double) { return fp; }, mesh, h, prev, static_cast<int>(n));
      traj.push_back(ch);
      prev = std::move(ch);
    }
    const SwitchCounter sc = count_switches(traj);
    const SwitchBoundReport r = verify_switch_bound(sc, T, h, 2, amplitude * omega * omega);
    ok = ok && r.pass;
    st.reports.push_back(r);
    lx.push_back(std::log(h));
    ly.push_back(std::log(std::max(1, r.max_count)));
  }
  if (lx.size() >= 2) {
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / lx.size();
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / ly.size();
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sxy += (lx[i] - mx) * (ly[i] - my);
      sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    st.slope = sxy / sxx;
  }
  st.pass = ok && st.slope >= -0.6;
  return st;
}

inline StudyResult run_diagnostics(const RunConfig& c, const std::filesystem::path& out) {
  StudyResult res;
  Json checks = Json::object();
  (void)out;
  for (const auto& name : c.checks) {
    if (name == "flux_difference") {
      const FluxModel model = flux_model(c);
      const NumericalFlux flux(model, flux_kind_from_string(c.numerical_flux));
      const FluxDifferenceReport r = check_flux_difference(model, flux, c.samples, c.seed);
      checks[name] = to_json(r);
      res.pass = res.pass && r.pass();
    } else if (name == "energy_identity") {
      // needs a Fourier-exact solution, so always runs with the linear flux
      RunConfig lc = c;
      lc.flux = "linear";
      const FourierSolution sol = fourier_solution(lc, lc.speed);
      auto op = build_operator(lc, lc.cells, lc.k);
      SchemeConfig sc(NumericalFlux(linear_flux(lc.speed, -1e6, 1e6), FluxKind::godunov), op, lc.final_time, lc.cfl);
      Json j;
      bool ok = false;
      try {
        const EnergyIdentityReport r = energy_identity_residual(sc, sol);
        ok = r.max_relative <= c.identity_tolerance;
        j = to_json(r);
      } catch (const NumericalConsistencyError& e) {
        j = Json{{"error", e.what()}};
      } catch (const BlowUpError& e) {
        j = Json{{"error", e.what()}};
      }
      j["flux"] = "linear";
      j["tolerance"] = c.identity_tolerance;
      j["pass"] = ok;
      checks[name] = j;
      res.pass = res.pass && ok;
    } else if (name == "switch_bound") {
      const double T = c.final_time > 0.0 ? c.final_time : 1.0;
      const SwitchStudy st = switch_count_study(c.switch_amplitude, c.switch_frequency, T, c.cfl, c.switch_levels);
      Json reps = Json::array();
      for (const auto& r : st.reports) reps.push_back(to_json(r));
      checks[name] = Json{{"amplitude", c.switch_amplitude},
                          {"frequency", c.switch_frequency},
                          {"reports", reps},
                          {"slope", st.slope},
                          {"pass", st.pass}};
      res.pass = res.pass && st.pass;
    } else if (name == "inverse_inequality") {
      std::vector<FractionalOperator> ops;
      for (int N : c.inverse_grids) ops.push_back(*build_operator(c, N, c.k));
      const InverseInequalityStudy inv = inverse_inequality_study(ops, c.inverse_samples, c.seed);
      checks[name] = to_json(inv);
      res.pass = res.pass && inv.pass;
    }
  }
  res.summary = Json{{"checks", checks}};
  return res;
}

/// Runs the configured study, writes artifacts and `summary.json` into
/// cfg.out. Returns the result (summary JSON includes the config echo).
inline StudyResult run_study(const RunConfig& c) {
  const std::filesystem::path out(c.out);
  std::filesystem::create_directories(out);
  StudyResult res;
  if (c.kind == "solve") res = run_solve(c, out);
  else if (c.kind == "convergence") res = run_convergence(c, out);
  else if (c.kind == "temporal-order") res = run_temporal_order(c, out);
  else if (c.kind == "operator-check") res = run_operator_check(c, out);
  else res = run_diagnostics(c, out);
  Json summary{{"study", c.kind}, {"config", to_json(c)}, {"results", res.summary}, {"pass", res.pass}};
  detail::write_text(out, "summary.json", summary.dump(2) + "\n", res);
  res.summary = std::move(summary);
  return res;
}

}  // namespace fracdg
