#pragma once

// Fine-grid numerical references for self-convergence studies.

#include "fracdg/analysis.hpp"
#include "fracdg/errors.hpp"
#include "fracdg/fractional.hpp"
#include "fracdg/scheme.hpp"

#include <cmath>
#include <filesystem>
#include <memory>
#include <string>

namespace fracdg {

struct FineGridOptions {
  long long max_dofs = 1LL << 22;  ///< refuse references larger than this
  std::filesystem::path cache_dir; ///< optional operator cache
};

/// Solves the configured problem on N_ref cells (same L, k, lambda, flux, T,
/// CFL rule and source). Only the final state is kept.
template <class F>
TrajectoryRecord fine_grid_reference(const SchemeConfig& cfg, F&& u0, int n_ref, const FineGridOptions& opts = {}) {
  const Mesh& coarse = cfg.mesh();
  if (n_ref < coarse.cells()) throw InvalidArgument("fine_grid_reference: N_ref must not be below the study grid");
  const long long dofs = static_cast<long long>(n_ref) * (cfg.degree() + 1);
  if (dofs > opts.max_dofs) {
    throw ResourceError("fine_grid_reference: N_ref=" + std::to_string(n_ref) + " needs " + std::to_string(dofs) +
                        " unknowns, budget is " + std::to_string(opts.max_dofs));
  }
  const Mesh fine(coarse.length(), n_ref, cfg.degree());
  auto op = std::make_shared<const FractionalOperator>(
      assemble_cached(fine, cfg.degree(), cfg.op->lambda(), cfg.op->tolerance(), opts.cache_dir));
  SchemeConfig ref(cfg.flux, op, cfg.final_time, cfg.cfl);
  ref.source = cfg.source;
  ref.fixed_steps = cfg.fixed_steps;
  ref.cadence = 1 << 30;
  return run(ref, u0, fine);
}

/// ||u_h - u_ref||_{L2} where the reference lives on a grid nested in
/// u_h's grid (N_ref divisible by N); exact per reference sub-cell.
inline double cross_grid_l2_error(const DGFunction& coarse, const DGFunction& reference, int points = 0) {
  const Mesh& cm = coarse.mesh();
  const Mesh& fm = reference.mesh();
  if (cm.length() != fm.length()) throw InvalidArgument("cross_grid_l2_error: domain lengths differ");
  if (fm.cells() % cm.cells() != 0) throw InvalidArgument("cross_grid_l2_error: grids are not nested");
  const int ratio = fm.cells() / cm.cells();
  const int q = points > 0 ? points : std::max(coarse.degree(), reference.degree()) + 2;
  const QuadratureRule& rule = gauss_legendre(q);
  double s = 0.0;
  for (int jf = 0; jf < fm.cells(); ++jf) {
    const int jc = jf / ratio;
    const int sub = jf % ratio;
    double cell = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) {
      const double sc = (sub + rule.nodes[i]) / ratio;
      const double d = coarse.cell_value(jc, sc) - reference.cell_value(jf, rule.nodes[i]);
      cell += rule.weights[i] * d * d;
    }
    s += cell * fm.h();
  }
  return std::sqrt(s);
}

}  // namespace fracdg
