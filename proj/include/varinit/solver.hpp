#pragma once

#include <vector>

#include "varinit/activation.hpp"
#include "varinit/stats.hpp"

namespace varinit {

/// Symmetric mean absolute percentage error, 100 |a-b| / (|a|+|b|), range
/// [0, 100]. Saturates at exactly 100 when one quantity vanishes or explodes
/// relative to the other, which is how the variance benches report dead or
/// blown-up passes.
double smape(double a, double b);

struct GridSpec {
  double lo = 1e-3;
  double hi = 10.0;
  int n_points = 2000;
  enum class Spacing { Linear, Log } spacing = Spacing::Log;

  std::vector<double> points() const;
};

struct BackwardConditionResult {
  double sigma_p = 0.0;
  double residual = 0.0;  // SMAPE between the condition's LHS and 1
  bool flat = false;      // whole grid within 1 SMAPE point: any sigma_p works
};

/// SMAPE between 1 and the backward-stability LHS
///   sigma_p^2 * fan_ratio * E[f'(z)^2] / E[f(z)^2],   z ~ N(0, sigma_p^2)
/// with fan_ratio = M_{i+1}/M_i (1 for the hidden-layer case).
double backward_residual(const ActivationSpec& spec, double sigma_p, double fan_ratio,
                         const StatsMethod& stats);

/// Grid search for the sigma_p minimizing backward_residual. Monte Carlo
/// stats use per-point seeds derive_seed(stats.seed, point_index), so the
/// curve (and the argmin) is reproducible and independent of evaluation
/// order. Ties break toward the smaller sigma_p; a grid whose residual span
/// is under 1 SMAPE point is reported flat with the middle grid point.
BackwardConditionResult solve_sigma_p(const ActivationSpec& spec, const GridSpec& grid,
                                      double fan_ratio, const StatsMethod& stats);

/// Backward-condition heatmap for the gaussian activation family: rows are
/// sigma_a values, columns sigma_p values, cell = 1 - residual/100 in [0,1]
/// (degenerate cells 0).
struct Heatmap {
  std::vector<double> sigma_a;  // rows
  std::vector<double> sigma_p;  // cols
  std::vector<double> values;   // row-major, rows x cols
  double at(int r, int c) const { return values[r * sigma_p.size() + c]; }
};

Heatmap condition_heatmap(const GridSpec& sigma_a_grid, const GridSpec& sigma_p_grid,
                          const StatsMethod& stats);

/// Least-squares slope through the origin of the per-column argmax ridge:
/// fits sigma_a ~ k * sigma_p over the columns whose maximum is positive.
double ridge_slope(const Heatmap& map);

}  // namespace varinit
