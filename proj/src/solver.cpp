#include "varinit/solver.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "varinit/rng.hpp"

namespace varinit {

double smape(double a, double b) {
  const double denom = std::abs(a) + std::abs(b);
  if (denom == 0.0) return 0.0;
  return 100.0 * std::abs(a - b) / denom;
}

std::vector<double> GridSpec::points() const {
  if (!(lo > 0.0) || !(hi > lo) || n_points < 2) {
    throw std::invalid_argument("grid requires 0 < lo < hi and at least 2 points");
  }
  std::vector<double> pts(n_points);
  if (spacing == Spacing::Linear) {
    const double step = (hi - lo) / (n_points - 1);
    for (int i = 0; i < n_points; ++i) pts[i] = lo + step * i;
  } else {
    const double lref = std::log(lo);
    const double step = (std::log(hi) - lref) / (n_points - 1);
    for (int i = 0; i < n_points; ++i) pts[i] = std::exp(lref + step * i);
  }
  pts.back() = hi;
  return pts;
}

namespace {

double residual_from_stats(const ActivationStats& stats, double sigma_p, double fan_ratio) {
  const double m2_post = second_moment(stats.post);
  if (m2_post <= 1e-12) throw std::domain_error("activation collapses to zero");
  const double m2_deriv = second_moment(stats.deriv);
  const double lhs = sigma_p * sigma_p * fan_ratio * m2_deriv / m2_post;
  return smape(lhs, 1.0);
}

}  // namespace

double backward_residual(const ActivationSpec& spec, double sigma_p, double fan_ratio,
                         const StatsMethod& stats) {
  return residual_from_stats(compute_stats(spec, sigma_p, stats), sigma_p, fan_ratio);
}

BackwardConditionResult solve_sigma_p(const ActivationSpec& spec, const GridSpec& grid,
                                      double fan_ratio, const StatsMethod& stats) {
  const std::vector<double> pts = grid.points();

  double best_res = std::numeric_limits<double>::infinity();
  double best_sp = 0.0;
  double lo_res = std::numeric_limits<double>::infinity();
  double hi_res = -std::numeric_limits<double>::infinity();
  int evaluated = 0;

  for (size_t i = 0; i < pts.size(); ++i) {
    StatsMethod point_stats = stats;
    if (stats.kind == StatsKind::MonteCarlo) {
      point_stats.seed = derive_seed(stats.seed, static_cast<std::uint64_t>(i));
    }
    double res;
    try {
      res = backward_residual(spec, pts[i], fan_ratio, point_stats);
    } catch (const std::domain_error&) {
      continue;  // degenerate cell, e.g. activation numerically zero here
    }
    ++evaluated;
    lo_res = std::min(lo_res, res);
    hi_res = std::max(hi_res, res);
    if (res < best_res) {  // strict: earlier (smaller) sigma_p wins ties
      best_res = res;
      best_sp = pts[i];
    }
  }

  if (evaluated == 0) throw std::domain_error("all grid points degenerate");

  BackwardConditionResult out;
  if (hi_res - lo_res < 1.0) {
    out.flat = true;
    out.sigma_p = pts[(pts.size() - 1) / 2];
    out.residual = best_res;
  } else {
    out.flat = false;
    out.sigma_p = best_sp;
    out.residual = best_res;
  }
  return out;
}

Heatmap condition_heatmap(const GridSpec& sigma_a_grid, const GridSpec& sigma_p_grid,
                          const StatsMethod& stats) {
  Heatmap map;
  map.sigma_a = sigma_a_grid.points();
  map.sigma_p = sigma_p_grid.points();
  map.values.resize(map.sigma_a.size() * map.sigma_p.size(), 0.0);

  for (size_t r = 0; r < map.sigma_a.size(); ++r) {
    for (size_t c = 0; c < map.sigma_p.size(); ++c) {
      const ActivationSpec spec(ActKind::Gaussian, map.sigma_a[r]);
      StatsMethod cell_stats = stats;
      if (stats.kind == StatsKind::MonteCarlo) {
        cell_stats.seed = derive_seed(stats.seed, r * map.sigma_p.size() + c);
      }
      double value = 0.0;
      try {
        value = 1.0 - backward_residual(spec, map.sigma_p[c], 1.0, cell_stats) / 100.0;
      } catch (const std::domain_error&) {
        value = 0.0;
      }
      map.values[r * map.sigma_p.size() + c] = value;
    }
  }
  return map;
}

double ridge_slope(const Heatmap& map) {
  double sxy = 0.0;
  double sxx = 0.0;
  for (size_t c = 0; c < map.sigma_p.size(); ++c) {
    double best = -1.0;
    size_t best_r = 0;
    for (size_t r = 0; r < map.sigma_a.size(); ++r) {
      if (map.at(r, c) > best) {
        best = map.at(r, c);
        best_r = r;
      }
    }
    if (best <= 0.0) continue;
    sxy += map.sigma_p[c] * map.sigma_a[best_r];
    sxx += map.sigma_p[c] * map.sigma_p[c];
  }
  if (sxx == 0.0) throw std::domain_error("ridge fit has no usable columns");
  return sxy / sxx;
}

}  // namespace varinit
