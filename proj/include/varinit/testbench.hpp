#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "varinit/activation.hpp"
#include "varinit/init.hpp"
#include "varinit/stats.hpp"

namespace varinit {

/// Controlled variance-propagation bench: a deep constant-width stack where
/// the input batch IS a pre-activation drawn from N(0, sigma_p^2) (no input
/// linear layer), biases are zero, and the backward pass propagates
/// unit-variance gradients injected at the last pre-activation.
struct BenchConfig {
  int layers = 100;  // pre-activation stages; layers-1 weight matrices
  int width = 1000;
  int batch = 256;
  double sigma_p = 1.0;
  ActivationSpec activation{ActKind::Tanh};
  SchemeSpec scheme{};
  WeightDist dist = WeightDist::Normal;
  StatsMethod stats = StatsMethod::monte_carlo(1'000'000, 7);
  std::uint64_t seed = 1;
};

struct VarianceReport {
  std::string scheme_id;
  ActivationSpec activation{ActKind::Tanh};
  double sigma_p = 1.0;
  std::uint64_t seed = 0;
  double e_f = 0.0;  // SMAPE(final pre-activation variance, sigma_p^2)
  double e_b = 0.0;  // SMAPE(input gradient variance, 1)
  std::vector<double> forward_var;   // var(z_i) per stage
  std::vector<double> backward_var;  // var(dL/dz_i) per stage
  int exploded_layer = -1;           // first non-finite stage, -1 if none
};

VarianceReport run_variance_bench(const BenchConfig& cfg);

/// Median-of-seeds wrapper; run k uses seed derive_seed(cfg.seed, k). Runs
/// are independent and executed concurrently; results are identical to a
/// sequential loop.
struct BenchSummary {
  double e_f_median = 0.0;
  double e_b_median = 0.0;
  std::vector<VarianceReport> runs;
};

BenchSummary run_variance_bench_seeds(const BenchConfig& cfg, int n_seeds);

/// Monte Carlo ablation for the gaussian activation: per sample size, the
/// relative error of the MC forward weight variance against the closed-form
/// value (median over seeds), the wall time of one stats computation, and
/// the bench errors obtained with the MC-derived plan.
struct AblationRow {
  long n_samples = 0;
  double e_w = 0.0;
  double wall_ms = 0.0;
  double e_f = 0.0;
  double e_b = 0.0;
};

std::vector<AblationRow> run_mc_ablation(double sigma_a, double sigma_p,
                                         const std::vector<long>& sample_sizes,
                                         const std::vector<std::uint64_t>& seeds,
                                         const BenchConfig& bench_base);

double median(std::vector<double> values);

}  // namespace varinit
