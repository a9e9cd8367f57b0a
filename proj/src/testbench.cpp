#include "varinit/testbench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <future>
#include <stdexcept>
#include <thread>

#include "varinit/nn.hpp"
#include "varinit/rng.hpp"
#include "varinit/solver.hpp"

namespace varinit {

namespace {

double hidden_weight_variance(const BenchConfig& cfg) {
  const int w = cfg.width;
  switch (cfg.scheme.scheme) {
    case InitScheme::Vi3nrForward: {
      const ActivationStats stats = compute_stats(cfg.activation, cfg.sigma_p, cfg.stats);
      return forward_weight_variance(cfg.sigma_p, w, stats.post);
    }
    case InitScheme::Vi3nrBackward: {
      const ActivationStats stats = compute_stats(cfg.activation, cfg.sigma_p, cfg.stats);
      return backward_weight_variance(w, stats.deriv);
    }
    case InitScheme::Xavier:
      return 1.0 / w;  // equal fan-in/fan-out
    case InitScheme::KaimingFanIn:
    case InitScheme::KaimingFanOut:
      return 2.0 / w;
    case InitScheme::RandomNormal:
      return cfg.scheme.value * cfg.scheme.value;
    case InitScheme::FixedVarTimesFanIn:
      return cfg.scheme.value / w;
  }
  throw std::logic_error("unhandled scheme");
}

Mat random_normal_batch(int rows, int cols, double std_dev, std::uint64_t seed) {
  NormalSampler sampler(seed);
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = std_dev * sampler.next();
  }
  return m;
}

Mat make_weight(int width, double variance, WeightDist dist, std::uint64_t seed) {
  Mat w(width, width);
  if (dist == WeightDist::Normal) {
    NormalSampler sampler(seed);
    const double sd = std::sqrt(variance);
    for (int r = 0; r < width; ++r) {
      for (int c = 0; c < width; ++c) w(r, c) = sd * sampler.next();
    }
  } else {
    Xoshiro256pp rng(seed);
    const double bound = std::sqrt(3.0 * variance);
    for (int r = 0; r < width; ++r) {
      for (int c = 0; c < width; ++c) w(r, c) = bound * rng.uniform_sym();
    }
  }
  return w;
}

double flat_variance(const Mat& m) {
  const auto flat = m.reshaped();
  const double n = static_cast<double>(flat.size());
  const double mean = flat.mean();
  return (flat.array() - mean).square().sum() / (n - 1.0);
}

}  // namespace

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of empty set");
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

VarianceReport run_variance_bench(const BenchConfig& cfg) {
  if (cfg.layers < 2) throw std::invalid_argument("bench needs at least 2 stages");
  const int n_weights = cfg.layers - 1;

  VarianceReport report;
  report.scheme_id = cfg.scheme.to_string();
  report.activation = cfg.activation;
  report.sigma_p = cfg.sigma_p;
  report.seed = cfg.seed;
  report.forward_var.assign(cfg.layers, 0.0);
  report.backward_var.assign(cfg.layers, 0.0);

  const double w_var = hidden_weight_variance(cfg);

  std::vector<Mat> weights(n_weights);
  for (int i = 0; i < n_weights; ++i) {
    weights[i] = make_weight(cfg.width, w_var, cfg.dist, derive_seed(cfg.seed, 1000 + i));
  }

  // Forward: the batch enters as a pre-activation.
  Mat z = random_normal_batch(cfg.batch, cfg.width, cfg.sigma_p, derive_seed(cfg.seed, 1));
  report.forward_var[0] = flat_variance(z);

  std::vector<Mat> fprime(n_weights);
  bool exploded = false;
  for (int i = 0; i < n_weights; ++i) {
    const Mat x = apply_activation(cfg.activation, z);
    fprime[i] = activation_deriv(cfg.activation, z, &x);
    z.noalias() = x * weights[i].transpose();
    const double v = flat_variance(z);
    report.forward_var[i + 1] = v;
    if (!std::isfinite(v)) {
      report.exploded_layer = i + 1;
      exploded = true;
      break;
    }
  }

  const double target = cfg.sigma_p * cfg.sigma_p;
  if (exploded) {
    report.e_f = 100.0;
    report.e_b = 100.0;  // gradients through a non-finite stage are undefined
    return report;
  }
  report.e_f = smape(report.forward_var.back(), target);

  // Backward: unit-variance gradients injected at the last pre-activation.
  Mat g = random_normal_batch(cfg.batch, cfg.width, 1.0, derive_seed(cfg.seed, 2));
  report.backward_var[cfg.layers - 1] = flat_variance(g);
  for (int i = n_weights - 1; i >= 0; --i) {
    Mat gx;
    gx.noalias() = g * weights[i];
    g = gx.cwiseProduct(fprime[i]);
    const double v = flat_variance(g);
    report.backward_var[i] = v;
    if (!std::isfinite(v)) {
      report.exploded_layer = std::max(report.exploded_layer, i);
      report.e_b = 100.0;
      return report;
    }
  }
  report.e_b = smape(report.backward_var.front(), 1.0);
  return report;
}

BenchSummary run_variance_bench_seeds(const BenchConfig& cfg, int n_seeds) {
  BenchSummary summary;
  summary.runs.resize(n_seeds);

  std::atomic<int> next{0};
  const int n_workers = std::min<int>(n_seeds, std::max(1u, std::thread::hardware_concurrency()));
  std::vector<std::future<void>> workers;
  workers.reserve(n_workers);
  for (int t = 0; t < n_workers; ++t) {
    workers.push_back(std::async(std::launch::async, [&]() {
      for (int k = next.fetch_add(1); k < n_seeds; k = next.fetch_add(1)) {
        BenchConfig run_cfg = cfg;
        run_cfg.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(k));
        summary.runs[k] = run_variance_bench(run_cfg);
      }
    }));
  }
  for (auto& w : workers) w.get();

  std::vector<double> efs, ebs;
  for (const auto& r : summary.runs) {
    efs.push_back(r.e_f);
    ebs.push_back(r.e_b);
  }
  summary.e_f_median = median(efs);
  summary.e_b_median = median(ebs);
  return summary;
}

std::vector<AblationRow> run_mc_ablation(double sigma_a, double sigma_p,
                                         const std::vector<long>& sample_sizes,
                                         const std::vector<std::uint64_t>& seeds,
                                         const BenchConfig& bench_base) {
  if (seeds.empty()) throw std::invalid_argument("ablation needs at least one seed");
  const ActivationSpec spec(ActKind::Gaussian, sigma_a);
  const ActivationStats exact = gaussian_analytic_stats(sigma_a, sigma_p);
  const double var_gt = forward_weight_variance(sigma_p, bench_base.width, exact.post);

  std::vector<AblationRow> rows;
  rows.reserve(sample_sizes.size());
  for (const long n : sample_sizes) {
    AblationRow row;
    row.n_samples = n;

    std::vector<double> errs;
    errs.reserve(seeds.size());
    for (const std::uint64_t seed : seeds) {
      const ActivationStats est = mc_stats(spec, sigma_p, n, seed);
      const double var_mc = forward_weight_variance(sigma_p, bench_base.width, est.post);
      errs.push_back(std::abs(var_mc - var_gt) / var_gt);
    }
    row.e_w = median(errs);

    const auto t0 = std::chrono::steady_clock::now();
    volatile double sink = second_moment(mc_stats(spec, sigma_p, n, seeds.front()).post);
    (void)sink;
    row.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

    BenchConfig bench = bench_base;
    bench.activation = spec;
    bench.sigma_p = sigma_p;
    bench.scheme = SchemeSpec{InitScheme::Vi3nrForward, 0.0};
    bench.stats = StatsMethod::monte_carlo(n, seeds.front());
    const VarianceReport rep = run_variance_bench(bench);
    row.e_f = rep.e_f;
    row.e_b = rep.e_b;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace varinit
