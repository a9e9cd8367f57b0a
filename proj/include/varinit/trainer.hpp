#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "varinit/io.hpp"
#include "varinit/nn.hpp"
#include "varinit/solver.hpp"

namespace varinit {

enum class TaskKind { Image, Audio, Sdf2d };
enum class SdfShape { Circle, Square, Annulus };

/// A signal-fitting task. Coordinates are normalized to [-1,1] per
/// dimension; image/audio targets are scaled to [-1,1]. For image and audio
/// the evaluation set is the training set (full-batch fitting of the whole
/// signal); sdf2d trains on a coarse grid and evaluates sign agreement on a
/// dense one.
struct Task {
  TaskKind kind = TaskKind::Image;
  Mat train_inputs;
  Mat train_targets;
  Mat eval_inputs;
  Mat eval_targets;
  double peak = 2.0;  // PSNR peak for [-1,1] signals
  int width = 0, height = 0, channels = 1;  // image geometry, for rendering
  int sample_rate = 8000;                   // audio
};

Task make_image_task(const Image& img);
Task make_audio_task(const Audio& audio);
Task make_sdf_task(SdfShape shape, int train_res = 64, int eval_res = 256);

double sdf_value(SdfShape shape, double x, double y);

/// Deterministic built-in test signals.
Image synthetic_image(int size);
Audio synthetic_audio(int n_samples, int sample_rate = 8000);

struct AdamParams {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One canonical Adam step over `count` parameters (bias-corrected first and
/// second moments, t counts steps from 1). Elementwise scalar loop: the
/// update order is fixed, so training is bit-reproducible.
void adam_update(double* param, const double* grad, double* m, double* v, long count,
                 const AdamParams& p, long t);

struct TrainConfig {
  int steps = 2000;
  AdamParams adam;
  std::uint64_t seed = 1;
  NetworkShape shape;  // leave empty for the task default (8x128; audio 3x256)
  ActivationSpec activation{ActKind::Gaussian, 0.05};
  SchemeSpec scheme{};
  double sigma_p = 1.0;
  WeightDist dist = WeightDist::Uniform;
  BiasPolicy bias = BiasPolicy::Zero;
  StatsMethod stats = StatsMethod::monte_carlo(1'000'000, 7);
};

/// Task defaults: 8 hidden layers x 128 units, except audio which uses
/// 3 x 256 with biases initialized like the weights.
NetworkShape default_shape(const Task& task);
TrainConfig default_config(const Task& task);

struct FitResult {
  double final_metric = 0.0;  // PSNR (image), MSE (audio), sign IoU (sdf2d)
  double final_mse = 0.0;
  std::vector<double> mse_curve;  // training MSE before each step's update
  Mlp net;
  bool diverged = false;
  int diverged_step = -1;
};

/// Full-batch Adam on MSE. Deterministic for a given config and seed: one
/// thread, fixed parameter-update order.
FitResult fit(const Task& task, const TrainConfig& cfg);

/// 10 log10(peak^2 / MSE); returns +inf when the MSE is exactly zero.
double psnr(const Mat& pred, const Mat& target, double peak);

/// Fraction of points whose predicted SDF sign matches the target's.
double sign_iou(const Mat& pred, const Mat& target);

/// Higher-is-better view of a task metric (negates audio MSE).
double metric_score(TaskKind kind, double metric);

/// Metric value recorded for diverged runs.
double metric_floor(TaskKind kind);

/// (sigma_a, sigma_p) grid of final task metrics for gaussian activations.
/// Cells run concurrently with seeds derive_seed(cfg.seed, cell_index);
/// diverged cells record the metric floor.
struct TaskHeatmap {
  std::vector<double> sigma_a;  // rows
  std::vector<double> sigma_p;  // cols
  std::vector<double> values;   // row-major metric matrix
  double at(int r, int c) const { return values[r * sigma_p.size() + c]; }
};

TaskHeatmap task_heatmap(const Task& task, const GridSpec& sigma_a_grid,
                         const GridSpec& sigma_p_grid, const TrainConfig& cfg);

/// Per-column argmax ridge slope of a task heatmap (fits sigma_a ~ k sigma_p
/// through the origin, skipping all-floor columns).
double task_ridge_slope(const TaskHeatmap& map, TaskKind kind);

/// Local line search around a solved sigma_p: evaluates the multipliers
/// {0.5, 0.75, 1, 1.5, 2} and returns the sigma_p with the best task metric.
struct LineSearchResult {
  double sigma_p = 0.0;
  double metric = 0.0;
  std::vector<std::pair<double, double>> tried;  // (sigma_p, metric)
};

LineSearchResult line_search_sigma_p(const Task& task, const TrainConfig& cfg,
                                     double solved_sigma_p);

/// Render the network over the task's native sampling.
Image render_image(const Mlp& mlp, int width, int height, int channels);
Audio render_audio(const Mlp& mlp, int n_samples, int sample_rate);

}  // namespace varinit
