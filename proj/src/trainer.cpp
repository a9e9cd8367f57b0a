#include "varinit/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <limits>
#include <stdexcept>
#include <thread>

#include "varinit/rng.hpp"

namespace varinit {

namespace {

// Pixel/sample centers mapped to [-1, 1].
double centered_coord(int index, int count) {
  return -1.0 + 2.0 * (index + 0.5) / count;
}

}  // namespace

Task make_image_task(const Image& img) {
  Task task;
  task.kind = TaskKind::Image;
  task.width = img.width;
  task.height = img.height;
  task.channels = img.channels;
  const int n = img.width * img.height;
  task.train_inputs.resize(n, 2);
  task.train_targets.resize(n, img.channels);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const int row = y * img.width + x;
      task.train_inputs(row, 0) = centered_coord(x, img.width);
      task.train_inputs(row, 1) = centered_coord(y, img.height);
      for (int c = 0; c < img.channels; ++c) {
        task.train_targets(row, c) = 2.0 * img.at(y, x, c) - 1.0;
      }
    }
  }
  task.eval_inputs = task.train_inputs;
  task.eval_targets = task.train_targets;
  return task;
}

Task make_audio_task(const Audio& audio) {
  Task task;
  task.kind = TaskKind::Audio;
  task.sample_rate = audio.sample_rate;
  const int n = static_cast<int>(audio.samples.size());
  task.train_inputs.resize(n, 1);
  task.train_targets.resize(n, 1);
  for (int i = 0; i < n; ++i) {
    task.train_inputs(i, 0) = centered_coord(i, n);
    task.train_targets(i, 0) = audio.samples[i];
  }
  task.eval_inputs = task.train_inputs;
  task.eval_targets = task.train_targets;
  return task;
}

double sdf_value(SdfShape shape, double x, double y) {
  switch (shape) {
    case SdfShape::Circle:
      return std::sqrt(x * x + y * y) - 0.5;
    case SdfShape::Square: {
      const double qx = std::abs(x) - 0.5;
      const double qy = std::abs(y) - 0.5;
      const double ox = std::max(qx, 0.0);
      const double oy = std::max(qy, 0.0);
      return std::sqrt(ox * ox + oy * oy) + std::min(std::max(qx, qy), 0.0);
    }
    case SdfShape::Annulus:
      return std::abs(std::sqrt(x * x + y * y) - 0.45) - 0.15;
  }
  return 0.0;
}

namespace {

void fill_grid(Mat& inputs, Mat& targets, SdfShape shape, int res) {
  inputs.resize(res * res, 2);
  targets.resize(res * res, 1);
  for (int y = 0; y < res; ++y) {
    for (int x = 0; x < res; ++x) {
      const int row = y * res + x;
      const double cx = centered_coord(x, res);
      const double cy = centered_coord(y, res);
      inputs(row, 0) = cx;
      inputs(row, 1) = cy;
      targets(row, 0) = sdf_value(shape, cx, cy);
    }
  }
}

}  // namespace

Task make_sdf_task(SdfShape shape, int train_res, int eval_res) {
  Task task;
  task.kind = TaskKind::Sdf2d;
  task.width = eval_res;
  task.height = eval_res;
  fill_grid(task.train_inputs, task.train_targets, shape, train_res);
  fill_grid(task.eval_inputs, task.eval_targets, shape, eval_res);
  return task;
}

Image synthetic_image(int size) {
  Image img;
  img.width = size;
  img.height = size;
  img.channels = 1;
  img.pixels.resize(static_cast<size_t>(size) * size);
  for (int yi = 0; yi < size; ++yi) {
    for (int xi = 0; xi < size; ++xi) {
      const double x = centered_coord(xi, size);
      const double y = centered_coord(yi, size);
      double g = 0.35 * std::sin(2.5 * M_PI * x + 1.3) * std::cos(3.5 * M_PI * y);
      g += 0.45 * std::exp(-((x - 0.3) * (x - 0.3) + (y + 0.2) * (y + 0.2)) / 0.08);
      g -= 0.5 * std::exp(-((x + 0.45) * (x + 0.45) + (y - 0.4) * (y - 0.4)) / 0.02);
      g += 0.3 * std::sin(8.0 * M_PI * (0.6 * x + 0.8 * y)) *
           std::exp(-(x * x + y * y) / 0.5);
      g += 0.15 * x - 0.1 * y;
      img.pixels[static_cast<size_t>(yi) * size + xi] = 0.5 + 0.5 * std::tanh(1.4 * g);
    }
  }
  return img;
}

Audio synthetic_audio(int n_samples, int sample_rate) {
  Audio audio;
  audio.sample_rate = sample_rate;
  audio.samples.resize(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    double s = 0.4 * std::sin(2.0 * M_PI * 220.0 * t);
    s += 0.25 * std::sin(2.0 * M_PI * 660.0 * t + 1.1);
    s += 0.2 * std::sin(2.0 * M_PI * (100.0 * t + 350.0 * t * t));  // upward chirp
    s += 0.1 * std::sin(2.0 * M_PI * 40.0 * t);
    audio.samples[i] = s;
  }
  return audio;
}

NetworkShape default_shape(const Task& task) {
  const int in = static_cast<int>(task.train_inputs.cols());
  const int out = static_cast<int>(task.train_targets.cols());
  if (task.kind == TaskKind::Audio) return NetworkShape::mlp(in, 256, 3, out);
  return NetworkShape::mlp(in, 128, 8, out);
}

TrainConfig default_config(const Task& task) {
  TrainConfig cfg;
  cfg.shape = default_shape(task);
  if (task.kind == TaskKind::Audio) cfg.bias = BiasPolicy::SameAsWeights;
  return cfg;
}

double psnr(const Mat& pred, const Mat& target, double peak) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw std::invalid_argument("psnr: shape mismatch");
  }
  const double mse = (pred - target).squaredNorm() / static_cast<double>(pred.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

double sign_iou(const Mat& pred, const Mat& target) {
  if (pred.size() != target.size()) throw std::invalid_argument("sign_iou: shape mismatch");
  const auto inside_p = pred.reshaped().array() <= 0.0;
  const auto inside_t = target.reshaped().array() <= 0.0;
  return (inside_p == inside_t).cast<double>().mean();
}

double metric_score(TaskKind kind, double metric) {
  return kind == TaskKind::Audio ? -metric : metric;
}

double metric_floor(TaskKind kind) {
  switch (kind) {
    case TaskKind::Image: return 0.0;                // dB
    case TaskKind::Audio: return 1e9;                // MSE sentinel
    case TaskKind::Sdf2d: return 0.0;                // IoU
  }
  return 0.0;
}

void adam_update(double* param, const double* grad, double* m, double* v, long count,
                 const AdamParams& p, long t) {
  const double bc1 = 1.0 - std::pow(p.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(p.beta2, static_cast<double>(t));
  for (long i = 0; i < count; ++i) {
    m[i] = p.beta1 * m[i] + (1.0 - p.beta1) * grad[i];
    v[i] = p.beta2 * v[i] + (1.0 - p.beta2) * grad[i] * grad[i];
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    param[i] -= p.lr * mhat / (std::sqrt(vhat) + p.eps);
  }
}

namespace {

struct AdamState {
  std::vector<Mat> mw, vw;
  std::vector<Vec> mb, vb;
  long t = 0;

  explicit AdamState(const Mlp& mlp) {
    for (int i = 0; i < mlp.n_weight_layers(); ++i) {
      mw.push_back(Mat::Zero(mlp.weights[i].rows(), mlp.weights[i].cols()));
      vw.push_back(Mat::Zero(mlp.weights[i].rows(), mlp.weights[i].cols()));
      mb.push_back(Vec::Zero(mlp.biases[i].size()));
      vb.push_back(Vec::Zero(mlp.biases[i].size()));
    }
  }
};

double task_metric(const Task& task, const Mlp& mlp) {
  const Mat pred = forward(mlp, task.eval_inputs);
  switch (task.kind) {
    case TaskKind::Image: return psnr(pred, task.eval_targets, task.peak);
    case TaskKind::Audio:
      return (pred - task.eval_targets).squaredNorm() / static_cast<double>(pred.size());
    case TaskKind::Sdf2d: return sign_iou(pred, task.eval_targets);
  }
  return 0.0;
}

}  // namespace

FitResult fit(const Task& task, const TrainConfig& cfg) {
  if (cfg.steps < 1 || !(cfg.adam.lr > 0.0)) {
    throw std::invalid_argument("fit: steps and learning rate must be positive");
  }
  NetworkShape shape = cfg.shape.widths.empty() ? default_shape(task) : cfg.shape;
  if (shape.input_dim() != task.train_inputs.cols() ||
      shape.output_dim() != task.train_targets.cols()) {
    throw std::invalid_argument("fit: network shape does not match task dimensions");
  }

  const InitPlan plan = build_plan(shape, cfg.activation, cfg.sigma_p, cfg.scheme,
                                   cfg.stats, uniform_unit_input_moments(), cfg.dist,
                                   cfg.bias);
  FitResult result;
  result.net = initialize(shape, cfg.activation, plan, cfg.seed);
  result.mse_curve.reserve(cfg.steps);

  AdamState adam(result.net);
  const double inv_count = 1.0 / static_cast<double>(task.train_targets.size());

  // all hot-loop buffers preallocated and reused across steps
  ForwardTrace trace;
  Gradients grads;
  Mat output_grad, gz, gx, fp;
  for (int step = 0; step < cfg.steps; ++step) {
    forward_traced(result.net, task.train_inputs, trace);
    output_grad = trace.z.back() - task.train_targets;
    const double mse = output_grad.squaredNorm() * inv_count;
    result.mse_curve.push_back(mse);
    if (!std::isfinite(mse)) {
      result.diverged = true;
      result.diverged_step = step;
      result.final_mse = mse;
      result.final_metric = metric_floor(task.kind);
      return result;
    }

    output_grad *= 2.0 * inv_count;
    backward_params(result.net, trace, output_grad, grads, gz, gx, fp);

    ++adam.t;
    for (int i = 0; i < result.net.n_weight_layers(); ++i) {
      adam_update(result.net.weights[i].data(), grads.weights[i].data(),
                  adam.mw[i].data(), adam.vw[i].data(), result.net.weights[i].size(),
                  cfg.adam, adam.t);
      adam_update(result.net.biases[i].data(), grads.biases[i].data(), adam.mb[i].data(),
                  adam.vb[i].data(), result.net.biases[i].size(), cfg.adam, adam.t);
    }
  }

  const Mat pred = forward(result.net, task.train_inputs);
  result.final_mse = (pred - task.train_targets).squaredNorm() * inv_count;
  if (!std::isfinite(result.final_mse)) {
    result.diverged = true;
    result.diverged_step = cfg.steps;
    result.final_metric = metric_floor(task.kind);
    return result;
  }
  result.final_metric = task_metric(task, result.net);
  return result;
}

TaskHeatmap task_heatmap(const Task& task, const GridSpec& sigma_a_grid,
                         const GridSpec& sigma_p_grid, const TrainConfig& cfg) {
  if (cfg.activation.kind() != ActKind::Gaussian) {
    throw std::invalid_argument("task_heatmap sweeps the gaussian activation family");
  }
  TaskHeatmap map;
  map.sigma_a = sigma_a_grid.points();
  map.sigma_p = sigma_p_grid.points();
  map.values.assign(map.sigma_a.size() * map.sigma_p.size(), metric_floor(task.kind));

  const int n_cells = static_cast<int>(map.values.size());
  std::atomic<int> next{0};
  const int n_workers =
      std::min<int>(n_cells, std::max(1u, std::thread::hardware_concurrency()));
  std::vector<std::future<void>> workers;
  for (int t = 0; t < n_workers; ++t) {
    workers.push_back(std::async(std::launch::async, [&]() {
      for (int cell = next.fetch_add(1); cell < n_cells; cell = next.fetch_add(1)) {
        const int r = cell / static_cast<int>(map.sigma_p.size());
        const int c = cell % static_cast<int>(map.sigma_p.size());
        TrainConfig cell_cfg = cfg;
        cell_cfg.activation = ActivationSpec(ActKind::Gaussian, map.sigma_a[r]);
        cell_cfg.sigma_p = map.sigma_p[c];
        cell_cfg.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(cell));
        try {
          const FitResult res = fit(task, cell_cfg);
          map.values[cell] = res.final_metric;
        } catch (const std::domain_error&) {
          // degenerate activation statistics for this cell
        }
      }
    }));
  }
  for (auto& w : workers) w.get();
  return map;
}

double task_ridge_slope(const TaskHeatmap& map, TaskKind kind) {
  double sxy = 0.0;
  double sxx = 0.0;
  for (size_t c = 0; c < map.sigma_p.size(); ++c) {
    double best = -std::numeric_limits<double>::infinity();
    size_t best_r = 0;
    bool any = false;
    for (size_t r = 0; r < map.sigma_a.size(); ++r) {
      const double score = metric_score(kind, map.at(r, c));
      if (score > best) {
        best = score;
        best_r = r;
        any = true;
      }
    }
    if (!any || best <= metric_score(kind, metric_floor(kind))) continue;
    sxy += map.sigma_p[c] * map.sigma_a[best_r];
    sxx += map.sigma_p[c] * map.sigma_p[c];
  }
  if (sxx == 0.0) throw std::domain_error("ridge fit has no usable columns");
  return sxy / sxx;
}

LineSearchResult line_search_sigma_p(const Task& task, const TrainConfig& cfg,
                                     double solved_sigma_p) {
  static constexpr double kMultipliers[] = {0.5, 0.75, 1.0, 1.5, 2.0};
  LineSearchResult out;
  double best_score = -std::numeric_limits<double>::infinity();
  for (const double mult : kMultipliers) {
    TrainConfig trial = cfg;
    trial.sigma_p = solved_sigma_p * mult;
    const FitResult res = fit(task, trial);
    out.tried.emplace_back(trial.sigma_p, res.final_metric);
    const double score = metric_score(task.kind, res.final_metric);
    if (score > best_score) {
      best_score = score;
      out.sigma_p = trial.sigma_p;
      out.metric = res.final_metric;
    }
  }
  return out;
}

Image render_image(const Mlp& mlp, int width, int height, int channels) {
  Image img;
  img.width = width;
  img.height = height;
  img.channels = channels;
  img.pixels.resize(static_cast<size_t>(width) * height * channels);
  Mat coords(width * height, 2);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      coords(y * width + x, 0) = centered_coord(x, width);
      coords(y * width + x, 1) = centered_coord(y, height);
    }
  }
  const Mat pred = forward(mlp, coords);
  for (int row = 0; row < pred.rows(); ++row) {
    for (int c = 0; c < channels; ++c) {
      img.pixels[static_cast<size_t>(row) * channels + c] =
          0.5 * (pred(row, c) + 1.0);
    }
  }
  return img;
}

Audio render_audio(const Mlp& mlp, int n_samples, int sample_rate) {
  Audio audio;
  audio.sample_rate = sample_rate;
  audio.samples.resize(n_samples);
  Mat coords(n_samples, 1);
  for (int i = 0; i < n_samples; ++i) coords(i, 0) = centered_coord(i, n_samples);
  const Mat pred = forward(mlp, coords);
  for (int i = 0; i < n_samples; ++i) audio.samples[i] = pred(i, 0);
  return audio;
}

}  // namespace varinit
