#include "varinit/nn.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "varinit/rng.hpp"

namespace varinit {

Mlp initialize(const NetworkShape& shape, const ActivationSpec& activation,
               const InitPlan& plan, std::uint64_t seed) {
  const int n_layers = shape.n_weight_layers();
  if (static_cast<int>(plan.layers.size()) != n_layers) {
    throw std::invalid_argument("init plan does not match network shape");
  }

  Mlp mlp;
  mlp.shape = shape;
  mlp.activation = activation;
  mlp.weights.reserve(n_layers);
  mlp.biases.reserve(n_layers);

  for (int i = 0; i < n_layers; ++i) {
    const LayerInit& layer = plan.layers[i];
    if (layer.fan_in != shape.fan_in(i) || layer.fan_out != shape.fan_out(i)) {
      throw std::invalid_argument("init plan layer dimensions do not match shape");
    }
    NormalSampler sampler(derive_seed(seed, static_cast<std::uint64_t>(i)));
    const double std_dev = std::sqrt(layer.weight_variance);

    const auto draw = [&]() {
      if (layer.dist == WeightDist::Normal) return std_dev * sampler.next();
      return layer.uniform_bound * sampler.uniform_source().uniform_sym();
    };

    Mat w(layer.fan_out, layer.fan_in);
    for (int r = 0; r < w.rows(); ++r) {
      for (int c = 0; c < w.cols(); ++c) w(r, c) = draw();
    }
    Vec b = Vec::Zero(layer.fan_out);
    if (layer.bias == BiasPolicy::SameAsWeights) {
      for (int r = 0; r < b.size(); ++r) b(r) = draw();
    }
    mlp.weights.push_back(std::move(w));
    mlp.biases.push_back(std::move(b));
  }
  return mlp;
}

void apply_activation_to(const ActivationSpec& spec, const Mat& z, Mat& out) {
  switch (spec.kind()) {
    case ActKind::Identity:
      out = z;
      return;
    case ActKind::Relu:
      out = z.cwiseMax(0.0);
      return;
    case ActKind::Tanh:
      out = z.array().tanh().matrix();
      return;
    case ActKind::Sigmoid:
      out = (1.0 / (1.0 + (-z.array()).exp())).matrix();
      return;
    case ActKind::Gaussian: {
      const double c = 1.0 / (2.0 * spec.param() * spec.param());
      out = ((-c) * z.array().square()).exp().matrix();
      return;
    }
    default:
      out = z.unaryExpr([&spec](double v) { return spec.eval(v); });
  }
}

Mat apply_activation(const ActivationSpec& spec, const Mat& z) {
  Mat out;
  apply_activation_to(spec, z, out);
  return out;
}

void activation_deriv_to(const ActivationSpec& spec, const Mat& z, const Mat* fz, Mat& out) {
  switch (spec.kind()) {
    case ActKind::Identity:
      out.setOnes(z.rows(), z.cols());
      return;
    case ActKind::Relu:
      out = (z.array() > 0.0).cast<double>().matrix();
      return;
    case ActKind::Tanh:
      if (fz) {
        out = (1.0 - fz->array().square()).matrix();
      } else {
        out = (1.0 - z.array().tanh().square()).matrix();
      }
      return;
    case ActKind::Sigmoid:
      if (fz) {
        out = (fz->array() * (1.0 - fz->array())).matrix();
      } else {
        const auto s = 1.0 / (1.0 + (-z.array()).exp());
        out = (s * (1.0 - s)).matrix();
      }
      return;
    case ActKind::Gaussian: {
      const double inv = 1.0 / (spec.param() * spec.param());
      if (fz) {
        out = (-inv * z.array() * fz->array()).matrix();
      } else {
        const double c = 0.5 * inv;
        out = (-inv * z.array() * ((-c) * z.array().square()).exp()).matrix();
      }
      return;
    }
    default:
      out = z.unaryExpr([&spec](double v) { return spec.deriv(v); });
  }
}

Mat activation_deriv(const ActivationSpec& spec, const Mat& z, const Mat* fz) {
  Mat out;
  activation_deriv_to(spec, z, fz, out);
  return out;
}

void forward_traced(const Mlp& mlp, const Mat& batch, ForwardTrace& trace) {
  const int n_layers = mlp.n_weight_layers();
  if (batch.cols() != mlp.shape.input_dim()) {
    throw std::invalid_argument("batch width does not match network input dimension");
  }
  trace.x.resize(n_layers);
  trace.z.resize(n_layers);
  trace.x[0] = batch;
  for (int i = 0; i < n_layers; ++i) {
    trace.z[i].noalias() = trace.x[i] * mlp.weights[i].transpose();
    trace.z[i].rowwise() += mlp.biases[i].transpose();
    if (i + 1 < n_layers) {
      apply_activation_to(mlp.activation, trace.z[i], trace.x[i + 1]);
    }
  }
}

Mat forward(const Mlp& mlp, const Mat& batch, ForwardTrace* trace) {
  if (trace) {
    forward_traced(mlp, batch, *trace);
    return trace->z.back();
  }
  const int n_layers = mlp.n_weight_layers();
  if (batch.cols() != mlp.shape.input_dim()) {
    throw std::invalid_argument("batch width does not match network input dimension");
  }
  Mat x = batch;
  Mat z;
  for (int i = 0; i < n_layers; ++i) {
    z.noalias() = x * mlp.weights[i].transpose();
    z.rowwise() += mlp.biases[i].transpose();
    if (i + 1 < n_layers) apply_activation_to(mlp.activation, z, x);
  }
  return z;
}

void backward_params(const Mlp& mlp, const ForwardTrace& trace, const Mat& output_grad,
                     Gradients& grads, Mat& scratch_gz, Mat& scratch_gx, Mat& scratch_fp) {
  const int n_layers = mlp.n_weight_layers();
  if (static_cast<int>(trace.z.size()) != n_layers ||
      static_cast<int>(trace.x.size()) != n_layers) {
    throw std::invalid_argument("trace does not match network");
  }
  if (output_grad.rows() != trace.z.back().rows() ||
      output_grad.cols() != trace.z.back().cols()) {
    throw std::invalid_argument("output gradient shape mismatch");
  }
  grads.weights.resize(n_layers);
  grads.biases.resize(n_layers);

  scratch_gz = output_grad;
  for (int i = n_layers - 1; i >= 0; --i) {
    grads.weights[i].noalias() = scratch_gz.transpose() * trace.x[i];
    grads.biases[i] = scratch_gz.colwise().sum().transpose();
    if (i > 0) {
      scratch_gx.noalias() = scratch_gz * mlp.weights[i];
      activation_deriv_to(mlp.activation, trace.z[i - 1], &trace.x[i], scratch_fp);
      scratch_gz = scratch_gx.cwiseProduct(scratch_fp);
    }
  }
}

Gradients backward(const Mlp& mlp, const ForwardTrace& trace, const Mat& output_grad) {
  const int n_layers = mlp.n_weight_layers();
  if (static_cast<int>(trace.z.size()) != n_layers ||
      static_cast<int>(trace.x.size()) != n_layers) {
    throw std::invalid_argument("trace does not match network");
  }
  if (output_grad.rows() != trace.z.back().rows() ||
      output_grad.cols() != trace.z.back().cols()) {
    throw std::invalid_argument("output gradient shape mismatch");
  }

  Gradients grads;
  grads.weights.resize(n_layers);
  grads.biases.resize(n_layers);
  grads.z.resize(n_layers);

  Mat gz = output_grad;
  for (int i = n_layers - 1; i >= 0; --i) {
    grads.z[i] = gz;
    grads.weights[i].noalias() = gz.transpose() * trace.x[i];
    grads.biases[i] = gz.colwise().sum().transpose();
    if (i > 0) {
      Mat gx;
      gx.noalias() = gz * mlp.weights[i];
      const Mat fprime = activation_deriv(mlp.activation, trace.z[i - 1], &trace.x[i]);
      gz = gx.cwiseProduct(fprime);
    }
  }
  grads.input.noalias() = grads.z[0] * mlp.weights[0];
  return grads;
}

MomentSummary batch_moments(const Mat& m) {
  const auto flat = m.reshaped();
  const double n = static_cast<double>(flat.size());
  const double mean = flat.mean();
  const auto centered = flat.array() - mean;
  const double m2 = centered.square().sum() / n;
  const double m3 = centered.cube().sum() / n;
  MomentSummary out;
  out.mean = mean;
  out.variance = n > 1.0 ? m2 * n / (n - 1.0) : 0.0;
  out.skewness = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
  return out;
}

namespace {

constexpr char kMagic[8] = {'V', 'A', 'R', 'I', 'N', 'E', 'T', '1'};

template <typename T>
void write_raw(std::ofstream& f, const T& v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T read_raw(std::ifstream& f) {
  T v{};
  f.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!f) throw std::runtime_error("checkpoint truncated");
  return v;
}

}  // namespace

void save_checkpoint(const Mlp& mlp, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write checkpoint '" + path + "'");
  f.write(kMagic, sizeof(kMagic));
  write_raw(f, static_cast<std::uint32_t>(mlp.shape.widths.size()));
  for (int w : mlp.shape.widths) write_raw(f, static_cast<std::uint32_t>(w));
  write_raw(f, static_cast<std::uint32_t>(mlp.activation.kind()));
  write_raw(f, mlp.activation.param());
  for (const Mat& w : mlp.weights) {
    f.write(reinterpret_cast<const char*>(w.data()),
            static_cast<std::streamsize>(sizeof(double) * w.size()));
  }
  for (const Vec& b : mlp.biases) {
    f.write(reinterpret_cast<const char*>(b.data()),
            static_cast<std::streamsize>(sizeof(double) * b.size()));
  }
  if (!f) throw std::runtime_error("checkpoint write failed for '" + path + "'");
}

Mlp load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint '" + path + "'");
  char magic[8];
  f.read(magic, sizeof(magic));
  if (!f || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("'" + path + "' is not a checkpoint file");
  }
  const auto n_widths = read_raw<std::uint32_t>(f);
  if (n_widths < 2 || n_widths > 1u << 20) throw std::runtime_error("corrupt checkpoint header");
  std::vector<int> widths(n_widths);
  for (auto& w : widths) w = static_cast<int>(read_raw<std::uint32_t>(f));
  const auto kind = static_cast<ActKind>(read_raw<std::uint32_t>(f));
  const double param = read_raw<double>(f);

  Mlp mlp;
  mlp.shape = NetworkShape(widths);
  mlp.activation = ActivationSpec(kind, param);
  for (int i = 0; i + 1 < static_cast<int>(widths.size()); ++i) {
    Mat w(widths[i + 1], widths[i]);
    f.read(reinterpret_cast<char*>(w.data()),
           static_cast<std::streamsize>(sizeof(double) * w.size()));
    if (!f) throw std::runtime_error("checkpoint truncated");
    mlp.weights.push_back(std::move(w));
  }
  for (int i = 0; i + 1 < static_cast<int>(widths.size()); ++i) {
    Vec b(widths[i + 1]);
    f.read(reinterpret_cast<char*>(b.data()),
           static_cast<std::streamsize>(sizeof(double) * b.size()));
    if (!f) throw std::runtime_error("checkpoint truncated");
    mlp.biases.push_back(std::move(b));
  }
  return mlp;
}

}  // namespace varinit
