#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "varinit/activation.hpp"
#include "varinit/init.hpp"

namespace varinit {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

/// Dense MLP: weights[i] is (fan_out x fan_in) so a batch of rows maps
/// through z_i = x_i * W_i^T + b_i, x_{i+1} = f(z_i); the final layer is
/// linear (no activation after z_n).
struct Mlp {
  NetworkShape shape;
  ActivationSpec activation{ActKind::Identity};
  std::vector<Mat> weights;
  std::vector<Vec> biases;

  int n_weight_layers() const { return static_cast<int>(weights.size()); }
};

/// Cached batches from one forward pass: x[0..n] post-activations (x[0] is
/// the input batch), z[0..n] pre-activations (z[n] is the output).
struct ForwardTrace {
  std::vector<Mat> x;
  std::vector<Mat> z;
};

struct Gradients {
  std::vector<Mat> weights;
  std::vector<Vec> biases;
  std::vector<Mat> z;  // dL/dz_i per layer, exposed for variance probing
  Mat input;           // dL/dx_0
};

/// Realize an InitPlan: weights drawn per layer from the plan's
/// distribution using the per-layer stream derive_seed(seed, layer), filled
/// in row-major order; biases drawn after the weights from the same stream
/// when the policy is SameAsWeights, zero otherwise.
Mlp initialize(const NetworkShape& shape, const ActivationSpec& activation,
               const InitPlan& plan, std::uint64_t seed);

/// Apply f elementwise into out (storage reused when already sized).
/// Vectorized for the smooth kinds Eigen can fuse.
void apply_activation_to(const ActivationSpec& spec, const Mat& z, Mat& out);
Mat apply_activation(const ActivationSpec& spec, const Mat& z);

/// f'(z), optionally reusing x = f(z) for kinds where that is cheaper
/// (tanh, sigmoid, gaussian). Pass nullptr to compute from z alone.
void activation_deriv_to(const ActivationSpec& spec, const Mat& z, const Mat* fz, Mat& out);
Mat activation_deriv(const ActivationSpec& spec, const Mat& z, const Mat* fz = nullptr);

/// Forward pass writing into the trace; trace storage is reused across
/// calls, so a training loop allocates only on its first step.
void forward_traced(const Mlp& mlp, const Mat& batch, ForwardTrace& trace);

Mat forward(const Mlp& mlp, const Mat& batch, ForwardTrace* trace = nullptr);

/// Reverse-mode gradients for the loss whose dL/d(output) is output_grad;
/// trace must come from forward() on this mlp. Reductions are plain Eigen
/// products evaluated single-threaded, so results are bit-reproducible.
Gradients backward(const Mlp& mlp, const ForwardTrace& trace, const Mat& output_grad);

/// Allocation-free backward for training loops: fills grads (weights and
/// biases only, z-gradient and input-gradient bookkeeping skipped) using the
/// two scratch matrices. Numerically identical to backward().
void backward_params(const Mlp& mlp, const ForwardTrace& trace, const Mat& output_grad,
                     Gradients& grads, Mat& scratch_gz, Mat& scratch_gx, Mat& scratch_fp);

struct MomentSummary {
  double mean = 0.0;
  double variance = 0.0;  // unbiased, over all entries
  double skewness = 0.0;
};

MomentSummary batch_moments(const Mat& m);

/// Flat little-endian binary checkpoint: magic, widths, activation kind and
/// parameter, then per layer the row-major weights followed by the bias,
/// all as 8-byte IEEE doubles.
void save_checkpoint(const Mlp& mlp, const std::string& path);
Mlp load_checkpoint(const std::string& path);

}  // namespace varinit
