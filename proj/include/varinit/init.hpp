#pragma once

#include <string>
#include <vector>

#include "varinit/activation.hpp"
#include "varinit/stats.hpp"

namespace varinit {

/// Layer widths [M_0, M_1, ..., M_n, output_dim]: M_0 is the input
/// dimension, the last entry the output dimension, everything between a
/// hidden width. Layer i maps widths[i] -> widths[i+1].
struct NetworkShape {
  std::vector<int> widths;

  NetworkShape() = default;
  explicit NetworkShape(std::vector<int> w);

  int n_weight_layers() const { return static_cast<int>(widths.size()) - 1; }
  int input_dim() const { return widths.front(); }
  int output_dim() const { return widths.back(); }
  int fan_in(int layer) const { return widths[layer]; }
  int fan_out(int layer) const { return widths[layer + 1]; }

  /// [in, hidden x n_hidden, out]
  static NetworkShape mlp(int in, int hidden, int n_hidden, int out);
};

enum class InitScheme {
  Vi3nrForward,        // sigma_p^2 / (M_i * E[f(z)^2])
  Vi3nrBackward,       // 1 / (M_{i+1} * E[f'(z)^2])
  Xavier,              // 2 / (M_i + M_{i+1})
  KaimingFanIn,        // 2 / M_i
  KaimingFanOut,       // 2 / M_{i+1}
  RandomNormal,        // fixed std on every layer
  FixedVarTimesFanIn,  // value / M_i (literature constants, e.g. Kumar rows)
};

/// Scheme plus its free parameter: std for RandomNormal, the variance x
/// fan-in constant for FixedVarTimesFanIn, unused otherwise.
struct SchemeSpec {
  InitScheme scheme = InitScheme::Vi3nrForward;
  double value = 0.0;

  std::string to_string() const;
  static SchemeSpec parse(std::string_view text);
};

enum class WeightDist { Uniform, Normal };
enum class BiasPolicy { Zero, SameAsWeights };

struct LayerInit {
  int layer_index = 0;
  int fan_in = 0;
  int fan_out = 0;
  double weight_variance = 0.0;
  WeightDist dist = WeightDist::Uniform;
  double uniform_bound = 0.0;  // sqrt(3 * weight_variance) when dist == Uniform
  BiasPolicy bias = BiasPolicy::Zero;
};

struct InitPlan {
  std::vector<LayerInit> layers;
};

/// Eq.-style forward rule: sigma_p^2 / (fan_in * (mu^2 + sigma^2)) where the
/// moment pair describes the layer's input distribution.
double forward_weight_variance(double sigma_p, int fan_in, const MomentPair& input_stats);

/// Backward rule: 1 / (fan_out * (mu^2 + sigma^2)) over the derivative
/// moments.
double backward_weight_variance(int fan_out, const MomentPair& deriv_stats);

/// First-layer rule using the raw input distribution's moments; for
/// coordinates normalized to U[-1,1] this is 3 sigma_p^2 / M_0.
double first_layer_weight_variance(double sigma_p, int input_dim,
                                   const MomentPair& input_moments);

/// Moments of U[-1,1]: {0, 1/3}.
inline MomentPair uniform_unit_input_moments() { return {0.0, 1.0 / 3.0}; }

/// Per-layer weight distributions for a full network. For the vi3nr schemes
/// layer 0 uses the first-layer rule with input_moments; every later layer
/// (including the final linear one) uses the scheme's hidden-layer rule with
/// its own fan-in/fan-out. Activation stats are computed once and shared.
InitPlan build_plan(const NetworkShape& shape, const ActivationSpec& spec,
                    double sigma_p, const SchemeSpec& scheme,
                    const StatsMethod& stats_method, const MomentPair& input_moments,
                    WeightDist dist, BiasPolicy bias);

/// gain(f, sigma_p) = sigma_p / sqrt(E[f(z)]^2 + Var[f(z)]): the factor that
/// makes gain^2 * second_moment(post) == sigma_p^2 exactly.
double gain(const ActivationSpec& spec, double sigma_p, const StatsMethod& method);

/// Line search (bisection) for the sigma_p at which the vi3nr forward rule's
/// hidden variance x fan-in equals `target`, e.g. 1 for Xavier's 1/M or 2
/// for Kaiming's 2/M. Requires analytic stats support for the activation.
double find_sigma_p_for_variance(const ActivationSpec& spec, double target,
                                 double lo = 1e-3, double hi = 10.0);

}  // namespace varinit
