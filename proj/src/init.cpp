#include "varinit/init.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace varinit {

namespace {
constexpr double kDegenerateTol = 1e-12;
}

NetworkShape::NetworkShape(std::vector<int> w) : widths(std::move(w)) {
  if (widths.size() < 2) throw std::invalid_argument("shape needs at least input and output widths");
  for (int m : widths) {
    if (m < 1) throw std::invalid_argument("all widths must be >= 1");
  }
}

NetworkShape NetworkShape::mlp(int in, int hidden, int n_hidden, int out) {
  std::vector<int> w;
  w.push_back(in);
  for (int i = 0; i < n_hidden; ++i) w.push_back(hidden);
  w.push_back(out);
  return NetworkShape(std::move(w));
}

std::string SchemeSpec::to_string() const {
  char buf[64];
  switch (scheme) {
    case InitScheme::Vi3nrForward: return "vi3nr_forward";
    case InitScheme::Vi3nrBackward: return "vi3nr_backward";
    case InitScheme::Xavier: return "xavier";
    case InitScheme::KaimingFanIn: return "kaiming_fan_in";
    case InitScheme::KaimingFanOut: return "kaiming_fan_out";
    case InitScheme::RandomNormal:
      std::snprintf(buf, sizeof(buf), "random_normal:%g", value);
      return buf;
    case InitScheme::FixedVarTimesFanIn:
      std::snprintf(buf, sizeof(buf), "fixed:%g", value);
      return buf;
  }
  return "?";
}

SchemeSpec SchemeSpec::parse(std::string_view text) {
  std::string_view name = text;
  double value = 0.0;
  bool has_value = false;
  if (auto pos = text.find(':'); pos != std::string_view::npos) {
    name = text.substr(0, pos);
    value = std::stod(std::string(text.substr(pos + 1)));
    has_value = true;
  }
  SchemeSpec out;
  out.value = value;
  if (name == "vi3nr_forward") out.scheme = InitScheme::Vi3nrForward;
  else if (name == "vi3nr_backward") out.scheme = InitScheme::Vi3nrBackward;
  else if (name == "xavier") out.scheme = InitScheme::Xavier;
  else if (name == "kaiming_fan_in") out.scheme = InitScheme::KaimingFanIn;
  else if (name == "kaiming_fan_out") out.scheme = InitScheme::KaimingFanOut;
  else if (name == "random_normal") out.scheme = InitScheme::RandomNormal;
  else if (name == "fixed") out.scheme = InitScheme::FixedVarTimesFanIn;
  else throw std::invalid_argument("unknown init scheme '" + std::string(name) + "'");
  const bool needs_value =
      out.scheme == InitScheme::RandomNormal || out.scheme == InitScheme::FixedVarTimesFanIn;
  if (needs_value && (!has_value || !(value > 0.0))) {
    throw std::invalid_argument("scheme '" + std::string(name) + "' requires a positive value");
  }
  return out;
}

double forward_weight_variance(double sigma_p, int fan_in, const MomentPair& input_stats) {
  const double m2 = second_moment(input_stats);
  if (m2 <= kDegenerateTol) throw std::domain_error("activation collapses to zero");
  return sigma_p * sigma_p / (static_cast<double>(fan_in) * m2);
}

double backward_weight_variance(int fan_out, const MomentPair& deriv_stats) {
  const double m2 = second_moment(deriv_stats);
  if (m2 <= kDegenerateTol) throw std::domain_error("gradient-dead activation");
  return 1.0 / (static_cast<double>(fan_out) * m2);
}

double first_layer_weight_variance(double sigma_p, int input_dim,
                                   const MomentPair& input_moments) {
  return forward_weight_variance(sigma_p, input_dim, input_moments);
}

InitPlan build_plan(const NetworkShape& shape, const ActivationSpec& spec,
                    double sigma_p, const SchemeSpec& scheme,
                    const StatsMethod& stats_method, const MomentPair& input_moments,
                    WeightDist dist, BiasPolicy bias) {
  const int n_layers = shape.n_weight_layers();

  // One stats computation per (activation, sigma_p), shared by all layers.
  ActivationStats stats;
  const bool needs_stats =
      scheme.scheme == InitScheme::Vi3nrForward || scheme.scheme == InitScheme::Vi3nrBackward;
  if (needs_stats) stats = compute_stats(spec, sigma_p, stats_method);

  InitPlan plan;
  plan.layers.reserve(n_layers);
  for (int i = 0; i < n_layers; ++i) {
    LayerInit layer;
    layer.layer_index = i;
    layer.fan_in = shape.fan_in(i);
    layer.fan_out = shape.fan_out(i);
    layer.dist = dist;
    layer.bias = bias;

    switch (scheme.scheme) {
      case InitScheme::Vi3nrForward:
      case InitScheme::Vi3nrBackward:
        if (i == 0) {
          layer.weight_variance =
              first_layer_weight_variance(sigma_p, layer.fan_in, input_moments);
        } else if (scheme.scheme == InitScheme::Vi3nrForward) {
          layer.weight_variance = forward_weight_variance(sigma_p, layer.fan_in, stats.post);
        } else {
          layer.weight_variance = backward_weight_variance(layer.fan_out, stats.deriv);
        }
        break;
      case InitScheme::Xavier:
        layer.weight_variance = 2.0 / (layer.fan_in + layer.fan_out);
        break;
      case InitScheme::KaimingFanIn:
        layer.weight_variance = 2.0 / layer.fan_in;
        break;
      case InitScheme::KaimingFanOut:
        layer.weight_variance = 2.0 / layer.fan_out;
        break;
      case InitScheme::RandomNormal:
        layer.weight_variance = scheme.value * scheme.value;
        break;
      case InitScheme::FixedVarTimesFanIn:
        layer.weight_variance = scheme.value / layer.fan_in;
        break;
    }

    layer.uniform_bound = std::sqrt(3.0 * layer.weight_variance);
    plan.layers.push_back(layer);
  }
  return plan;
}

double gain(const ActivationSpec& spec, double sigma_p, const StatsMethod& method) {
  const ActivationStats stats = compute_stats(spec, sigma_p, method);
  const double m2 = second_moment(stats.post);
  if (m2 <= kDegenerateTol) throw std::domain_error("activation collapses to zero");
  return sigma_p / std::sqrt(m2);
}

double find_sigma_p_for_variance(const ActivationSpec& spec, double target,
                                 double lo, double hi) {
  const auto var_times_fanin = [&](double sp) {
    const ActivationStats stats = compute_stats(spec, sp, StatsMethod::analytic());
    return sp * sp / second_moment(stats.post);
  };
  double flo = var_times_fanin(lo) - target;
  double fhi = var_times_fanin(hi) - target;
  if (flo * fhi > 0.0) throw std::domain_error("target variance not bracketed by sigma_p range");
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = var_times_fanin(mid) - target;
    if (std::abs(fm) < 1e-14 || hi - lo < 1e-13 * mid) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace varinit
