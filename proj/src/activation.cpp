#include "varinit/activation.hpp"

#include <cmath>
#include <charconv>
#include <stdexcept>

namespace varinit {

namespace {

constexpr double kSincSeriesWindow = 0.03;

double sinc_value(double u) {
  // sin(u)/u with the removable singularity filled in. The direct quotient
  // is accurate for any nonzero u; the series only has to cover u ~ 0.
  if (std::abs(u) < 1e-6) return 1.0 - u * u / 6.0;
  return std::sin(u) / u;
}

// d/du [sin(u)/u] = cos(u)/u - sin(u)/u^2. The direct form cancels
// catastrophically near 0 (both terms ~ 1/u while the result ~ u/3), so a
// truncated odd series takes over inside |u| < 0.03 where it is exact to
// double precision.
double sinc_slope(double u) {
  if (std::abs(u) < kSincSeriesWindow) {
    const double u2 = u * u;
    return u * (-1.0 / 3.0 + u2 * (1.0 / 30.0 + u2 * (-1.0 / 840.0 + u2 / 45360.0)));
  }
  return (u * std::cos(u) - std::sin(u)) / (u * u);
}

}  // namespace

ActivationSpec::ActivationSpec(ActKind kind, double param)
    : kind_(kind), param_(param) {
  if (parameterized()) {
    if (!(param > 0.0) || !std::isfinite(param)) {
      throw std::invalid_argument("activation '" + std::string(act_kind_name(kind)) +
                                  "' requires a positive finite parameter");
    }
  } else {
    param_ = 0.0;
  }
}

bool ActivationSpec::parameterized() const {
  switch (kind_) {
    case ActKind::Sine:
    case ActKind::Gaussian:
    case ActKind::Sinc:
    case ActKind::GaborWavelet:
      return true;
    default:
      return false;
  }
}

double ActivationSpec::eval(double x) const {
  switch (kind_) {
    case ActKind::Identity:
      return x;
    case ActKind::Relu:
      return x > 0.0 ? x : 0.0;
    case ActKind::Tanh:
      return std::tanh(x);
    case ActKind::Sigmoid:
      return 1.0 / (1.0 + std::exp(-x));
    case ActKind::Sine:
      return std::sin(param_ * x);
    case ActKind::Gaussian:
      return std::exp(-x * x / (2.0 * param_ * param_));
    case ActKind::Sinc:
      return sinc_value(param_ * x);
    case ActKind::GaborWavelet: {
      const double u = param_ * x;
      return std::cos(u) * std::exp(-u * u);
    }
  }
  return 0.0;
}

double ActivationSpec::deriv(double x) const {
  switch (kind_) {
    case ActKind::Identity:
      return 1.0;
    case ActKind::Relu:
      return x > 0.0 ? 1.0 : 0.0;  // subgradient at 0 is 0
    case ActKind::Tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case ActKind::Sigmoid: {
      const double s = 1.0 / (1.0 + std::exp(-x));
      return s * (1.0 - s);
    }
    case ActKind::Sine:
      return param_ * std::cos(param_ * x);
    case ActKind::Gaussian: {
      const double inv = 1.0 / (param_ * param_);
      return -x * inv * std::exp(-0.5 * x * x * inv);
    }
    case ActKind::Sinc:
      return param_ * sinc_slope(param_ * x);
    case ActKind::GaborWavelet: {
      const double u = param_ * x;
      return -param_ * std::exp(-u * u) * (std::sin(u) + 2.0 * u * std::cos(u));
    }
  }
  return 0.0;
}

std::string_view act_kind_name(ActKind kind) {
  switch (kind) {
    case ActKind::Identity: return "identity";
    case ActKind::Relu: return "relu";
    case ActKind::Tanh: return "tanh";
    case ActKind::Sigmoid: return "sigmoid";
    case ActKind::Sine: return "sine";
    case ActKind::Gaussian: return "gaussian";
    case ActKind::Sinc: return "sinc";
    case ActKind::GaborWavelet: return "gabor_wavelet";
  }
  return "?";
}

std::string ActivationSpec::to_string() const {
  std::string out(act_kind_name(kind_));
  if (parameterized()) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", param_);
    out += ':';
    out += buf;
  }
  return out;
}

ActivationSpec ActivationSpec::parse(std::string_view text) {
  std::string_view name = text;
  double param = 0.0;
  bool has_param = false;
  if (auto pos = text.find(':'); pos != std::string_view::npos) {
    name = text.substr(0, pos);
    const std::string_view rest = text.substr(pos + 1);
    const auto res = std::from_chars(rest.data(), rest.data() + rest.size(), param);
    if (res.ec != std::errc{} || res.ptr != rest.data() + rest.size()) {
      throw std::invalid_argument("bad activation parameter in '" + std::string(text) + "'");
    }
    has_param = true;
  }

  ActKind kind;
  if (name == "identity") kind = ActKind::Identity;
  else if (name == "relu") kind = ActKind::Relu;
  else if (name == "tanh") kind = ActKind::Tanh;
  else if (name == "sigmoid") kind = ActKind::Sigmoid;
  else if (name == "sine") kind = ActKind::Sine;
  else if (name == "gaussian") kind = ActKind::Gaussian;
  else if (name == "sinc") kind = ActKind::Sinc;
  else if (name == "gabor_wavelet" || name == "wavelet") kind = ActKind::GaborWavelet;
  else throw std::invalid_argument("unknown activation kind '" + std::string(name) + "'");

  ActivationSpec spec(kind, has_param ? param : 1.0);
  if (!spec.parameterized() && has_param) {
    throw std::invalid_argument("activation '" + std::string(name) + "' takes no parameter");
  }
  return spec;
}

}  // namespace varinit
