#pragma once

#include <string>
#include <string_view>

namespace varinit {

enum class ActKind {
  Identity,
  Relu,
  Tanh,
  Sigmoid,
  Sine,           // sin(a x)
  Gaussian,       // exp(-x^2 / (2 sigma_a^2))
  Sinc,           // sin(a x) / (a x)
  GaborWavelet,   // cos(a x) exp(-(a x)^2), real part only
};

/// An activation function together with its scale parameter and exact
/// derivative. Parameterized kinds (sine, gaussian, sinc, gabor_wavelet)
/// require param > 0; the parameter is ignored for the others.
///
/// eval/deriv are total over finite inputs: sinc and its derivative switch
/// to truncated series near ax = 0, relu's subgradient at 0 is 0.
class ActivationSpec {
 public:
  ActivationSpec(ActKind kind, double param = 0.0);

  ActKind kind() const { return kind_; }
  double param() const { return param_; }
  bool parameterized() const;

  double eval(double x) const;
  double deriv(double x) const;

  /// String form `kind[:param]`, e.g. "gaussian:0.05", "tanh".
  std::string to_string() const;
  static ActivationSpec parse(std::string_view text);

  bool operator==(const ActivationSpec&) const = default;

 private:
  ActKind kind_;
  double param_;
};

std::string_view act_kind_name(ActKind kind);

}  // namespace varinit
