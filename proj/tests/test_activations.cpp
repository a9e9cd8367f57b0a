#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "varinit/activation.hpp"
#include "varinit/rng.hpp"

using namespace varinit;

namespace {

const std::vector<ActivationSpec> kAllKinds = {
    ActivationSpec(ActKind::Identity),       ActivationSpec(ActKind::Relu),
    ActivationSpec(ActKind::Tanh),           ActivationSpec(ActKind::Sigmoid),
    ActivationSpec(ActKind::Sine, 30.0),     ActivationSpec(ActKind::Sine, 1.0),
    ActivationSpec(ActKind::Gaussian, 0.05), ActivationSpec(ActKind::Gaussian, 1.0),
    ActivationSpec(ActKind::Sinc, 1.0),      ActivationSpec(ActKind::Sinc, 7.0),
    ActivationSpec(ActKind::GaborWavelet, 1.0),
};

}  // namespace

TEST_CASE("point values") {
  CHECK(ActivationSpec(ActKind::Gaussian, 0.05).eval(0.0) == 1.0);
  CHECK(ActivationSpec(ActKind::Sinc, 1.0).eval(0.0) == 1.0);
  CHECK(ActivationSpec(ActKind::Sine, 30.0).eval(M_PI / 60.0) == doctest::Approx(1.0));

  CHECK(ActivationSpec(ActKind::Gaussian, 0.05).deriv(0.0) == 0.0);
  CHECK(ActivationSpec(ActKind::Relu).deriv(-1.0) == 0.0);
  CHECK(ActivationSpec(ActKind::Relu).deriv(0.0) == 0.0);
  CHECK(ActivationSpec(ActKind::Tanh).deriv(0.0) == 1.0);
  CHECK(ActivationSpec(ActKind::Sinc, 1.0).deriv(0.0) == 0.0);
}

TEST_CASE("totality over harsh inputs") {
  const double inputs[] = {-1e8, -3.0, -1e-9, 0.0, 1e-12, 0.5, 1e6, 743.0};
  for (const auto& spec : kAllKinds) {
    for (double x : inputs) {
      CAPTURE(spec.to_string());
      CAPTURE(x);
      CHECK(std::isfinite(spec.eval(x)));
      CHECK(std::isfinite(spec.deriv(x)));
    }
  }
}

TEST_CASE("derivative matches central finite difference") {
  // 1000 random points per kind; hybrid relative error with a floor tied to
  // the kind's derivative scale so near-extremum points do not blow up the
  // quotient.
  const double h = 1e-5;
  for (const auto& spec : kAllKinds) {
    Xoshiro256pp rng(12345);
    std::vector<double> xs(1000);
    for (auto& x : xs) x = 4.0 * rng.uniform_sym();

    double scale = 0.0;
    for (double x : xs) scale = std::max(scale, std::abs(spec.deriv(x)));

    for (double x : xs) {
      const double d = spec.deriv(x);
      const double fd = (spec.eval(x + h) - spec.eval(x - h)) / (2.0 * h);
      const double err = std::abs(fd - d) / (std::abs(d) + 1e-3 * scale);
      CAPTURE(spec.to_string());
      CAPTURE(x);
      CHECK(err < 1e-6);
    }
  }
}

TEST_CASE("sinc series window joins smoothly") {
  const ActivationSpec sinc(ActKind::Sinc, 1.0);
  for (double u : {0.029, 0.03, 0.031, 1e-4}) {
    const double direct = (u * std::cos(u) - std::sin(u)) / (u * u);
    CHECK(sinc.deriv(u) == doctest::Approx(direct).epsilon(1e-7));
    CHECK(sinc.eval(u) == doctest::Approx(std::sin(u) / u).epsilon(1e-14));
  }
}

TEST_CASE("symmetry") {
  Xoshiro256pp rng(99);
  const std::vector<ActKind> even = {ActKind::Gaussian, ActKind::Sinc, ActKind::GaborWavelet};
  const std::vector<ActKind> odd = {ActKind::Sine, ActKind::Tanh, ActKind::Identity};
  for (int i = 0; i < 200; ++i) {
    const double x = 3.0 * rng.uniform_sym();
    for (ActKind kind : even) {
      const ActivationSpec spec(kind, 0.7);
      CHECK(spec.eval(x) == doctest::Approx(spec.eval(-x)).epsilon(1e-12));
    }
    for (ActKind kind : odd) {
      const ActivationSpec spec(kind, 2.0);
      CHECK(spec.eval(-x) == doctest::Approx(-spec.eval(x)).epsilon(1e-12));
    }
  }
}

TEST_CASE("construction rejects bad parameters") {
  CHECK_THROWS_AS(ActivationSpec(ActKind::Gaussian, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(ActivationSpec(ActKind::Sine, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(ActivationSpec(ActKind::Sinc, std::nan("")), std::invalid_argument);
  CHECK_NOTHROW(ActivationSpec(ActKind::Relu));
}

TEST_CASE("string round trip") {
  CHECK(ActivationSpec::parse("gaussian:0.05").param() == 0.05);
  CHECK(ActivationSpec::parse("sine:30").kind() == ActKind::Sine);
  CHECK(ActivationSpec::parse("tanh").to_string() == "tanh");
  CHECK(ActivationSpec::parse("wavelet:1").kind() == ActKind::GaborWavelet);
  for (const auto& spec : kAllKinds) {
    const ActivationSpec back = ActivationSpec::parse(spec.to_string());
    CHECK(back == spec);
  }
  CHECK_THROWS_AS(ActivationSpec::parse("swish"), std::invalid_argument);
  CHECK_THROWS_AS(ActivationSpec::parse("relu:2"), std::invalid_argument);
  CHECK_THROWS_AS(ActivationSpec::parse("sine:abc"), std::invalid_argument);
}
