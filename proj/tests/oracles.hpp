// Test-only reference computations, independent of the library's numeric
// paths: a panelized adaptive Simpson integrator for Gaussian expectations
// and closed forms where they exist. Everything here is deliberately written
// without reusing varinit's quadrature or sampling code so the two routes
// can check each other.
#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>

#include "varinit/activation.hpp"

namespace oracle {

inline double simpson_rec(const std::function<double(double)>& f, double a, double b,
                          double fa, double fm, double fb, double whole, double tol,
                          int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-12, int panels = 64) {
  // Pre-split into panels so narrow features cannot be skipped by an early
  // coarse estimate.
  double total = 0.0;
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double pa = a + p * h;
    const double pb = pa + h;
    const double m = 0.5 * (pa + pb);
    const double fa = f(pa), fm = f(m), fb = f(pb);
    const double whole = (pb - pa) / 6.0 * (fa + 4.0 * fm + fb);
    total += simpson_rec(f, pa, pb, fa, fm, fb, whole, tol / panels, 48);
  }
  return total;
}

/// E[g(z)] for z ~ N(0, sigma^2). `feature_scale` bounds the narrowest
/// structure in g (activation width); the panel count adapts to it.
inline double gauss_expect(const std::function<double(double)>& g, double sigma,
                           double feature_scale = 1.0) {
  const double lim = 14.0 * sigma;
  const double norm = 1.0 / (std::sqrt(2.0 * M_PI) * sigma);
  const int panels =
      std::max(64, static_cast<int>(std::ceil(2.0 * lim / std::min(feature_scale, sigma) / 4.0)));
  return integrate(
      [&](double z) { return g(z) * norm * std::exp(-0.5 * z * z / (sigma * sigma)); },
      -lim, lim, 1e-13, std::min(panels, 20000));
}

inline double feature_scale(const varinit::ActivationSpec& spec) {
  using varinit::ActKind;
  switch (spec.kind()) {
    case ActKind::Gaussian: return spec.param();
    case ActKind::Sine:
    case ActKind::Sinc:
    case ActKind::GaborWavelet: return 1.0 / spec.param();
    default: return 1e9;  // no intrinsic scale
  }
}

inline double post_second_moment(const varinit::ActivationSpec& spec, double sigma_p) {
  return gauss_expect([&](double z) { const double v = spec.eval(z); return v * v; },
                      sigma_p, feature_scale(spec));
}

inline double deriv_second_moment(const varinit::ActivationSpec& spec, double sigma_p) {
  return gauss_expect([&](double z) { const double v = spec.deriv(z); return v * v; },
                      sigma_p, feature_scale(spec));
}

inline double post_mean(const varinit::ActivationSpec& spec, double sigma_p) {
  return gauss_expect([&](double z) { return spec.eval(z); }, sigma_p, feature_scale(spec));
}

// Closed forms.

/// Gaussian activation under N(0, sigma_p^2): E[f^k] = r / sqrt(r^2 + k),
/// r = sigma_a / sigma_p.
inline double gaussian_post_moment(double sigma_a, double sigma_p, int k) {
  const double r = sigma_a / sigma_p;
  return r / std::sqrt(r * r + k);
}

/// E[f'^2] for the gaussian activation (standard Gaussian integral of
/// x^2 exp(-x^2/sigma_a^2) against the N(0, sigma_p^2) density).
inline double gaussian_deriv_m2(double sigma_a, double sigma_p) {
  const double r = sigma_a / sigma_p;
  return 1.0 / (sigma_p * sigma_p * r * std::pow(r * r + 2.0, 1.5));
}

inline double sine_post_m2(double a, double sigma_p) {
  return 0.5 * (1.0 - std::exp(-2.0 * a * a * sigma_p * sigma_p));
}

inline double sine_deriv_m2(double a, double sigma_p) {
  return a * a * 0.5 * (1.0 + std::exp(-2.0 * a * a * sigma_p * sigma_p));
}

/// Backward-condition LHS sigma_p^2 E[f'^2] / E[f^2] from oracle moments.
inline double condition_lhs(const varinit::ActivationSpec& spec, double sigma_p) {
  const double m2p = post_second_moment(spec, sigma_p);
  const double m2d = deriv_second_moment(spec, sigma_p);
  if (m2p <= 0.0) throw std::domain_error("degenerate oracle moments");
  return sigma_p * sigma_p * m2d / m2p;
}

/// Central finite difference with the gradcheck-style hybrid error
/// denominator max(|analytic|, scale).
inline double central_diff(const varinit::ActivationSpec& spec, double x, double h = 1e-5) {
  return (spec.eval(x + h) - spec.eval(x - h)) / (2.0 * h);
}

}  // namespace oracle
