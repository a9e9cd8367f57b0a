#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "varinit/activation.hpp"

namespace varinit {

/// Mean and (unbiased) variance of a scalar distribution.
struct MomentPair {
  double mean = 0.0;
  double variance = 0.0;
};

/// mean^2 + variance: the raw second moment, the divisor of the forward and
/// backward weight-variance formulas.
inline double second_moment(const MomentPair& p) {
  return p.mean * p.mean + p.variance;
}

enum class StatsKind { Analytic, MonteCarlo };

struct StatsMethod {
  StatsKind kind = StatsKind::MonteCarlo;
  long n_samples = 1'000'000;
  std::uint64_t seed = 1;

  static StatsMethod analytic() { return {StatsKind::Analytic, 0, 0}; }
  static StatsMethod monte_carlo(long n, std::uint64_t seed) {
    return {StatsKind::MonteCarlo, n, seed};
  }
  std::string to_string() const;
};

/// The four activation moments under z ~ N(0, sigma_p^2): mean/variance of
/// f(z) (post) and of f'(z) (deriv), plus how they were obtained.
struct ActivationStats {
  MomentPair post;
  MomentPair deriv;
  double sigma_p = 1.0;
  StatsMethod method;
};

/// Monte Carlo estimate of the four moments from n i.i.d. draws of
/// N(0, sigma_p^2). f and f' are evaluated on the same sample set.
///
/// Sampling is chunked (64Ki draws per chunk, sub-seed derive_seed(seed, c))
/// and partial sums are combined in fixed chunk order, so the result is
/// identical to a sequential pass regardless of how chunks are scheduled.
/// Variances use the unbiased n-1 estimator.
ActivationStats mc_stats(const ActivationSpec& spec, double sigma_p,
                         long n_samples, std::uint64_t seed);

/// Closed-form post moments of the gaussian activation exp(-x^2/2 sigma_a^2)
/// under N(0, sigma_p^2); they depend only on sigma_r = sigma_a / sigma_p:
///
///   E[f]       = sigma_r / sqrt(sigma_r^2 + 1)
///   E[f^2]     = sigma_r / sqrt(sigma_r^2 + 2)
///
/// Derivative moments have no published closed form and are computed by
/// Gauss-Hermite quadrature (exact here: the integrands are polynomials
/// against a Gaussian weight once the activation's own exponential is folded
/// into the quadrature scale).
ActivationStats gaussian_analytic_stats(double sigma_a, double sigma_p);

/// True when compute_stats supports the analytic path for this kind
/// (identity, relu, gaussian, sine).
bool has_analytic_stats(const ActivationSpec& spec);

/// Dispatch on method; analytic is available for gaussian (closed form +
/// quadrature), and for identity, relu and sine whose moments have simple
/// exact expressions.
ActivationStats compute_stats(const ActivationSpec& spec, double sigma_p,
                              const StatsMethod& method);

namespace quadrature {
/// E[p(x) * exp(-alpha x^2)] for x ~ N(0, sigma^2), evaluated by
/// Gauss-Hermite quadrature with the activation exponential folded into the
/// node scale (stable for needle-shaped integrands, alpha >> 1/sigma^2).
/// p is any smooth function; nodes doubled from 64 until converged.
double gauss_hermite_expect(const std::function<double(double)>& poly_part,
                            double alpha, double sigma);
}  // namespace quadrature

}  // namespace varinit
