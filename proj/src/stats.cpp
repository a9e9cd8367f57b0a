#include "varinit/stats.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <vector>

#include "varinit/rng.hpp"

namespace varinit {

namespace {

constexpr long kChunk = 1 << 16;

struct Accum {
  double sum = 0.0;
  double sumsq = 0.0;
  void add(double v) {
    sum += v;
    sumsq += v * v;
  }
  void merge(const Accum& o) {
    sum += o.sum;
    sumsq += o.sumsq;
  }
  MomentPair finish(long n) const {
    const double mean = sum / static_cast<double>(n);
    double var = (sumsq - sum * sum / static_cast<double>(n)) / static_cast<double>(n - 1);
    if (var < 0.0) var = 0.0;  // roundoff guard
    return {mean, var};
  }
};

}  // namespace

std::string StatsMethod::to_string() const {
  if (kind == StatsKind::Analytic) return "analytic";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "monte_carlo(n=%ld,seed=%llu)", n_samples,
                static_cast<unsigned long long>(seed));
  return buf;
}

ActivationStats mc_stats(const ActivationSpec& spec, double sigma_p,
                         long n_samples, std::uint64_t seed) {
  if (!(sigma_p > 0.0)) throw std::invalid_argument("mc_stats: sigma_p must be positive");
  if (n_samples < 2) throw std::invalid_argument("mc_stats: need at least 2 samples");

  Accum post, deriv;
  const long n_chunks = (n_samples + kChunk - 1) / kChunk;
  for (long c = 0; c < n_chunks; ++c) {
    NormalSampler sampler(derive_seed(seed, static_cast<std::uint64_t>(c)));
    const long count = std::min<long>(kChunk, n_samples - c * kChunk);
    Accum cp, cd;
    for (long i = 0; i < count; ++i) {
      const double z = sigma_p * sampler.next();
      cp.add(spec.eval(z));
      cd.add(spec.deriv(z));
    }
    post.merge(cp);
    deriv.merge(cd);
  }

  ActivationStats out;
  out.post = post.finish(n_samples);
  out.deriv = deriv.finish(n_samples);
  out.sigma_p = sigma_p;
  out.method = StatsMethod::monte_carlo(n_samples, seed);
  return out;
}

namespace quadrature {

namespace {

// Gauss-Hermite nodes/weights for weight exp(-t^2), via Golub-Welsch on the
// symmetric tridiagonal Jacobi matrix.
struct GhRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

GhRule gauss_hermite_rule(int n) {
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) {
    const double b = std::sqrt(0.5 * (i + 1));
    jacobi(i, i + 1) = b;
    jacobi(i + 1, i) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  GhRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double mu0 = std::sqrt(M_PI);  // integral of exp(-t^2)
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = es.eigenvalues()(i);
    const double v0 = es.eigenvectors()(0, i);
    rule.weights[i] = mu0 * v0 * v0;
  }
  return rule;
}

const GhRule& cached_rule(int n) {
  static const GhRule r64 = gauss_hermite_rule(64);
  static const GhRule r128 = gauss_hermite_rule(128);
  static const GhRule r256 = gauss_hermite_rule(256);
  static const GhRule r512 = gauss_hermite_rule(512);
  switch (n) {
    case 64: return r64;
    case 128: return r128;
    case 256: return r256;
    default: return r512;
  }
}

double gh_pass(const GhRule& rule, const std::function<double(double)>& poly_part,
               double scale, double norm) {
  double acc = 0.0;
  for (size_t i = 0; i < rule.nodes.size(); ++i) {
    const double x = M_SQRT2 * scale * rule.nodes[i];
    acc += rule.weights[i] * poly_part(x);
  }
  return acc * norm;
}

}  // namespace

double gauss_hermite_expect(const std::function<double(double)>& poly_part,
                            double alpha, double sigma) {
  // E[p(x) e^{-alpha x^2}], x ~ N(0, sigma^2). Substituting the combined
  // Gaussian exp(-x^2 (alpha + 1/(2 sigma^2))) = exp(-x^2 / (2 s^2)) turns
  // the integral into a standard Gauss-Hermite sum over p alone:
  //   E = (s / sigma) * (1/sqrt(pi)) * sum w_i p(sqrt(2) s t_i)
  const double inv_two_s2 = alpha + 1.0 / (2.0 * sigma * sigma);
  const double s = std::sqrt(1.0 / (2.0 * inv_two_s2));
  const double norm = s / (sigma * std::sqrt(M_PI));

  double prev = gh_pass(cached_rule(64), poly_part, s, norm);
  for (int n = 128; n <= 512; n *= 2) {
    const double cur = gh_pass(cached_rule(n), poly_part, s, norm);
    if (std::abs(cur - prev) <= 1e-13 * (std::abs(cur) + 1e-300)) return cur;
    prev = cur;
  }
  return prev;
}

}  // namespace quadrature

ActivationStats gaussian_analytic_stats(double sigma_a, double sigma_p) {
  if (!(sigma_a > 0.0) || !(sigma_p > 0.0)) {
    throw std::invalid_argument("gaussian_analytic_stats: widths must be positive");
  }
  const double sr = sigma_a / sigma_p;
  ActivationStats out;
  out.sigma_p = sigma_p;
  out.method = StatsMethod::analytic();

  const double mean = sr / std::sqrt(sr * sr + 1.0);
  const double m2 = sr / std::sqrt(sr * sr + 2.0);
  out.post = {mean, m2 - mean * mean};

  // f'(x) = -(x / sigma_a^2) exp(-x^2 / 2 sigma_a^2); E[f'] = 0 by symmetry,
  // E[f'^2] = E[(x^2/sigma_a^4) e^{-x^2/sigma_a^2}].
  const double inv_sa2 = 1.0 / (sigma_a * sigma_a);
  const double d2 = quadrature::gauss_hermite_expect(
      [inv_sa2](double x) { return x * x * inv_sa2 * inv_sa2; }, inv_sa2, sigma_p);
  out.deriv = {0.0, d2};
  return out;
}

bool has_analytic_stats(const ActivationSpec& spec) {
  switch (spec.kind()) {
    case ActKind::Identity:
    case ActKind::Relu:
    case ActKind::Gaussian:
    case ActKind::Sine:
      return true;
    default:
      return false;
  }
}

ActivationStats compute_stats(const ActivationSpec& spec, double sigma_p,
                              const StatsMethod& method) {
  if (method.kind == StatsKind::MonteCarlo) {
    return mc_stats(spec, sigma_p, method.n_samples, method.seed);
  }

  ActivationStats out;
  out.sigma_p = sigma_p;
  out.method = StatsMethod::analytic();
  switch (spec.kind()) {
    case ActKind::Identity:
      out.post = {0.0, sigma_p * sigma_p};
      out.deriv = {1.0, 0.0};
      return out;
    case ActKind::Relu: {
      // E[f] = sigma_p / sqrt(2 pi), E[f^2] = sigma_p^2 / 2,
      // f' is Bernoulli(1/2): E[f'] = 1/2, Var[f'] = 1/4.
      const double mean = sigma_p / std::sqrt(2.0 * M_PI);
      out.post = {mean, 0.5 * sigma_p * sigma_p - mean * mean};
      out.deriv = {0.5, 0.25};
      return out;
    }
    case ActKind::Gaussian:
      return gaussian_analytic_stats(spec.param(), sigma_p);
    case ActKind::Sine: {
      // E[sin(az)] = 0, E[sin^2(az)] = (1 - e^{-2 a^2 s^2}) / 2,
      // E[a cos(az)] = a e^{-a^2 s^2 / 2},
      // E[a^2 cos^2(az)] = a^2 (1 + e^{-2 a^2 s^2}) / 2.
      const double a = spec.param();
      const double u2 = a * a * sigma_p * sigma_p;
      const double e2 = std::exp(-2.0 * u2);
      out.post = {0.0, 0.5 * (1.0 - e2)};
      const double dmean = a * std::exp(-0.5 * u2);
      const double dm2 = a * a * 0.5 * (1.0 + e2);
      out.deriv = {dmean, dm2 - dmean * dmean};
      return out;
    }
    default:
      throw std::invalid_argument("analytic stats unavailable for activation '" +
                                  std::string(act_kind_name(spec.kind())) + "'");
  }
}

}  // namespace varinit
