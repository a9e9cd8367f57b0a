#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "oracles.hpp"
#include "varinit/nn.hpp"
#include "varinit/rng.hpp"

using namespace varinit;

namespace {

const StatsMethod kAnalytic = StatsMethod::analytic();

Mlp small_random_net(const NetworkShape& shape, const ActivationSpec& act,
                     std::uint64_t seed) {
  const InitPlan plan = build_plan(shape, act, 1.0, {InitScheme::Vi3nrForward, 0.0},
                                   StatsMethod::monte_carlo(100'000, 3),
                                   uniform_unit_input_moments(), WeightDist::Uniform,
                                   BiasPolicy::SameAsWeights);
  return initialize(shape, act, plan, seed);
}

Mat random_batch(int rows, int cols, std::uint64_t seed) {
  Xoshiro256pp rng(seed);
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform_sym();
  }
  return m;
}

}  // namespace

TEST_CASE("initialize determinism and bias policy") {
  const NetworkShape shape = NetworkShape::mlp(3, 16, 2, 1);
  const InitPlan plan = build_plan(shape, ActivationSpec(ActKind::Tanh), 1.0,
                                   {InitScheme::KaimingFanIn, 0.0}, kAnalytic,
                                   uniform_unit_input_moments(), WeightDist::Normal,
                                   BiasPolicy::Zero);
  const Mlp a = initialize(shape, ActivationSpec(ActKind::Tanh), plan, 99);
  const Mlp b = initialize(shape, ActivationSpec(ActKind::Tanh), plan, 99);
  for (int i = 0; i < a.n_weight_layers(); ++i) {
    CHECK(a.weights[i] == b.weights[i]);
    CHECK((a.biases[i].array() == 0.0).all());
  }
  const Mlp c = initialize(shape, ActivationSpec(ActKind::Tanh), plan, 100);
  CHECK(a.weights[0] != c.weights[0]);
}

TEST_CASE("initialize realizes the plan variance within 2%") {
  // Two 1000x1000 layers pooled: 2e6 weights at variance 2/1000.
  const NetworkShape shape{std::vector<int>{1000, 1000, 1000}};
  for (WeightDist dist : {WeightDist::Normal, WeightDist::Uniform}) {
    const InitPlan plan = build_plan(shape, ActivationSpec(ActKind::Relu), 1.0,
                                     {InitScheme::KaimingFanIn, 0.0}, kAnalytic,
                                     uniform_unit_input_moments(), dist, BiasPolicy::Zero);
    const Mlp mlp = initialize(shape, ActivationSpec(ActKind::Relu), plan, 4);
    double sum = 0.0, sumsq = 0.0;
    long n = 0;
    for (const Mat& w : mlp.weights) {
      sum += w.sum();
      sumsq += w.squaredNorm();
      n += w.size();
    }
    const double var = (sumsq - sum * sum / n) / (n - 1);
    CHECK(var == doctest::Approx(2.0 / 1000).epsilon(2e-2));
  }
}

TEST_CASE("initialize rejects plan/shape mismatch") {
  const NetworkShape shape = NetworkShape::mlp(3, 16, 2, 1);
  const NetworkShape other = NetworkShape::mlp(3, 8, 2, 1);
  const InitPlan plan = build_plan(other, ActivationSpec(ActKind::Tanh), 1.0,
                                   {InitScheme::Xavier, 0.0}, kAnalytic,
                                   uniform_unit_input_moments(), WeightDist::Normal,
                                   BiasPolicy::Zero);
  CHECK_THROWS_AS(initialize(shape, ActivationSpec(ActKind::Tanh), plan, 1),
                  std::invalid_argument);
}

TEST_CASE("forward linear identities") {
  SUBCASE("identity activation with unit hidden weights reproduces the output layer") {
    Mlp mlp;
    mlp.shape = NetworkShape({3, 3, 2});
    mlp.activation = ActivationSpec(ActKind::Identity);
    mlp.weights.push_back(Mat::Identity(3, 3));
    mlp.weights.push_back(random_batch(2, 3, 8));
    mlp.biases.push_back(Vec::Zero(3));
    mlp.biases.push_back(Vec::Zero(2));
    const Mat x = random_batch(5, 3, 9);
    const Mat out = forward(mlp, x);
    const Mat expected = x * mlp.weights[1].transpose();
    CHECK((out - expected).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("zero input and zero bias make every gaussian post-activation 1") {
    const NetworkShape shape = NetworkShape::mlp(2, 8, 2, 1);
    const Mlp mlp = small_random_net(shape, ActivationSpec(ActKind::Gaussian, 0.5), 3);
    Mlp zero_bias = mlp;
    for (auto& b : zero_bias.biases) b.setZero();
    ForwardTrace trace;
    forward(zero_bias, Mat::Zero(4, 2), &trace);
    CHECK((trace.x[1].array() == 1.0).all());
  }
  SUBCASE("dimension mismatch throws") {
    const NetworkShape shape = NetworkShape::mlp(2, 8, 2, 1);
    const Mlp mlp = small_random_net(shape, ActivationSpec(ActKind::Tanh), 3);
    CHECK_THROWS_AS(forward(mlp, Mat::Zero(4, 3)), std::invalid_argument);
  }
}

TEST_CASE("trace invariants hold exactly") {
  const NetworkShape shape = NetworkShape::mlp(3, 16, 3, 2);
  const Mlp mlp = small_random_net(shape, ActivationSpec(ActKind::Sinc, 2.0), 17);
  const Mat batch = random_batch(9, 3, 18);
  ForwardTrace trace;
  const Mat out = forward(mlp, batch, &trace);

  REQUIRE(trace.z.size() == 4);
  REQUIRE(trace.x.size() == 4);
  CHECK(trace.x[0] == batch);
  CHECK(out == trace.z.back());
  for (size_t i = 0; i + 1 < trace.z.size(); ++i) {
    const Mat recomputed = apply_activation(mlp.activation, trace.z[i]);
    CHECK((recomputed - trace.x[i + 1]).cwiseAbs().maxCoeff() == 0.0);
  }
  for (size_t i = 0; i < trace.z.size(); ++i) {
    Mat z = trace.x[i] * mlp.weights[i].transpose();
    z.rowwise() += mlp.biases[i].transpose();
    CHECK((z - trace.z[i]).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("backward matches central finite differences") {
  // 3 hidden layers x 8 units, MSE loss, every parameter checked.
  const NetworkShape shape{std::vector<int>{3, 8, 8, 8, 2}};
  const Mat batch = random_batch(5, 3, 31);
  const Mat target = random_batch(5, 2, 32);
  const double h = 1e-5;

  for (ActKind kind : {ActKind::Tanh, ActKind::Gaussian, ActKind::Sine}) {
    const ActivationSpec act(kind, kind == ActKind::Gaussian ? 0.3 : 1.7);
    Mlp mlp = small_random_net(shape, act, 77);

    const auto loss = [&](const Mlp& net) {
      const Mat pred = forward(net, batch);
      return (pred - target).squaredNorm() / static_cast<double>(pred.size());
    };

    ForwardTrace trace;
    const Mat pred = forward(mlp, batch, &trace);
    const Mat output_grad = 2.0 / pred.size() * (pred - target);
    const Gradients grads = backward(mlp, trace, output_grad);

    for (int layer = 0; layer < mlp.n_weight_layers(); ++layer) {
      const double scale = grads.weights[layer].cwiseAbs().maxCoeff();
      for (int r = 0; r < mlp.weights[layer].rows(); ++r) {
        for (int c = 0; c < mlp.weights[layer].cols(); ++c) {
          const double saved = mlp.weights[layer](r, c);
          mlp.weights[layer](r, c) = saved + h;
          const double up = loss(mlp);
          mlp.weights[layer](r, c) = saved - h;
          const double down = loss(mlp);
          mlp.weights[layer](r, c) = saved;
          const double fd = (up - down) / (2.0 * h);
          const double g = grads.weights[layer](r, c);
          CAPTURE(act.to_string());
          CHECK(std::abs(fd - g) / (std::abs(g) + 1e-4 * scale) < 1e-4);
        }
      }
      for (int r = 0; r < mlp.biases[layer].size(); ++r) {
        const double saved = mlp.biases[layer](r);
        mlp.biases[layer](r) = saved + h;
        const double up = loss(mlp);
        mlp.biases[layer](r) = saved - h;
        const double down = loss(mlp);
        mlp.biases[layer](r) = saved;
        const double fd = (up - down) / (2.0 * h);
        const double g = grads.biases[layer](r);
        CHECK(std::abs(fd - g) / (std::abs(g) + 1e-4 * scale) < 1e-4);
      }
    }
  }
}

TEST_CASE("backward closed forms") {
  SUBCASE("single linear layer weight gradient is output_grad^T x") {
    Mlp mlp;
    mlp.shape = NetworkShape({4, 2});
    mlp.activation = ActivationSpec(ActKind::Identity);
    mlp.weights.push_back(random_batch(2, 4, 5));
    mlp.biases.push_back(Vec::Zero(2));
    const Mat x = random_batch(7, 4, 6);
    ForwardTrace trace;
    forward(mlp, x, &trace);
    const Mat og = random_batch(7, 2, 8);
    const Gradients grads = backward(mlp, trace, og);
    const Mat expected = og.transpose() * x;
    CHECK((grads.weights[0] - expected).cwiseAbs().maxCoeff() == 0.0);
    CHECK((grads.input - og * mlp.weights[0]).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("zero output gradient zeroes everything") {
    const NetworkShape shape = NetworkShape::mlp(3, 8, 2, 2);
    const Mlp mlp = small_random_net(shape, ActivationSpec(ActKind::Tanh), 13);
    ForwardTrace trace;
    forward(mlp, random_batch(4, 3, 14), &trace);
    const Gradients grads = backward(mlp, trace, Mat::Zero(4, 2));
    for (const auto& g : grads.weights) CHECK(g.cwiseAbs().maxCoeff() == 0.0);
    for (const auto& g : grads.biases) CHECK(g.cwiseAbs().maxCoeff() == 0.0);
    CHECK(grads.input.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("z-gradients satisfy the layer recursion") {
  const NetworkShape shape = NetworkShape::mlp(3, 12, 3, 2);
  const Mlp mlp = small_random_net(shape, ActivationSpec(ActKind::Gaussian, 0.4), 21);
  const Mat batch = random_batch(6, 3, 22);
  ForwardTrace trace;
  forward(mlp, batch, &trace);
  const Gradients grads = backward(mlp, trace, random_batch(6, 2, 23));

  for (int i = mlp.n_weight_layers() - 1; i > 0; --i) {
    const Mat manual = (grads.z[i] * mlp.weights[i])
                           .cwiseProduct(activation_deriv(mlp.activation, trace.z[i - 1]));
    const double scale = manual.cwiseAbs().maxCoeff();
    CHECK((manual - grads.z[i - 1]).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, scale));
  }
}

TEST_CASE("forward variance preservation at width 1000") {
  // The batch enters as a post-activation with the activation's own moments,
  // so every layer (including the first) uses the hidden-layer rule; each
  // pre-activation stage must then hold variance sigma_p^2 within 10% and
  // stay near-normal (|skewness| < 0.2).
  struct Config {
    ActivationSpec act;
    double sigma_p;
  };
  const Config configs[] = {{ActivationSpec(ActKind::Gaussian, 0.05), 0.0776887},
                            {ActivationSpec(ActKind::Sine, 30.0), 1.0}};
  for (const auto& cfg : configs) {
    const ActivationStats stats = compute_stats(cfg.act, cfg.sigma_p, kAnalytic);
    const NetworkShape shape{std::vector<int>{1000, 1000, 1000, 1000, 1000, 1000}};
    const InitPlan plan = build_plan(shape, cfg.act, cfg.sigma_p,
                                     {InitScheme::Vi3nrForward, 0.0}, kAnalytic, stats.post,
                                     WeightDist::Uniform, BiasPolicy::Zero);
    const Mlp mlp = initialize(shape, cfg.act, plan, 5);

    NormalSampler sampler(6);
    Mat z0(4096, 1000);
    for (int r = 0; r < z0.rows(); ++r) {
      for (int c = 0; c < z0.cols(); ++c) z0(r, c) = cfg.sigma_p * sampler.next();
    }
    const Mat x0 = apply_activation(cfg.act, z0);

    ForwardTrace trace;
    forward(mlp, x0, &trace);
    const double target = cfg.sigma_p * cfg.sigma_p;
    for (const Mat& z : trace.z) {
      const MomentSummary m = batch_moments(z);
      CAPTURE(cfg.act.to_string());
      CHECK(m.variance == doctest::Approx(target).epsilon(0.10));
      CHECK(std::abs(m.skewness) < 0.2);
    }
  }
}

TEST_CASE("checkpoint round trip") {
  const NetworkShape shape = NetworkShape::mlp(2, 24, 3, 3);
  const Mlp mlp = small_random_net(shape, ActivationSpec(ActKind::Gaussian, 0.05), 41);
  const std::string path =
      (std::filesystem::temp_directory_path() / "varinit_ckpt_test.bin").string();
  save_checkpoint(mlp, path);
  const Mlp loaded = load_checkpoint(path);
  CHECK(loaded.shape.widths == mlp.shape.widths);
  CHECK(loaded.activation == mlp.activation);
  for (int i = 0; i < mlp.n_weight_layers(); ++i) {
    CHECK(loaded.weights[i] == mlp.weights[i]);
    CHECK(loaded.biases[i] == mlp.biases[i]);
  }
  std::filesystem::remove(path);

  CHECK_THROWS_AS(load_checkpoint("/nonexistent/path.bin"), std::runtime_error);
}

TEST_CASE("batch_moments on a known sample") {
  Mat m(1, 5);
  m << 1.0, 2.0, 3.0, 4.0, 5.0;
  const MomentSummary s = batch_moments(m);
  CHECK(s.mean == doctest::Approx(3.0));
  CHECK(s.variance == doctest::Approx(2.5));  // unbiased
  CHECK(s.skewness == doctest::Approx(0.0));
}
