#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>
#include <vector>

#include "arbfree/constraints.hpp"
#include "arbfree/datasets.hpp"
#include "arbfree/errors.hpp"
#include "arbfree/network.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace arbfree;

namespace {

MlpParams zero_net(std::vector<std::size_t> arch) {
  MlpParams p = init_params(arch, Activation::softplus(), 1);
  for (auto& l : p.layers) {
    std::fill(l.weights.begin(), l.weights.end(), 0.0);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
  return p;
}

// 2-2-1 softplus net small enough to evaluate by hand.
MlpParams hand_net() {
  MlpParams p;
  p.activation = Activation::softplus();
  p.layers.push_back({2, 2, {1.0, 0.0, 0.0, 1.0}, {0.1, -0.2}});
  p.layers.push_back({2, 1, {1.5, -0.5}, {0.3}});
  return p;
}

double sp(double x) { return std::log(1.0 + std::exp(x)); }
double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

MlpParams random_params(std::vector<std::size_t> arch, Activation act, std::uint64_t seed) {
  MlpParams p = init_params(arch, act, seed);
  std::mt19937_64 rng(seed + 1000);
  std::normal_distribution<double> n01(0.0, 0.5);
  for (auto& l : p.layers)
    for (auto& b : l.bias) b = n01(rng);
  return p;
}

std::vector<double> random_point(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> um(0.0, 2.5), ut(0.0, 5.0);
  return {um(rng), ut(rng)};
}

double& param_at(MlpParams& p, std::size_t index) {
  for (auto& l : p.layers) {
    if (index < l.weights.size()) return l.weights[index];
    index -= l.weights.size();
    if (index < l.bias.size()) return l.bias[index];
    index -= l.bias.size();
  }
  throw std::out_of_range("parameter index");
}

double grad_at(const ParamGradients& g, std::size_t index) {
  for (std::size_t l = 0; l < g.weights.size(); ++l) {
    if (index < g.weights[l].size()) return g.weights[l][index];
    index -= g.weights[l].size();
    if (index < g.bias[l].size()) return g.bias[l][index];
    index -= g.bias[l].size();
  }
  throw std::out_of_range("parameter index");
}

// Fourth-order central difference of cost(params) in one parameter.
template <class Cost>
double param_fd(const MlpParams& base, std::size_t index, double h, Cost cost) {
  auto at = [&](double delta) {
    MlpParams p = base;
    param_at(p, index) += delta;
    return cost(p);
  };
  return (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h);
}

}  // namespace

TEST_CASE("initialization") {
  const std::vector<std::size_t> arch{2, 16, 16, 1};
  const MlpParams a = init_params(arch, Activation::softplus(), 7);
  const MlpParams b = init_params(arch, Activation::softplus(), 7);
  CHECK(a == b);
  for (std::size_t l = 0; l < a.layers.size(); ++l)
    CHECK(std::memcmp(a.layers[l].weights.data(), b.layers[l].weights.data(),
                      a.layers[l].weights.size() * sizeof(double)) == 0);
  CHECK_FALSE(a == init_params(arch, Activation::softplus(), 8));
  CHECK(a.parameter_count() == 337);
  CHECK(a.architecture() == arch);
  CHECK(init_params(std::vector<std::size_t>{2, 16, 16, 16, 16, 1}, Activation::tanh(), 0).parameter_count() ==
        881);
  for (const auto& l : a.layers)
    for (double v : l.bias) CHECK(v == 0.0);

  CHECK_THROWS_AS(init_params(std::vector<std::size_t>{2, 0, 1}, Activation::softplus(), 0), ConfigError);
  CHECK_THROWS_AS(init_params(std::vector<std::size_t>{2, 1}, Activation::softplus(), 0), ConfigError);
  CHECK_THROWS_AS(init_params(std::vector<std::size_t>{2, 4, 2}, Activation::softplus(), 0), ConfigError);
}

TEST_CASE("initial weight scale") {
  const MlpParams p = init_params(std::vector<std::size_t>{2, 300, 300, 1}, Activation::softplus(), 5);
  const auto& w = p.layers[1].weights;
  double mean = 0, sq = 0;
  for (double v : w) mean += v;
  mean /= static_cast<double>(w.size());
  for (double v : w) sq += (v - mean) * (v - mean);
  const double var = sq / static_cast<double>(w.size() - 1);
  CHECK(std::abs(mean) < 0.01);
  CHECK(var == doctest::Approx(2.0 / 600.0).epsilon(0.03));
}

TEST_CASE("zero network") {
  const MlpParams p = zero_net({2, 5, 5, 1});
  const std::vector<double> x{0.7, 1.3};
  CHECK(evaluate(p, x) == 0.0);
  for (double v : forward_jacobian(p, x)) CHECK(v == 0.0);
  for (double v : forward_second(p, x)) CHECK(v == 0.0);
  for (double v : forward_hessian(p, x)) CHECK(v == 0.0);
}

TEST_CASE("hand-evaluated 2-2-1 network") {
  const MlpParams p = hand_net();
  const std::vector<double> x{0.4, 1.1};
  const double want = 1.5 * sp(0.5) - 0.5 * sp(0.9) + 0.3;
  CHECK(evaluate(p, x) == doctest::Approx(want).epsilon(1e-15));
  const auto g = forward_jacobian(p, x);
  CHECK(g[0] == doctest::Approx(1.5 * sig(0.5)).epsilon(1e-14));
  CHECK(g[1] == doctest::Approx(-0.5 * sig(0.9)).epsilon(1e-14));
  const auto s = forward_second(p, x);
  CHECK(s[0] == doctest::Approx(1.5 * sig(0.5) * (1 - sig(0.5))).epsilon(1e-14));
  CHECK(s[1] == doctest::Approx(-0.5 * sig(0.9) * (1 - sig(0.9))).epsilon(1e-14));
  const auto h = forward_hessian(p, x);
  CHECK(h[1] == 0.0);
  CHECK(h[2] == 0.0);
}

TEST_CASE("single affine layer") {
  MlpParams p;
  p.layers.push_back({2, 1, {0.75, -2.0}, {0.5}});
  const std::vector<double> x{1.2, 0.3};
  CHECK(evaluate(p, x) == doctest::Approx(0.75 * 1.2 - 2.0 * 0.3 + 0.5));
  const auto g = forward_jacobian(p, x);
  CHECK(g[0] == 0.75);
  CHECK(g[1] == -2.0);
  for (double v : forward_second(p, x)) CHECK(v == 0.0);
  for (double v : forward_hessian(p, x)) CHECK(v == 0.0);
}

TEST_CASE("forward is pure and mode-independent") {
  const MlpParams p = random_params({2, 16, 16, 1}, Activation::softplus(), 3);
  const std::vector<double> x{1.1, 2.2};
  const double y = evaluate(p, x);
  CHECK(evaluate(p, x) == y);
  CHECK(forward(p, x, DerivativeMode::Diagonal).value() == y);
  CHECK(forward(p, x, DerivativeMode::Full).value() == y);
  CHECK(oracle::network_value(p, x) == doctest::Approx(y).epsilon(1e-14));
  const auto bundle = derivatives(p, x, true);
  CHECK(bundle.value == y);
  REQUIRE(bundle.hessian);
  CHECK(bundle.grad == forward_jacobian(p, x));
  CHECK(bundle.diag2 == forward_second(p, x));
}

TEST_CASE("bad inputs") {
  const MlpParams p = random_params({2, 4, 1}, Activation::tanh(), 1);
  CHECK_THROWS_AS(evaluate(p, std::vector<double>{1.0}), InputError);
  CHECK_THROWS_AS(evaluate(p, std::vector<double>{1.0, std::nan("")}), InputError);
  CHECK_THROWS_AS(evaluate(p, std::vector<double>{INFINITY, 0.0}), InputError);
}

TEST_CASE("derivatives match finite differences on a 2-16-16-1 softplus net") {
  const MlpParams p = random_params({2, 16, 16, 1}, Activation::softplus(), 21);
  auto value = [&](const std::vector<double>& x) { return oracle::network_value(p, x); };
  std::mt19937_64 rng(4);
  double worst_j = 0, worst_s = 0, worst_h = 0, worst_sym = 0, worst_diag = 0;
  for (int i = 0; i < 100; ++i) {
    const auto x = random_point(rng);
    const auto g = forward_jacobian(p, x);
    const auto s = forward_second(p, x);
    const auto h = forward_hessian(p, x);
    for (std::size_t a = 0; a < 2; ++a) {
      worst_j = std::max(worst_j, oracle::rel_err(g[a], oracle::partial(value, x, a, 1e-3)));
      // second derivatives from differences of the analytic gradient
      auto grad_a = [&](const std::vector<double>& y) { return forward_jacobian(p, y)[a]; };
      worst_s = std::max(worst_s, oracle::rel_err(s[a], oracle::partial(grad_a, x, a, 1e-3)));
      for (std::size_t b = 0; b < 2; ++b) {
        auto grad_b = [&](const std::vector<double>& y) { return forward_jacobian(p, y)[b]; };
        worst_h = std::max(worst_h, oracle::rel_err(h[a * 2 + b], oracle::partial(grad_b, x, a, 1e-3)));
        worst_sym = std::max(worst_sym, std::abs(h[a * 2 + b] - h[b * 2 + a]));
      }
      worst_diag = std::max(worst_diag, std::abs(h[a * 3] - s[a]));
    }
  }
  CHECK(worst_j < 1e-6);
  CHECK(worst_s < 1e-5);
  CHECK(worst_h < 1e-5);
  CHECK(worst_sym < 1e-10);
  CHECK(worst_diag < 1e-12);
}

TEST_CASE("second derivatives from values alone") {
  std::mt19937_64 rng(9);
  for (int k = 0; k < 10; ++k) {
    const auto net = oracle::random_net(rng);
    auto value = [&](const std::vector<double>& x) { return oracle::network_value(net.params, x); };
    const auto x = random_point(rng);
    const auto h = forward_hessian(net.params, x);
    for (std::size_t a = 0; a < 2; ++a)
      for (std::size_t b = 0; b < 2; ++b)
        CHECK(oracle::rel_err(h[a * 2 + b], oracle::partial2(value, x, a, b, 1e-3)) < 1e-5);
  }
}

TEST_CASE("relu network has zero curvature") {
  const MlpParams p = random_params({2, 8, 8, 1}, Activation::relu(0.05), 2);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20; ++i) {
    const auto x = random_point(rng);
    for (double v : forward_second(p, x)) CHECK(v == 0.0);
  }
}

TEST_CASE("param_gradients with zero adjoints") {
  const MlpParams p = random_params({2, 8, 8, 1}, Activation::softplus(), 1);
  AdjointBatch data{2, {0.5, 1.0, 1.5, 2.0}, {0.0, 0.0}, {}, {}};
  AdjointBatch mesh{2, {0.5, 1.0}, {0.0}, {0.0, 0.0}, {0.0, 0.0}};
  const ParamGradients g = param_gradients(p, data, mesh);
  for (const auto& w : g.weights)
    for (double v : w) CHECK(v == 0.0);
  for (const auto& b : g.bias)
    for (double v : b) CHECK(v == 0.0);
}

TEST_CASE("param_gradients on one squared error") {
  const MlpParams p = random_params({2, 8, 8, 1}, Activation::softplus(), 2);
  const std::vector<double> x{0.9, 1.7};
  const double target = 0.3;
  auto cost = [&](const MlpParams& q) {
    const double e = target - oracle::network_value(q, x);
    return e * e;
  };
  const double e = target - evaluate(p, x);
  AdjointBatch data{2, x, {-2.0 * e}, {}, {}};
  const ParamGradients g = param_gradients(p, data, AdjointBatch{});
  for (std::size_t i = 0; i < p.parameter_count(); ++i) {
    CAPTURE(i);
    const double fd = param_fd(p, i, 1e-4, cost);
    CHECK(std::abs(grad_at(g, i) - fd) <= 1e-5 * std::max(std::abs(fd), 1e-3));
  }
}

TEST_CASE("param_gradients of the full cost on a 2-8-8-1 net") {
  SabrParams sabr;
  sabr.rho = -0.4;
  sabr.nu = 0.6;
  const QuoteGrid data = synth_in_sample(sabr, GridSpec::standard());
  const Mesh mesh = penalty_mesh(GridSpec::standard());
  const MlpParams p = random_params({2, 8, 8, 1}, Activation::softplus(), 13);

  for (const Intensifier g : {Intensifier::Identity, Intensifier::Square}) {
    CAPTURE(intensifier_name(g));
    // magnitudes large enough that the penalty part is not swamped by the fit
    PenaltyConfig cfg{0.5, 1.0, 0.5, g, true};
    const double rate = 0.04;
    auto cost = [&](const MlpParams& q) { return total_cost(q, data, mesh, cfg, rate).total; };

    const std::size_t N = data.size();
    AdjointBatch fit{2, {}, {}, {}, {}};
    for (const auto& q : data.points) {
      fit.points.push_back(q.moneyness);
      fit.points.push_back(q.tau);
      const double x[2] = {q.moneyness, q.tau};
      fit.d_value.push_back(-2.0 * q.weight * (q.premium - evaluate(p, x)) / static_cast<double>(N));
    }
    const PenaltyEvaluation ev = penalty_loss(p, mesh, cfg, rate);
    REQUIRE(ev.e_penalty > 0.0);
    const ParamGradients grads = param_gradients(p, fit, ev.adjoints);

    std::mt19937_64 rng(50);
    std::uniform_int_distribution<std::size_t> pick(0, p.parameter_count() - 1);
    double worst = 0;
    for (int k = 0; k < 50; ++k) {
      const std::size_t i = pick(rng);
      const double fd = param_fd(p, i, 1e-5, cost);
      worst = std::max(worst, std::abs(grad_at(grads, i) - fd) / std::max(std::abs(fd), 1e-6));
    }
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("checkpoint round trip is bit exact") {
  MlpParams p = random_params({2, 16, 16, 1}, Activation::elu(0.7, 1.3), 99);
  p.layers[0].weights[3] = 0.1 + 0.2;  // not representable in short decimal form
  const MlpParams q = checkpoint_from_json(checkpoint_to_json(p));
  CHECK(q == p);
  const std::string dir = ARBFREE_TEST_TMP;
  std::filesystem::create_directories(dir);
  save_checkpoint(p, dir + "/ck.json");
  CHECK(load_checkpoint(dir + "/ck.json") == p);
  CHECK_THROWS_AS(load_checkpoint(dir + "/missing.json"), IoError);
  CHECK_THROWS_AS(checkpoint_from_json("{\"format\": 1}"), InputError);
  CHECK_THROWS_AS(checkpoint_from_json("not json"), InputError);
}
