#include <cmath>
#include <random>
#include <vector>

#include "arbfree/constraints.hpp"
#include "arbfree/datasets.hpp"
#include "arbfree/errors.hpp"
#include "arbfree/network.hpp"
#include "arbfree/training.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace arbfree;

namespace {

SabrParams skew_params() {
  SabrParams p;
  p.rho = -0.4;
  p.nu = 0.6;
  return p;
}

MlpParams constant_net(double c) {
  MlpParams p = init_params(std::vector<std::size_t>{2, 4, 1}, Activation::softplus(), 3);
  std::fill(p.layers[1].weights.begin(), p.layers[1].weights.end(), 0.0);
  p.layers[1].bias[0] = c;
  return p;
}

// Term-by-term re-summation of the penalty from per-point derivatives.
double hand_penalty(const MlpParams& p, const Mesh& mesh, const PenaltyConfig& cfg, double rate) {
  double acc = 0;
  for (const auto& pt : mesh) {
    const std::vector<double> x{pt.moneyness, pt.tau};
    const auto g = forward_jacobian(p, x);
    const auto s = forward_second(p, x);
    auto lam = [&](double m, double v) {
      if (v <= 0) return 0.0;
      return cfg.g == Intensifier::Square ? m * v * v : m * v;
    };
    acc += lam(cfg.m_k, g[0]);
    acc += lam(cfg.m_kk, -s[0]);
    acc += lam(cfg.m_tau, -g[1]);
    if (cfg.lower_bound) acc += lam(cfg.m_k, -g[0] - std::exp(-rate * pt.tau));
  }
  return acc / static_cast<double>(mesh.size());
}

double hand_mse(const MlpParams& p, const QuoteGrid& data) {
  double acc = 0;
  for (const auto& q : data.points) {
    const double e = q.premium - oracle::network_value(p, {q.moneyness, q.tau});
    acc += q.weight * e * e;
  }
  return acc / static_cast<double>(data.size());
}

}  // namespace

TEST_CASE("mse_loss") {
  const std::vector<double> a{0.0}, b{2.0};
  CHECK(mse_loss(a, b) == 4.0);
  CHECK(mse_loss(b, b) == 0.0);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n01;
  std::vector<double> p(257), t(257);
  for (auto& v : p) v = n01(rng);
  for (auto& v : t) v = n01(rng);
  double acc = 0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += (t[i] - p[i]) * (t[i] - p[i]);
  CHECK(std::abs(mse_loss(p, t) - acc / 257.0) < 1e-15);
  CHECK_THROWS_AS(mse_loss(std::vector<double>{}, std::vector<double>{}), InputError);
  CHECK_THROWS_AS(mse_loss(a, p), InputError);
}

TEST_CASE("lambda_penalty") {
  CHECK(lambda_penalty(0.01, -0.3, Intensifier::Identity) == 0.0);
  CHECK(lambda_penalty(0.01, 0.3, Intensifier::Identity) == doctest::Approx(0.003).epsilon(1e-15));
  CHECK(lambda_penalty(0.001, 0.5, Intensifier::Square) == doctest::Approx(0.00025).epsilon(1e-15));
  CHECK(lambda_penalty(0.01, 0.0, Intensifier::Identity) == 0.0);
  CHECK(intensifier_name(parse_intensifier("square")) == "square");
  CHECK_THROWS_AS(parse_intensifier("cube"), ConfigError);
}

TEST_CASE("signed values follow the no-arbitrage inequalities") {
  const auto v = signed_violations(-0.3, 0.2, 0.5, 1.0, 0.0);
  CHECK(v[0] < 0);  // decreasing in strike
  CHECK(v[1] < 0);  // convex
  CHECK(v[2] < 0);  // increasing in expiry
  CHECK(v[3] < 0);  // slope above -1
  const auto w = signed_violations(0.1, -0.2, -0.5, 1.0, 0.0);
  CHECK(w[0] == doctest::Approx(0.1));
  CHECK(w[1] == doctest::Approx(0.5));
  CHECK(w[2] == doctest::Approx(0.2));
  CHECK(signed_violations(-1.5, 0, 0, 2.0, 0.04)[3] == doctest::Approx(1.5 - std::exp(-0.08)));
}

TEST_CASE("point_penalty adjoints match finite differences") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n01;
  for (const Intensifier g : {Intensifier::Identity, Intensifier::Square}) {
    PenaltyConfig cfg{0.3, 0.7, 0.2, g, true};
    const std::array<double, kTermCount> mags{0.3, 0.7, 0.2, 0.3};
    for (int k = 0; k < 50; ++k) {
      std::array<double, 2> grad{n01(rng), n01(rng)}, diag{n01(rng), n01(rng)};
      const double tau = 1.3;
      auto total = [&](std::array<double, 2> gr, std::array<double, 2> dg) {
        const auto pp = point_penalty(gr, dg, tau, 0.04, mags, cfg);
        return pp.values[0] + pp.values[1] + pp.values[2] + pp.values[3];
      };
      const PointPenalty pp = point_penalty(grad, diag, tau, 0.04, mags, cfg);
      const double h = 1e-7;
      for (std::size_t i = 0; i < 2; ++i) {
        auto up = grad, dn = grad;
        up[i] += h;
        dn[i] -= h;
        CHECK(pp.d_grad[i] == doctest::Approx((total(up, diag) - total(dn, diag)) / (2 * h)).epsilon(1e-6));
        auto up2 = diag, dn2 = diag;
        up2[i] += h;
        dn2[i] -= h;
        CHECK(pp.d_diag2[i] == doctest::Approx((total(grad, up2) - total(grad, dn2)) / (2 * h)).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("constant model has no penalty") {
  const MlpParams p = constant_net(0.5);
  const Mesh mesh = penalty_mesh(GridSpec::standard());
  PenaltyConfig cfg;
  cfg.lower_bound = true;
  const PenaltyEvaluation ev = penalty_loss(p, mesh, cfg, 0.04);
  CHECK(ev.e_penalty == 0.0);
  for (auto c : ev.violations) CHECK(c == 0);

  // a fit with no violations costs nothing
  QuoteGrid data;
  for (int i = 0; i < 5; ++i) data.points.push_back({0.2 * i, 1.0, 0.5});
  CHECK(total_cost(p, data, mesh, cfg, 0.04).total == 0.0);
}

TEST_CASE("output increasing in strike") {
  MlpParams p;
  p.layers.push_back({2, 1, {1.0, 0.0}, {0.0}});  // phi = m
  Mesh mesh;
  for (int i = 0; i < 10; ++i) mesh.push_back({0.25 * i, 0.5 * i});
  const PenaltyEvaluation ev = penalty_loss(p, mesh, PenaltyConfig::baseline());
  CHECK(ev.e_penalty == doctest::Approx(0.001).epsilon(1e-14));
  CHECK(ev.violations[0] == 10);
  CHECK(ev.violations[1] == 0);
  CHECK(ev.violations[2] == 0);
}

TEST_CASE("penalty equals an independent re-summation") {
  const SabrParams sabr = skew_params();
  const QuoteGrid data = synth_in_sample(sabr, GridSpec::standard());
  const Mesh mesh = penalty_mesh(GridSpec::standard());
  const PenaltyConfig base = PenaltyConfig::baseline();

  SUBCASE("untrained seed-7 network") {
    const MlpParams p = init_params(std::vector<std::size_t>{2, 16, 16, 1}, Activation::softplus(), 7);
    const LossReport r = total_cost(p, data, mesh, base);
    CHECK(std::abs(r.e_penalty - hand_penalty(p, mesh, base, 0.0)) < 1e-12);
    CHECK(std::abs(r.e_mse - hand_mse(p, data)) < 1e-12);
    CHECK(r.total == r.e_mse + r.e_penalty);
    double term_sum = 0;
    for (double t : r.terms) term_sum += t;
    CHECK(term_sum == doctest::Approx(r.e_penalty).epsilon(1e-14));
  }
  SUBCASE("trained plain network, square intensifier with lower bound") {
    TrainConfig tc;
    tc.epochs = 300;
    tc.adam.learning_rate = 1e-2;
    tc.penalty = PenaltyConfig::disabled();
    tc.seed = 7;
    const MlpParams p = train(data, mesh, tc).params;
    PenaltyConfig cfg = base;
    cfg.g = Intensifier::Square;
    cfg.lower_bound = true;
    const PenaltyEvaluation ev = penalty_loss(p, mesh, cfg, 0.04);
    CHECK(ev.e_penalty > 0.0);
    CHECK(std::abs(ev.e_penalty - hand_penalty(p, mesh, cfg, 0.04)) < 1e-12);
    const PenaltyEvaluation ev_base = penalty_loss(p, mesh, base);
    CHECK(std::abs(ev_base.e_penalty - hand_penalty(p, mesh, base, 0.0)) < 1e-12);
  }
}

TEST_CASE("zero magnitudes leave only the data term") {
  const QuoteGrid data = synth_in_sample(skew_params(), GridSpec::standard());
  const Mesh mesh = penalty_mesh(GridSpec::standard());
  const MlpParams p = init_params(std::vector<std::size_t>{2, 16, 16, 1}, Activation::softplus(), 7);
  const LossReport r = total_cost(p, data, mesh, PenaltyConfig::disabled());
  CHECK(r.e_penalty == 0.0);
  CHECK(r.total == r.e_mse);
}

TEST_CASE("penalty errors") {
  const MlpParams p = constant_net(0.1);
  CHECK_THROWS_AS(penalty_loss(p, Mesh{}, PenaltyConfig::baseline()), InputError);
  PenaltyConfig bad;
  bad.m_kk = -1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  AdaptiveWeights w = AdaptiveWeights::uniform(PenaltyConfig::baseline(), 3);
  const Mesh mesh(5, MeshPoint{1.0, 1.0});
  CHECK_THROWS_AS(penalty_loss(p, mesh, PenaltyConfig::baseline(), 0.0, &w), ConsistencyError);
}

TEST_CASE("self-adaptive update") {
  PenaltyConfig cfg;
  AdaptiveWeights w;
  for (auto& m : w.m) m = {0.01, 0.0, 0.02};
  std::vector<std::array<double, kTermCount>> v{{0.5, -1.0, 0.0, 0.5}, {0.5, 0.5, 0.5, 0.5}, {-0.1, -0.1, -0.1, -0.1}};

  const AdaptiveWeights out = self_adaptive_update(w, v, cfg, 0.1);
  CHECK(out.m[0][0] == doctest::Approx(0.011).epsilon(1e-14));
  CHECK(out.m[1][0] == 0.01);  // complied
  CHECK(out.m[2][0] == 0.01);  // boundary, not violated
  CHECK(out.m[3][0] == 0.01);  // lower bound disabled
  for (std::size_t t = 0; t < kTermCount; ++t) CHECK(out.m[t][1] == 0.0);  // fixed point
  for (std::size_t t = 0; t < kTermCount; ++t) CHECK(out.m[t][2] == 0.02);

  cfg.lower_bound = true;
  CHECK(self_adaptive_update(w, v, cfg, 0.1).m[3][0] == doctest::Approx(0.011));
  cfg.g = Intensifier::Square;
  CHECK(self_adaptive_update(w, v, cfg, 0.1).m[0][0] == doctest::Approx(0.01 + 0.1 * 0.02 * 0.25));

  CHECK_THROWS_AS(self_adaptive_update(w, v, cfg, -0.1), ConfigError);
  v.pop_back();
  CHECK_THROWS_AS(self_adaptive_update(w, v, cfg, 0.1), ConsistencyError);
}

TEST_CASE("self-adaptive weights never decrease") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01;
  PenaltyConfig cfg;
  cfg.lower_bound = true;
  AdaptiveWeights w = AdaptiveWeights::uniform(cfg, 40);
  for (int step = 0; step < 100; ++step) {
    std::vector<std::array<double, kTermCount>> v(40);
    for (auto& row : v)
      for (auto& x : row) x = n01(rng);
    const AdaptiveWeights next = self_adaptive_update(w, v, cfg, 0.5);
    for (std::size_t t = 0; t < kTermCount; ++t)
      for (std::size_t j = 0; j < 40; ++j) CHECK(next.m[t][j] >= w.m[t][j]);
    w = next;
  }
  const auto mags = effective_magnitudes(cfg, &w, 0);
  CHECK(mags[1] == w.m[1][0] * w.m[1][0]);
  CHECK(effective_magnitudes(cfg, nullptr, 0)[1] == cfg.m_kk);
}
