#include <cmath>
#include <vector>

#include "arbfree/network.hpp"
#include "arbfree/sabr.hpp"
#include "arbfree/surface.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace arbfree;

TEST_CASE("network surface forwards to the network") {
  const MlpParams p = init_params(std::vector<std::size_t>{2, 8, 1}, Activation::tanh(), 4);
  const MlpSurface s(p);
  const std::vector<double> x{1.3, 0.7};
  CHECK(s.value(1.3, 0.7) == evaluate(p, x));
  const DerivativeBundle b = s.derivatives(1.3, 0.7);
  CHECK(b.grad == forward_jacobian(p, x));
  CHECK(b.diag2 == forward_second(p, x));
}

TEST_CASE("SABR surface derivatives match differences of the premium") {
  for (const SabrParams& p : {SabrParams{0.2, 1.0, -0.4, 0.6}, SabrParams{0.2, 1.0, 0.8, 0.6},
                              SabrParams{0.2, 1.0, 0.0, 0.0}}) {
    const SabrSurface s(p);
    for (double m : {0.3, 0.8, 1.0, 1.25, 2.0}) {
      for (double tau : {0.2, 1.0, 4.0}) {
        CAPTURE(m);
        CAPTURE(tau);
        CHECK(s.value(m, tau) == sabr_premium(m, tau, p));
        const DerivativeBundle b = s.derivatives(m, tau);
        auto along_m = [&](double x) { return sabr_premium(x, tau, p); };
        auto along_t = [&](double x) { return sabr_premium(m, x, p); };
        // the differences carry about 1e-9 of rounding noise
        const double gm = oracle::d1(along_m, m, 1e-3), gt = oracle::d1(along_t, tau, 1e-3);
        const double sm = oracle::d2(along_m, m, 1e-3);
        CHECK(std::abs(b.grad[0] - gm) <= 1e-6 * std::abs(gm) + 1e-9);
        CHECK(std::abs(b.grad[1] - gt) <= 1e-6 * std::abs(gt) + 1e-9);
        CHECK(std::abs(b.diag2[0] - sm) <= 1e-4 * std::abs(sm) + 1e-8);
      }
    }
  }
}

TEST_CASE("SABR surface at the edges is finite") {
  const SabrSurface s(SabrParams{0.2, 1.0, -0.4, 0.6});
  for (double m : {0.0, 1.0, 2.5}) {
    for (double tau : {0.0, 1.0}) {
      const DerivativeBundle b = s.derivatives(m, tau);
      CHECK(std::isfinite(b.grad[0]));
      CHECK(std::isfinite(b.grad[1]));
      CHECK(std::isfinite(b.diag2[0]));
    }
  }
  CHECK(s.value(0.0, 1.0) == doctest::Approx(std::exp(-0.04)));
}
