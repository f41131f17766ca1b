#include "arbfree/surface.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "arbfree/errors.hpp"

namespace arbfree {

double MlpSurface::value(double moneyness, double tau) const {
  const double x[2] = {moneyness, tau};
  return evaluate(params_, x);
}

DerivativeBundle MlpSurface::derivatives(double moneyness, double tau) const {
  const double x[2] = {moneyness, tau};
  return arbfree::derivatives(params_, x);
}

SabrSurface::SabrSurface(SabrParams params) : params_(params) { params_.validate(); }

double SabrSurface::value(double moneyness, double tau) const {
  return sabr_premium(moneyness, tau, params_);
}

namespace {

double phi(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

}  // namespace

DerivativeBundle SabrSurface::derivatives(double moneyness, double tau) const {
  if (!(moneyness >= 0.0) || !(tau >= 0.0)) throw DomainError("moneyness and expiry must be non-negative");
  DerivativeBundle out;
  out.value = value(moneyness, tau);
  out.grad.assign(2, 0.0);
  out.diag2.assign(2, 0.0);

  const double m = std::max(moneyness, kEdge);
  const double t = std::max(tau, kEdge);
  const double F = params_.forward;
  const double r = params_.rate;

  auto vol = [&](double mm, double tt) { return sabr_iv(mm * F, tt, params_); };
  const double hm = 1e-4 * m;
  const double ht = 1e-4 * t;
  const double sigma = vol(m, t);
  const double s_up = vol(m + hm, t);
  const double s_dn = vol(m - hm, t);
  const double sigma_m = (s_up - s_dn) / (2.0 * hm);
  const double sigma_mm = (s_up - 2.0 * sigma + s_dn) / (hm * hm);
  const double sigma_t = (vol(m, t + ht) - vol(m, t - ht)) / (2.0 * ht);

  const double df = std::exp(-r * t);
  const double sqrt_t = std::sqrt(t);
  const double sd = sigma * sqrt_t;
  const double d1 = (-std::log(m) + 0.5 * sd * sd) / sd;
  const double d2 = d1 - sd;

  const double b = df * (norm_cdf(d1) - m * norm_cdf(d2));
  const double b_m = -df * norm_cdf(d2);
  const double b_mm = df * phi(d2) / (m * sd);
  const double b_s = df * phi(d1) * sqrt_t;
  const double b_ms = df * phi(d2) * d1 / sigma;
  const double b_ss = b_s * d1 * d2 / sigma;
  const double b_t = -r * b + df * phi(d1) * sigma / (2.0 * sqrt_t);

  out.grad[0] = b_m + b_s * sigma_m;
  out.grad[1] = b_t + b_s * sigma_t;
  out.diag2[0] = b_mm + 2.0 * b_ms * sigma_m + b_ss * sigma_m * sigma_m + b_s * sigma_mm;
  return out;
}

}  // namespace arbfree
