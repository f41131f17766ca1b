#include "arbfree/sabr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "arbfree/errors.hpp"

namespace arbfree {

void SabrParams::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("SABR alpha must be positive");
  if (!(beta >= 0.0 && beta <= 1.0)) throw DomainError("SABR beta must lie in [0, 1]");
  if (!(rho > -1.0 && rho < 1.0)) throw DomainError("SABR rho must lie in (-1, 1)");
  if (!(nu >= 0.0) || !std::isfinite(nu)) throw DomainError("SABR nu must be non-negative");
  if (!(forward > 0.0) || !std::isfinite(forward)) throw DomainError("forward must be positive");
  if (!std::isfinite(rate) || !std::isfinite(dividend))
    throw DomainError("rate and dividend must be finite");
}

double sabr_iv(double strike, double tau, const SabrParams& p) {
  p.validate();
  if (!(strike > 0.0) || !std::isfinite(strike)) throw DomainError("strike must be positive");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("expiry must be positive");

  const double F = p.forward;
  const double K = strike;
  const double omb = 1.0 - p.beta;
  const double log_fk = std::log(F / K);
  const double fk_pow = std::pow(F * K, omb / 2.0);  // (FK)^{(1-beta)/2}

  const double correction = omb * omb / 24.0 * p.alpha * p.alpha / (fk_pow * fk_pow) +
                            0.25 * p.rho * p.beta * p.nu * p.alpha / fk_pow +
                            (2.0 - 3.0 * p.rho * p.rho) / 24.0 * p.nu * p.nu;
  const double numerator = p.alpha * (1.0 + correction * tau);

  if (std::abs(log_fk) < 1e-10) return numerator / fk_pow;

  const double l2 = log_fk * log_fk;
  const double denominator =
      fk_pow * (1.0 + omb * omb / 24.0 * l2 + std::pow(omb, 4) / 1920.0 * l2 * l2);

  double z_over_chi = 1.0;
  if (p.nu != 0.0) {
    const double z = p.nu / p.alpha * fk_pow * log_fk;
    // chi(z) = ln((sqrt(1 - 2 rho z + z^2) + z - rho) / (1 - rho)), written as
    // log1p of the excess over 1 so small |z| keeps full relative precision.
    const double root = std::sqrt(1.0 - 2.0 * p.rho * z + z * z);
    const double excess = ((z * z - 2.0 * p.rho * z) / (root + 1.0) + z) / (1.0 - p.rho);
    z_over_chi = z / std::log1p(excess);
  }
  return numerator / denominator * z_over_chi;
}

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

namespace {

void check_black_inputs(double forward, double strike, double tau, double sigma) {
  if (!(forward > 0.0)) throw DomainError("Black: forward must be positive");
  if (!(strike >= 0.0)) throw DomainError("Black: strike must be non-negative");
  if (!(tau >= 0.0)) throw DomainError("Black: expiry must be non-negative");
  if (!(sigma >= 0.0)) throw DomainError("Black: volatility must be non-negative");
}

}  // namespace

double black_call(double forward, double strike, double rate, double tau, double sigma) {
  check_black_inputs(forward, strike, tau, sigma);
  const double df = std::exp(-rate * tau);
  if (strike == 0.0) return df * forward;
  const double sd = sigma * std::sqrt(tau);
  if (sd == 0.0) return df * std::max(forward - strike, 0.0);
  const double d1 = (std::log(forward / strike) + 0.5 * sd * sd) / sd;
  const double d2 = d1 - sd;
  return df * (forward * norm_cdf(d1) - strike * norm_cdf(d2));
}

double black_vega(double forward, double strike, double rate, double tau, double sigma) {
  check_black_inputs(forward, strike, tau, sigma);
  const double sqrt_tau = std::sqrt(tau);
  const double sd = sigma * sqrt_tau;
  if (sd == 0.0 || strike == 0.0) return 0.0;
  const double d1 = (std::log(forward / strike) + 0.5 * sd * sd) / sd;
  const double pdf = std::exp(-0.5 * d1 * d1) / std::sqrt(2.0 * std::numbers::pi);
  return std::exp(-rate * tau) * forward * pdf * sqrt_tau;
}

std::string iv_status_name(IvResult::Status status) {
  switch (status) {
    case IvResult::Status::Ok:
      return "ok";
    case IvResult::Status::BelowIntrinsic:
      return "below_intrinsic";
    case IvResult::Status::AboveUpperBound:
      return "above_upper_bound";
    case IvResult::Status::NoConvergence:
      return "no_convergence";
  }
  return "no_convergence";
}

IvResult implied_vol_black(double price, double forward, double strike, double rate, double tau,
                           const IvSolverOptions& options) {
  if (!(forward > 0.0) || !(strike > 0.0) || !(tau > 0.0))
    throw DomainError("implied vol: forward, strike and expiry must be positive");
  IvResult result;
  if (!std::isfinite(price)) return result;

  const double df = std::exp(-rate * tau);
  if (price < df * std::max(forward - strike, 0.0)) {
    result.status = IvResult::Status::BelowIntrinsic;
    return result;
  }
  if (price >= df * forward) {
    result.status = IvResult::Status::AboveUpperBound;
    return result;
  }

  const double tol = 1e-10 * df * forward;
  auto excess = [&](double s) { return black_call(forward, strike, rate, tau, s) - price; };

  double lo = options.sigma_min;
  double hi = options.sigma_max;
  const double f_lo = excess(lo);
  const double f_hi = excess(hi);
  if (f_lo > tol || f_hi < -tol) return result;  // root outside the bracket
  if (f_lo >= 0.0) {
    result = {IvResult::Status::Ok, lo, 0};
    return result;
  }
  if (f_hi <= 0.0) {
    result = {IvResult::Status::Ok, hi, 0};
    return result;
  }

  // Brenner-Subrahmanyam start, clamped into the bracket.
  double sigma = std::sqrt(2.0 * std::numbers::pi / tau) * price / (df * forward);
  sigma = std::clamp(sigma, lo, hi);
  double f = excess(sigma);
  for (int it = 1; it <= options.max_iterations; ++it) {
    result.iterations = it;
    if (f == 0.0) break;
    if (f > 0.0) hi = sigma;
    else lo = sigma;

    const double vega = black_vega(forward, strike, rate, tau, sigma);
    double next = vega > 0.0 ? sigma - f / vega : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double step = std::abs(next - sigma);
    sigma = next;
    f = excess(sigma);
    if (step <= 4.0 * std::numeric_limits<double>::epsilon() * sigma) break;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) break;
  }
  if (std::abs(f) < tol) {
    result.status = IvResult::Status::Ok;
    result.sigma = sigma;
  }
  return result;
}

double sabr_premium(double moneyness, double tau, const SabrParams& p) {
  if (!(moneyness >= 0.0) || !(tau >= 0.0)) throw DomainError("moneyness and expiry must be non-negative");
  if (tau == 0.0) return std::max(1.0 - moneyness, 0.0);
  if (moneyness == 0.0) return std::exp(-p.rate * tau);
  const double strike = moneyness * p.forward;
  const double sigma = sabr_iv(strike, tau, p);
  return black_call(p.forward, strike, p.rate, tau, sigma) / p.forward;
}

}  // namespace arbfree
