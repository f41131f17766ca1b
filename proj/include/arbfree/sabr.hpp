#pragma once

#include <string>

namespace arbfree {

/// SABR dynamics plus the market inputs that define a synthetic premium surface.
struct SabrParams {
  double alpha = 0.2;  ///< initial volatility level, > 0
  double beta = 1.0;   ///< backbone exponent in [0, 1]
  double rho = 0.0;    ///< spot-vol correlation in (-1, 1)
  double nu = 0.0;     ///< vol of vol, >= 0
  double forward = 1.0;
  double rate = 0.04;
  double dividend = 0.0;  ///< informational; enters only through `forward`

  /// Throws DomainError when a field is outside its range.
  void validate() const;
  friend bool operator==(const SabrParams&, const SabrParams&) = default;
};

/// SABR closed-form lognormal implied volatility. Uses the at-the-money
/// expansion when |ln(F/K)| < 1e-10 and z/chi(z) = 1 when nu = 0.
double sabr_iv(double strike, double tau, const SabrParams& p);

/// Standard normal CDF via erfc.
double norm_cdf(double x);

/// Black-76 call premium e^{-r tau} [F N(d1) - K N(d2)].
/// Returns the discounted intrinsic value when tau = 0 or sigma = 0.
double black_call(double forward, double strike, double rate, double tau, double sigma);

/// dC/dsigma of black_call.
double black_vega(double forward, double strike, double rate, double tau, double sigma);

struct IvResult {
  enum class Status { Ok, BelowIntrinsic, AboveUpperBound, NoConvergence };

  Status status = Status::NoConvergence;
  double sigma = 0.0;  ///< meaningful only when ok()
  int iterations = 0;

  bool ok() const { return status == Status::Ok; }
};

std::string iv_status_name(IvResult::Status status);

struct IvSolverOptions {
  double sigma_min = 1e-6;
  double sigma_max = 5.0;
  int max_iterations = 200;
};

/// Black implied volatility by Newton steps safeguarded with bisection on
/// [sigma_min, sigma_max]. Prices below the discounted intrinsic value or at or
/// above the discounted forward are Invalid.
IvResult implied_vol_black(double price, double forward, double strike, double rate, double tau,
                           const IvSolverOptions& options = {});

/// Forward-normalized SABR premium C/F at moneyness K/F, including the
/// analytic edges C(K, 0) = (F - K)^+ and C(0, tau) = e^{-r tau} F.
double sabr_premium(double moneyness, double tau, const SabrParams& p);

}  // namespace arbfree
