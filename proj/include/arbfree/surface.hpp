#pragma once

#include "arbfree/network.hpp"
#include "arbfree/sabr.hpp"

namespace arbfree {

/// A normalized premium surface c(m, tau) = C / F with its input derivatives.
class PremiumSurface {
 public:
  virtual ~PremiumSurface() = default;
  virtual double value(double moneyness, double tau) const = 0;
  /// grad = {dc/dm, dc/dtau}, diag2 = {d2c/dm2, d2c/dtau2}.
  virtual DerivativeBundle derivatives(double moneyness, double tau) const = 0;
};

/// Network-backed surface; holds a reference to the parameters.
class MlpSurface final : public PremiumSurface {
 public:
  explicit MlpSurface(const MlpParams& params) : params_(params) {}
  double value(double moneyness, double tau) const override;
  DerivativeBundle derivatives(double moneyness, double tau) const override;

 private:
  const MlpParams& params_;
};

/// Ground-truth SABR pricer.
///
/// Derivatives combine closed-form Black sensitivities with central
/// differences of the SABR volatility, which is smooth in strike and expiry.
/// On the edges the derivatives are taken at m = kEdge or tau = kEdge.
/// d2c/dtau2 is not computed and reported as 0.
class SabrSurface final : public PremiumSurface {
 public:
  static constexpr double kEdge = 1e-6;

  explicit SabrSurface(SabrParams params);
  double value(double moneyness, double tau) const override;
  DerivativeBundle derivatives(double moneyness, double tau) const override;
  const SabrParams& params() const { return params_; }

 private:
  SabrParams params_;
};

}  // namespace arbfree
