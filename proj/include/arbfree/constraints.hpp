#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "arbfree/datasets.hpp"
#include "arbfree/network.hpp"

namespace arbfree {

/// Shape of the penalty on a violation of size x > 0.
enum class Intensifier { Identity, Square };

std::string intensifier_name(Intensifier g);
Intensifier parse_intensifier(const std::string& name);

/// Penalty terms in evaluation order.
///
///   Delta:  dC/dK <= 0              signed value  +dPhi/dm
///   Gamma:  d2C/dK2 >= 0            signed value  -d2Phi/dm2
///   Theta:  dC/dtau >= 0            signed value  -dPhi/dtau
///   Lower:  dC/dK >= -e^{-r tau}    signed value  -(dPhi/dm + e^{-r tau})
///
/// A term is violated when its signed value is strictly positive.
enum class Term : std::size_t { Delta = 0, Gamma = 1, Theta = 2, Lower = 3 };
inline constexpr std::size_t kTermCount = 4;

/// Sign adjustments applied to the derivatives before the intensifier.
inline constexpr double kSignDelta = 1.0;
inline constexpr double kSignGamma = -1.0;
inline constexpr double kSignTheta = -1.0;

struct PenaltyConfig {
  double m_k = 0.001;
  double m_kk = 0.01;
  double m_tau = 0.001;
  Intensifier g = Intensifier::Identity;
  bool lower_bound = false;
  bool self_adaptive = false;
  double eta_m = 0.1;

  /// m_K = m_tau = 0.001, m_KK = 0.01, identity intensifier.
  static PenaltyConfig baseline() { return {}; }
  /// All magnitudes zero: plain MSE training.
  static PenaltyConfig disabled() { return {0.0, 0.0, 0.0}; }

  bool active() const { return m_k > 0.0 || m_kk > 0.0 || m_tau > 0.0; }
  double magnitude(Term t) const;
  /// Throws ConfigError on negative magnitudes or learning rate.
  void validate() const;
  friend bool operator==(const PenaltyConfig&, const PenaltyConfig&) = default;
};

/// Per-mesh-point penalty magnitudes for self-adaptive training, indexed [term][point].
struct AdaptiveWeights {
  std::array<std::vector<double>, kTermCount> m;

  static AdaptiveWeights uniform(const PenaltyConfig& cfg, std::size_t mesh_size);
  std::size_t size() const { return m[0].size(); }
};

/// Data-fit error, penalty and their per-term breakdown.
struct LossReport {
  double e_mse = 0.0;
  double e_penalty = 0.0;
  std::array<double, kTermCount> terms{};
  std::array<std::size_t, kTermCount> violations{};
  double total = 0.0;
};

/// (1/N) sum (target - prediction)^2. Throws InputError on empty or mismatched input.
double mse_loss(std::span<const double> predictions, std::span<const double> targets);

/// m * g(x) when x > 0, else 0.
double lambda_penalty(double m, double signed_value, Intensifier g);

/// Signed values of all terms from dPhi/d(m, tau) and d2Phi/dm2 at expiry tau.
std::array<double, kTermCount> signed_violations(double d_m, double d_tau, double d_mm, double tau,
                                                 double rate);

/// Penalty of one mesh point and its adjoints with respect to the input
/// derivatives (before the 1/M average).
struct PointPenalty {
  std::array<double, kTermCount> values{};
  std::array<double, kTermCount> signed_values{};
  std::array<double, 2> d_grad{};   ///< d/d(dPhi/dm), d/d(dPhi/dtau)
  std::array<double, 2> d_diag2{};  ///< d/d(d2Phi/dm2), d/d(d2Phi/dtau2)
};

/// `magnitudes` are the effective multipliers per term (m, or gamma(m) in self-adaptive mode).
PointPenalty point_penalty(std::span<const double> grad, std::span<const double> diag2, double tau,
                           double rate, const std::array<double, kTermCount>& magnitudes,
                           const PenaltyConfig& cfg);

/// Effective multipliers at mesh point j: cfg magnitudes, or gamma(m_ij) = m_ij^2
/// when self-adaptive weights are given.
std::array<double, kTermCount> effective_magnitudes(const PenaltyConfig& cfg,
                                                    const AdaptiveWeights* weights, std::size_t j);

/// Mean penalty over a mesh with adjoints for the network's backward pass.
struct PenaltyEvaluation {
  double e_penalty = 0.0;
  std::array<double, kTermCount> terms{};
  std::array<std::size_t, kTermCount> violations{};
  AdjointBatch adjoints;  ///< mesh points with dE_P/d(grad), dE_P/d(diag2)
  std::vector<std::array<double, kTermCount>> signed_values;
};

/// Penalty of `model` over `mesh` (input order: moneyness, tau).
/// Throws NumericalError naming the first mesh point with a non-finite derivative.
PenaltyEvaluation penalty_loss(const MlpParams& model, const Mesh& mesh, const PenaltyConfig& cfg,
                               double rate = 0.0, const AdaptiveWeights* weights = nullptr);

/// Same reduction from precomputed derivatives (any surface model).
PenaltyEvaluation penalty_from_derivatives(std::span<const DerivativeBundle> derivs, const Mesh& mesh,
                                           const PenaltyConfig& cfg, double rate = 0.0,
                                           const AdaptiveWeights* weights = nullptr);

/// E_MSE on `data` plus E_P on `mesh`.
LossReport total_cost(const MlpParams& model, const QuoteGrid& data, const Mesh& mesh,
                      const PenaltyConfig& cfg, double rate = 0.0,
                      const AdaptiveWeights* weights = nullptr);

/// One plain gradient-ascent step on the per-point weights:
/// m <- m + eta * gamma'(m) * g(v) where v > 0, with gamma(m) = m^2. The
/// lower-bound weights only move when cfg.lower_bound is set.
/// Throws ConfigError when eta < 0 and ConsistencyError on size mismatch.
AdaptiveWeights self_adaptive_update(const AdaptiveWeights& weights,
                                     std::span<const std::array<double, kTermCount>> signed_values,
                                     const PenaltyConfig& cfg, double eta);

}  // namespace arbfree
