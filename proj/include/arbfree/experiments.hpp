#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "arbfree/constraints.hpp"
#include "arbfree/datasets.hpp"
#include "arbfree/sabr.hpp"
#include "arbfree/surface.hpp"
#include "arbfree/training.hpp"

namespace arbfree {

enum class ModelMode { Mlp, Dcnn };

std::string mode_name(ModelMode mode);
/// "mlp" or "dcnn"; throws ConfigError otherwise.
ModelMode parse_mode(const std::string& name);

/// Penalty used to train in `mode`: all magnitudes zero for Mlp, `dcnn` otherwise.
PenaltyConfig penalty_for_mode(ModelMode mode, const PenaltyConfig& dcnn);

/// A SABR smile/skew setting.
struct Condition {
  double nu = 0.0;
  double rho = 0.0;

  /// e.g. "nu0.6_rho-0.4"; safe in file names and CSV fields
  std::string tag() const;
  friend bool operator==(const Condition&, const Condition&) = default;
};

/// The nine (nu, rho) settings of the synthetic benchmark.
std::vector<Condition> benchmark_conditions();

/// Error metrics of one model on one evaluation set.
struct MetricsRow {
  std::string condition;
  std::string model;
  std::string sample;  ///< "in" or "out"
  std::uint64_t seed = 0;
  double e_mse = 0.0;
  double e_penalty = 0.0;
  double e_mse_sigma = 0.0;  ///< 0 when the set has no volatility truth
  std::size_t sigma_points = 0;  ///< points carrying a volatility truth
  std::size_t invalid_iv = 0;    ///< of those, predictions with no Black IV
};

/// Premium MSE on `truth`, penalty on `mesh` and the IV error on the points
/// of `truth` that carry a volatility. Invalid-IV points are counted and
/// left out of the IV mean.
MetricsRow eval_metrics(const PremiumSurface& model, const QuoteGrid& truth, const Mesh& mesh,
                        const PenaltyConfig& cfg, double rate);

/// Derivative curves along fixed-expiry slices with no-arbitrage violation masks.
struct ProfileSlice {
  double tau = 0.0;
  std::vector<double> moneyness;
  std::vector<double> d_m;
  std::vector<double> d_mm;
  std::vector<double> d_tau;
  std::vector<bool> delta_violation;  ///< d_m > 0
  std::vector<bool> gamma_violation;  ///< d_mm < 0
  std::vector<bool> theta_violation;  ///< d_tau < 0
  std::vector<bool> lower_violation;  ///< d_m < -e^{-r tau}
};

struct RiskProfile {
  std::vector<ProfileSlice> slices;
  std::size_t violations() const;
};

/// tau in {0.5, 1, 2, 3, 5}.
std::vector<double> default_profile_slices();

/// Throws InputError on empty inputs or slices outside [0, tau_max].
RiskProfile risk_profiles(const PremiumSurface& model, std::span<const double> tau_slices,
                          std::span<const double> moneyness, double rate);

/// `tau,moneyness,d_m,d_mm,d_tau,delta_violation,gamma_violation,theta_violation,lower_violation`
std::string profile_to_csv(const RiskProfile& profile);

/// Everything needed to reproduce a matrix run.
struct MatrixConfig {
  SabrParams sabr;  ///< nu and rho are overridden per condition
  GridSpec grid = GridSpec::standard();
  TrainConfig train;  ///< penalty is the DCNN penalty; seed is overridden per run
  std::vector<Condition> conditions = benchmark_conditions();
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::vector<ModelMode> modes{ModelMode::Mlp, ModelMode::Dcnn};
  std::size_t jobs = 1;
};

/// One trained model scored in- and out-of-sample.
struct MatrixRow {
  Condition condition;
  ModelMode mode = ModelMode::Mlp;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  MetricsRow in;
  MetricsRow out;
};

struct MatrixResult {
  std::vector<MatrixRow> rows;  ///< condition-major, then seed, then mode
  std::size_t failures() const;
};

/// Trains every condition x seed x mode (paired seeds across modes) on up to
/// `jobs` threads. A failed run is recorded in its row and the matrix continues.
MatrixResult run_matrix(const MatrixConfig& cfg);

std::string matrix_to_csv(const MatrixResult& result);

/// Mean, sample standard deviation and median of a metric over seeds.
struct Aggregate {
  double mean = 0.0;
  double std = 0.0;
  double median = 0.0;
  std::size_t count = 0;
};

Aggregate aggregate(std::vector<double> values);

/// Per condition and mode, aggregates of completed rows.
struct SummaryRow {
  Condition condition;
  ModelMode mode = ModelMode::Mlp;
  Aggregate in_e_mse;
  Aggregate in_e_penalty;
  Aggregate out_e_mse;
  Aggregate out_e_penalty;
  Aggregate out_e_mse_sigma;
};

std::vector<SummaryRow> summarize(const MatrixResult& result);
std::string summary_to_csv(const std::vector<SummaryRow>& summary);

/// Timing sweep over architectures and activations.
struct BenchConfig {
  SabrParams sabr{0.2, 1.0, -0.4, 0.6};
  GridSpec grid = GridSpec::standard();
  TrainConfig train;  ///< epochs, optimizer and DCNN penalty
  std::vector<std::size_t> hidden_layers{2};
  std::vector<std::size_t> widths{16};
  std::vector<Activation> activations{Activation::softplus()};
  std::size_t repeats = 3;
};

struct BenchRow {
  std::string activation;
  std::size_t hidden_layers = 0;
  std::size_t width = 0;
  std::size_t params = 0;
  ModelMode mode = ModelMode::Mlp;
  std::size_t repeat = 0;
  double seconds = 0.0;
};

struct BenchSummaryRow {
  std::string activation;
  std::size_t hidden_layers = 0;
  std::size_t width = 0;
  std::size_t params = 0;
  Aggregate mlp;
  Aggregate dcnn;
  double ratio = 0.0;  ///< mean DCNN time / mean MLP time
};

struct BenchResult {
  std::vector<BenchRow> rows;
  std::vector<BenchSummaryRow> summary;
};

/// Runs serially so timings do not interfere. Repeat r uses seed r for both modes.
BenchResult bench(const BenchConfig& cfg);

std::string bench_to_csv(const BenchResult& result);
std::string bench_summary_to_csv(const BenchResult& result);

}  // namespace arbfree
