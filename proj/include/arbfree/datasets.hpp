#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "arbfree/sabr.hpp"

namespace arbfree {

/// One forward-normalized call quote: premium = C / F at moneyness K / F.
struct QuotePoint {
  double moneyness = 0.0;
  double tau = 0.0;
  double premium = 0.0;
  bool is_boundary = false;
  double weight = 1.0;
  /// Ground-truth implied volatility; NaN where the IV is not identifiable
  /// from a double-precision premium (edges, vanishing vega) or unknown.
  double sigma = std::numeric_limits<double>::quiet_NaN();

  bool has_sigma() const { return sigma == sigma; }
};

enum class Provenance { SyntheticSabr, MarketCsv };

struct QuoteGrid {
  std::vector<QuotePoint> points;
  Provenance provenance = Provenance::SyntheticSabr;
  std::optional<SabrParams> sabr;

  std::size_t size() const { return points.size(); }
  std::size_t boundary_count() const;
};

/// Penalty-mesh location.
struct MeshPoint {
  double moneyness = 0.0;
  double tau = 0.0;
};

using Mesh = std::vector<MeshPoint>;

/// Axes of the synthetic experiment grids.
struct GridSpec {
  std::vector<double> moneyness;  ///< in-sample moneyness axis
  std::vector<double> tau;        ///< in-sample expiry axis
  std::size_t boundary_tau0 = 100;  ///< points on the tau = 0 edge
  std::size_t boundary_k0 = 100;    ///< points on the K = 0 edge
  double moneyness_max = 2.5;
  double tau_max = 5.0;
  std::size_t mesh_moneyness = 26;
  std::size_t mesh_tau = 11;
  std::size_t out_moneyness = 126;
  std::size_t out_tau = 101;

  /// 25 moneyness points on [0.1, 2.5], tau in {0.1, 0.5, 1, 2, 3, 4, 5}.
  static GridSpec standard();
  /// Throws ConfigError on unsorted axes, values outside the domain or empty mesh axes.
  void validate() const;
  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Shortest-safe text form of a double (17 significant digits).
std::string format_real(double v);

/// n evenly spaced values from lo to hi inclusive (n == 1 gives {lo}).
std::vector<double> linspace(double lo, double hi, std::size_t n);

/// SABR premiums on the in-sample rectangle plus boundary points.
QuoteGrid synth_in_sample(const SabrParams& p, const GridSpec& spec);

/// Dense out-of-sample grid with ground-truth premiums and SABR volatilities.
QuoteGrid synth_out_sample(const SabrParams& p, const GridSpec& spec = GridSpec::standard());

/// Rectangular penalty mesh over [0, moneyness_max] x [0, tau_max].
Mesh penalty_mesh(const GridSpec& spec);

/// Mesh at the locations of a quote grid (used to score penalties on dense grids).
Mesh mesh_from_grid(const QuoteGrid& grid);

/// SABR premiums at the non-boundary locations of `reference`, then the
/// standard boundary augmentation.
QuoteGrid market_style_grid(const QuoteGrid& reference, const SabrParams& p,
                            std::size_t n_tau0 = 100, std::size_t n_k0 = 100);

/// Appends n_tau0 points (m_i, 0) with premium (1 - m)^+, m_i evenly spaced on
/// [0, moneyness_max], and n_k0 points (0, tau_k) with premium e^{-r tau},
/// tau_k = k tau_max / n_k0 for k = 1..n_k0 (the corner (0, 0) belongs to the first edge).
QuoteGrid boundary_augment(QuoteGrid grid, std::size_t n_tau0, std::size_t n_k0, double rate,
                           double moneyness_max = 2.5, double tau_max = 5.0);

struct CsvLoadReport {
  QuoteGrid grid;
  std::size_t duplicates_merged = 0;
};

/// Reads `moneyness,tau,premium[,weight][,is_boundary][,sigma]`. Duplicate
/// (moneyness, tau) rows are averaged. Throws InputError with the line number.
CsvLoadReport load_quotes_csv(const std::string& path);
CsvLoadReport parse_quotes_csv(const std::string& text);

/// Writes all columns with 17 significant digits.
void write_quotes_csv(const QuoteGrid& grid, const std::string& path);
std::string quotes_to_csv(const QuoteGrid& grid);

void write_mesh_csv(const Mesh& mesh, const std::string& path);
Mesh load_mesh_csv(const std::string& path);

/// Black vega (forward-normalized) below which a premium does not pin down its IV.
inline constexpr double kMinIdentifiableVega = 1e-8;

}  // namespace arbfree
