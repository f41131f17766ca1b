#include "arbfree/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <utility>

#include "arbfree/errors.hpp"

namespace arbfree {

std::size_t QuoteGrid::boundary_count() const {
  return static_cast<std::size_t>(
      std::count_if(points.begin(), points.end(), [](const QuotePoint& q) { return q.is_boundary; }));
}

GridSpec GridSpec::standard() {
  GridSpec spec;
  spec.moneyness = linspace(0.1, 2.5, 25);
  spec.tau = {0.1, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0};
  return spec;
}

void GridSpec::validate() const {
  auto check_axis = [](const std::vector<double>& axis, double max, const char* name) {
    if (axis.empty()) throw ConfigError(std::string("grid axis '") + name + "' is empty");
    for (std::size_t i = 0; i < axis.size(); ++i) {
      if (!(axis[i] >= 0.0 && axis[i] <= max))
        throw ConfigError(std::string("grid axis '") + name + "' leaves the domain");
      if (i > 0 && !(axis[i] > axis[i - 1]))
        throw ConfigError(std::string("grid axis '") + name + "' is not strictly increasing");
    }
  };
  if (!(moneyness_max > 0.0) || !(tau_max > 0.0))
    throw ConfigError("grid domain bounds must be positive");
  check_axis(moneyness, moneyness_max, "moneyness");
  check_axis(tau, tau_max, "tau");
  if (mesh_moneyness == 0 || mesh_tau == 0) throw ConfigError("penalty mesh axis is empty");
  if (out_moneyness == 0 || out_tau == 0) throw ConfigError("out-of-sample grid axis is empty");
}

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> v(n);
  if (n == 1) {
    v[0] = lo;
    return v;
  }
  for (std::size_t i = 0; i < n; ++i)
    v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  if (n > 0) v.back() = hi;
  return v;
}

namespace {

QuotePoint priced_point(double m, double tau, const SabrParams& p) {
  QuotePoint q;
  q.moneyness = m;
  q.tau = tau;
  q.premium = sabr_premium(m, tau, p);
  return q;
}

// Ground-truth IV, left NaN where a premium cannot identify it.
void attach_sigma(QuotePoint& q, const SabrParams& p) {
  if (q.tau <= 0.0 || q.moneyness <= 0.0) return;
  const double strike = q.moneyness * p.forward;
  const double sigma = sabr_iv(strike, q.tau, p);
  if (black_vega(p.forward, strike, p.rate, q.tau, sigma) / p.forward < kMinIdentifiableVega) return;
  q.sigma = sigma;
}

}  // namespace

QuoteGrid boundary_augment(QuoteGrid grid, std::size_t n_tau0, std::size_t n_k0, double rate,
                           double moneyness_max, double tau_max) {
  for (double m : linspace(0.0, moneyness_max, n_tau0)) {
    QuotePoint q;
    q.moneyness = m;
    q.tau = 0.0;
    q.premium = std::max(1.0 - m, 0.0);
    q.is_boundary = true;
    grid.points.push_back(q);
  }
  for (std::size_t k = 1; k <= n_k0; ++k) {
    QuotePoint q;
    q.moneyness = 0.0;
    q.tau = tau_max * static_cast<double>(k) / static_cast<double>(n_k0);
    q.premium = std::exp(-rate * q.tau);
    q.is_boundary = true;
    grid.points.push_back(q);
  }
  return grid;
}

QuoteGrid synth_in_sample(const SabrParams& p, const GridSpec& spec) {
  p.validate();
  spec.validate();
  QuoteGrid grid;
  grid.provenance = Provenance::SyntheticSabr;
  grid.sabr = p;
  for (double tau : spec.tau)
    for (double m : spec.moneyness) grid.points.push_back(priced_point(m, tau, p));
  return boundary_augment(std::move(grid), spec.boundary_tau0, spec.boundary_k0, p.rate,
                          spec.moneyness_max, spec.tau_max);
}

QuoteGrid synth_out_sample(const SabrParams& p, const GridSpec& spec) {
  p.validate();
  spec.validate();
  QuoteGrid grid;
  grid.provenance = Provenance::SyntheticSabr;
  grid.sabr = p;
  const auto ms = linspace(0.0, spec.moneyness_max, spec.out_moneyness);
  const auto taus = linspace(0.0, spec.tau_max, spec.out_tau);
  grid.points.reserve(ms.size() * taus.size());
  for (double tau : taus) {
    for (double m : ms) {
      QuotePoint q = priced_point(m, tau, p);
      q.is_boundary = tau == 0.0 || m == 0.0;
      attach_sigma(q, p);
      grid.points.push_back(q);
    }
  }
  return grid;
}

Mesh penalty_mesh(const GridSpec& spec) {
  if (spec.mesh_moneyness == 0 || spec.mesh_tau == 0) throw ConfigError("penalty mesh axis is empty");
  Mesh mesh;
  const auto ms = linspace(0.0, spec.moneyness_max, spec.mesh_moneyness);
  const auto taus = linspace(0.0, spec.tau_max, spec.mesh_tau);
  mesh.reserve(ms.size() * taus.size());
  for (double tau : taus)
    for (double m : ms) mesh.push_back({m, tau});
  return mesh;
}

Mesh mesh_from_grid(const QuoteGrid& grid) {
  Mesh mesh;
  mesh.reserve(grid.size());
  for (const auto& q : grid.points) mesh.push_back({q.moneyness, q.tau});
  return mesh;
}

QuoteGrid market_style_grid(const QuoteGrid& reference, const SabrParams& p, std::size_t n_tau0,
                            std::size_t n_k0) {
  p.validate();
  QuoteGrid grid;
  grid.provenance = Provenance::SyntheticSabr;
  grid.sabr = p;
  for (const auto& ref : reference.points) {
    if (ref.is_boundary) continue;
    QuotePoint q = priced_point(ref.moneyness, ref.tau, p);
    q.weight = ref.weight;
    grid.points.push_back(q);
  }
  double m_max = 2.5;
  double tau_max = 5.0;
  for (const auto& q : grid.points) {
    m_max = std::max(m_max, q.moneyness);
    tau_max = std::max(tau_max, q.tau);
  }
  return boundary_augment(std::move(grid), n_tau0, n_k0, p.rate, m_max, tau_max);
}

// ---------------------------------------------------------------------------
// CSV

namespace {

enum class Column { Moneyness, Tau, Premium, Weight, IsBoundary, Sigma };

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  for (auto& f : out) {
    const auto b = f.find_first_not_of(" \t\r");
    const auto e = f.find_last_not_of(" \t\r");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return out;
}

double parse_number(const std::string& field, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(field, &used);
    if (used != field.size()) throw std::invalid_argument(field);
    return v;
  } catch (const std::exception&) {
    throw InputError("line " + std::to_string(line_no) + ": cannot parse '" + field + "' as a number");
  }
}


}  // namespace

CsvLoadReport parse_quotes_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<Column> columns;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") != std::string::npos) break;
  }
  if (line_no == 0 || line.find_first_not_of(" \t\r") == std::string::npos)
    throw InputError("quote file is empty");
  const auto header = split_fields(line);
  if (header.size() < 3 || header[0] != "moneyness" || header[1] != "tau" || header[2] != "premium")
    throw InputError("line " + std::to_string(line_no) +
                     ": header must start with moneyness,tau,premium");
  columns = {Column::Moneyness, Column::Tau, Column::Premium};
  for (std::size_t c = 3; c < header.size(); ++c) {
    if (header[c] == "weight") columns.push_back(Column::Weight);
    else if (header[c] == "is_boundary") columns.push_back(Column::IsBoundary);
    else if (header[c] == "sigma") columns.push_back(Column::Sigma);
    else throw InputError("line " + std::to_string(line_no) + ": unknown column '" + header[c] + "'");
  }

  // Keyed on exact coordinates; first-seen order is preserved.
  std::map<std::pair<double, double>, std::size_t> index;
  std::vector<std::size_t> multiplicity;
  CsvLoadReport report;
  report.grid.provenance = Provenance::MarketCsv;
  auto& points = report.grid.points;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_fields(line);
    if (fields.size() != columns.size())
      throw InputError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(columns.size()) + " fields, found " +
                       std::to_string(fields.size()));
    QuotePoint q;
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const auto& f = fields[c];
      switch (columns[c]) {
        case Column::Moneyness:
          q.moneyness = parse_number(f, line_no);
          break;
        case Column::Tau:
          q.tau = parse_number(f, line_no);
          break;
        case Column::Premium:
          q.premium = parse_number(f, line_no);
          break;
        case Column::Weight:
          q.weight = parse_number(f, line_no);
          break;
        case Column::IsBoundary:
          q.is_boundary = parse_number(f, line_no) != 0.0;
          break;
        case Column::Sigma:
          if (!f.empty()) q.sigma = parse_number(f, line_no);
          break;
      }
    }
    for (double v : {q.moneyness, q.tau, q.premium, q.weight})
      if (!std::isfinite(v) || v < 0.0)
        throw InputError("line " + std::to_string(line_no) + ": values must be finite and non-negative");

    const auto key = std::make_pair(q.moneyness, q.tau);
    const auto it = index.find(key);
    if (it == index.end()) {
      index.emplace(key, points.size());
      points.push_back(q);
      multiplicity.push_back(1);
    } else {
      // Running mean of premium and weight over duplicates.
      auto& kept = points[it->second];
      const double n = static_cast<double>(++multiplicity[it->second]);
      kept.premium += (q.premium - kept.premium) / n;
      kept.weight += (q.weight - kept.weight) / n;
      kept.is_boundary = kept.is_boundary && q.is_boundary;
      ++report.duplicates_merged;
    }
  }
  if (points.empty()) throw InputError("quote file has a header but no rows");
  return report;
}

CsvLoadReport load_quotes_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read quotes '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_quotes_csv(buf.str());
}

std::string quotes_to_csv(const QuoteGrid& grid) {
  std::string out = "moneyness,tau,premium,weight,is_boundary,sigma\n";
  for (const auto& q : grid.points) {
    out += format_real(q.moneyness) + ',' + format_real(q.tau) + ',' + format_real(q.premium) +
           ',' + format_real(q.weight) + ',' + (q.is_boundary ? "1" : "0") + ',' +
           (q.has_sigma() ? format_real(q.sigma) : std::string()) + '\n';
  }
  return out;
}

void write_quotes_csv(const QuoteGrid& grid, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write quotes '" + path + "'");
  out << quotes_to_csv(grid);
  if (!out) throw IoError("failed writing quotes '" + path + "'");
}

void write_mesh_csv(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write mesh '" + path + "'");
  out << "moneyness,tau\n";
  for (const auto& p : mesh) out << format_real(p.moneyness) << ',' << format_real(p.tau) << '\n';
  if (!out) throw IoError("failed writing mesh '" + path + "'");
}

Mesh load_mesh_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read mesh '" + path + "'");
  std::string line;
  std::size_t line_no = 0;
  Mesh mesh;
  if (!std::getline(in, line)) throw InputError("mesh file is empty");
  ++line_no;
  const auto header = split_fields(line);
  if (header.size() != 2 || header[0] != "moneyness" || header[1] != "tau")
    throw InputError("line 1: mesh header must be moneyness,tau");
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_fields(line);
    if (fields.size() != 2) throw InputError("line " + std::to_string(line_no) + ": expected 2 fields");
    mesh.push_back({parse_number(fields[0], line_no), parse_number(fields[1], line_no)});
  }
  if (mesh.empty()) throw InputError("mesh file has no points");
  return mesh;
}

}  // namespace arbfree
