#include "arbfree/constraints.hpp"

#include <cmath>
#include <sstream>

#include "arbfree/errors.hpp"

namespace arbfree {

std::string intensifier_name(Intensifier g) {
  return g == Intensifier::Square ? "square" : "identity";
}

Intensifier parse_intensifier(const std::string& name) {
  if (name == "identity") return Intensifier::Identity;
  if (name == "square") return Intensifier::Square;
  throw ConfigError("unknown intensifier '" + name + "'");
}

double PenaltyConfig::magnitude(Term t) const {
  switch (t) {
    case Term::Delta:
    case Term::Lower:
      return m_k;
    case Term::Gamma:
      return m_kk;
    case Term::Theta:
      return m_tau;
  }
  return 0.0;
}

void PenaltyConfig::validate() const {
  for (double m : {m_k, m_kk, m_tau})
    if (!(m >= 0.0) || !std::isfinite(m)) throw ConfigError("penalty magnitudes must be non-negative");
  if (!(eta_m >= 0.0) || !std::isfinite(eta_m))
    throw ConfigError("self-adaptive learning rate must be non-negative");
}

AdaptiveWeights AdaptiveWeights::uniform(const PenaltyConfig& cfg, std::size_t mesh_size) {
  AdaptiveWeights w;
  for (std::size_t t = 0; t < kTermCount; ++t)
    w.m[t].assign(mesh_size, cfg.magnitude(static_cast<Term>(t)));
  return w;
}

double mse_loss(std::span<const double> predictions, std::span<const double> targets) {
  if (predictions.empty()) throw InputError("mse_loss: empty batch");
  if (predictions.size() != targets.size()) throw InputError("mse_loss: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double e = targets[i] - predictions[i];
    acc += e * e;
  }
  return acc / static_cast<double>(predictions.size());
}

namespace {

double intensify(double x, Intensifier g) { return g == Intensifier::Square ? x * x : x; }
double intensify_slope(double x, Intensifier g) { return g == Intensifier::Square ? 2.0 * x : 1.0; }

}  // namespace

double lambda_penalty(double m, double signed_value, Intensifier g) {
  return signed_value > 0.0 ? m * intensify(signed_value, g) : 0.0;
}

std::array<double, kTermCount> signed_violations(double d_m, double d_tau, double d_mm, double tau,
                                                 double rate) {
  return {kSignDelta * d_m, kSignGamma * d_mm, kSignTheta * d_tau,
          -(d_m + std::exp(-rate * tau))};
}

PointPenalty point_penalty(std::span<const double> grad, std::span<const double> diag2, double tau,
                           double rate, const std::array<double, kTermCount>& magnitudes,
                           const PenaltyConfig& cfg) {
  PointPenalty out;
  out.signed_values = signed_violations(grad[0], grad[1], diag2[0], tau, rate);
  // d(signed value)/d(input derivative) for each term.
  std::array<double, kTermCount> slope{};
  for (std::size_t t = 0; t < kTermCount; ++t) {
    if (t == static_cast<std::size_t>(Term::Lower) && !cfg.lower_bound) continue;
    const double v = out.signed_values[t];
    out.values[t] = lambda_penalty(magnitudes[t], v, cfg.g);
    slope[t] = v > 0.0 ? magnitudes[t] * intensify_slope(v, cfg.g) : 0.0;
  }
  out.d_grad[0] = kSignDelta * slope[0] - slope[3];
  out.d_grad[1] = kSignTheta * slope[2];
  out.d_diag2[0] = kSignGamma * slope[1];
  out.d_diag2[1] = 0.0;
  return out;
}

std::array<double, kTermCount> effective_magnitudes(const PenaltyConfig& cfg,
                                                    const AdaptiveWeights* weights, std::size_t j) {
  std::array<double, kTermCount> mags{};
  for (std::size_t t = 0; t < kTermCount; ++t) {
    if (weights) {
      const double m = weights->m[t][j];
      mags[t] = m * m;
    } else {
      mags[t] = cfg.magnitude(static_cast<Term>(t));
    }
  }
  return mags;
}

namespace {

void check_weights(const AdaptiveWeights* weights, std::size_t mesh_size) {
  if (!weights) return;
  for (const auto& w : weights->m)
    if (w.size() != mesh_size) throw ConsistencyError("adaptive weights do not match the mesh size");
}

[[noreturn]] void throw_non_finite(const MeshPoint& p, std::size_t j) {
  std::ostringstream msg;
  msg << "non-finite derivative at mesh point " << j << " (moneyness=" << p.moneyness
      << ", tau=" << p.tau << ")";
  throw NumericalError(msg.str());
}

}  // namespace

PenaltyEvaluation penalty_from_derivatives(std::span<const DerivativeBundle> derivs, const Mesh& mesh,
                                           const PenaltyConfig& cfg, double rate,
                                           const AdaptiveWeights* weights) {
  if (mesh.empty()) throw InputError("penalty mesh is empty");
  if (derivs.size() != mesh.size()) throw ConsistencyError("derivative count does not match the mesh");
  check_weights(weights, mesh.size());

  const std::size_t M = mesh.size();
  const double inv_m = 1.0 / static_cast<double>(M);
  PenaltyEvaluation ev;
  ev.adjoints.input_dim = 2;
  ev.adjoints.points.resize(2 * M);
  ev.adjoints.d_value.assign(M, 0.0);
  ev.adjoints.d_grad.resize(2 * M);
  ev.adjoints.d_diag2.resize(2 * M);
  ev.signed_values.resize(M);

  for (std::size_t j = 0; j < M; ++j) {
    const auto& b = derivs[j];
    if (b.grad.size() != 2 || b.diag2.size() != 2)
      throw ConsistencyError("penalty needs two-input derivatives (moneyness, tau)");
    if (!std::isfinite(b.grad[0]) || !std::isfinite(b.grad[1]) || !std::isfinite(b.diag2[0]))
      throw_non_finite(mesh[j], j);
    const PointPenalty pp =
        point_penalty(b.grad, b.diag2, mesh[j].tau, rate, effective_magnitudes(cfg, weights, j), cfg);
    for (std::size_t t = 0; t < kTermCount; ++t) {
      ev.terms[t] += pp.values[t];
      if (pp.values[t] > 0.0) ++ev.violations[t];
    }
    ev.signed_values[j] = pp.signed_values;
    ev.adjoints.points[2 * j] = mesh[j].moneyness;
    ev.adjoints.points[2 * j + 1] = mesh[j].tau;
    for (std::size_t i = 0; i < 2; ++i) {
      ev.adjoints.d_grad[2 * j + i] = pp.d_grad[i] * inv_m;
      ev.adjoints.d_diag2[2 * j + i] = pp.d_diag2[i] * inv_m;
    }
  }
  for (auto& t : ev.terms) t *= inv_m;
  for (double t : ev.terms) ev.e_penalty += t;
  return ev;
}

PenaltyEvaluation penalty_loss(const MlpParams& model, const Mesh& mesh, const PenaltyConfig& cfg,
                               double rate, const AdaptiveWeights* weights) {
  if (mesh.empty()) throw InputError("penalty mesh is empty");
  if (model.input_dim() != 2) throw ConsistencyError("penalty needs a two-input network");
  std::vector<DerivativeBundle> derivs;
  derivs.reserve(mesh.size());
  ForwardTape tape;
  for (const auto& p : mesh) {
    const double x[2] = {p.moneyness, p.tau};
    forward_into(model, x, DerivativeMode::Diagonal, tape);
    DerivativeBundle b;
    b.value = tape.value();
    b.grad.assign(tape.gradient().begin(), tape.gradient().end());
    b.diag2.assign(tape.diag2().begin(), tape.diag2().end());
    derivs.push_back(std::move(b));
  }
  return penalty_from_derivatives(derivs, mesh, cfg, rate, weights);
}

LossReport total_cost(const MlpParams& model, const QuoteGrid& data, const Mesh& mesh,
                      const PenaltyConfig& cfg, double rate, const AdaptiveWeights* weights) {
  if (data.points.empty()) throw InputError("total_cost: empty dataset");
  LossReport report;
  ForwardTape tape;
  double acc = 0.0;
  for (const auto& q : data.points) {
    const double x[2] = {q.moneyness, q.tau};
    forward_into(model, x, DerivativeMode::None, tape);
    const double e = q.premium - tape.value();
    acc += q.weight * e * e;
  }
  report.e_mse = acc / static_cast<double>(data.points.size());
  if (!mesh.empty()) {
    const PenaltyEvaluation ev = penalty_loss(model, mesh, cfg, rate, weights);
    report.e_penalty = ev.e_penalty;
    report.terms = ev.terms;
    report.violations = ev.violations;
  }
  report.total = report.e_mse + report.e_penalty;
  return report;
}

AdaptiveWeights self_adaptive_update(const AdaptiveWeights& weights,
                                     std::span<const std::array<double, kTermCount>> signed_values,
                                     const PenaltyConfig& cfg, double eta) {
  if (!(eta >= 0.0)) throw ConfigError("self-adaptive learning rate must be non-negative");
  if (signed_values.size() != weights.size())
    throw ConsistencyError("violation count does not match the adaptive weights");
  AdaptiveWeights out = weights;
  for (std::size_t t = 0; t < kTermCount; ++t) {
    if (t == static_cast<std::size_t>(Term::Lower) && !cfg.lower_bound) continue;
    for (std::size_t j = 0; j < weights.size(); ++j) {
      const double v = signed_values[j][t];
      if (v > 0.0) {
        const double m = weights.m[t][j];
        out.m[t][j] = m + eta * (2.0 * m) * intensify(v, cfg.g);
      }
    }
  }
  return out;
}

}  // namespace arbfree
