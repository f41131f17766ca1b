#include "arbfree/training.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "arbfree/errors.hpp"

namespace arbfree {

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("epochs must be at least 1");
  if (!(adam.learning_rate > 0.0) || !std::isfinite(adam.learning_rate))
    throw ConfigError("learning rate must be positive");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0))
    throw ConfigError("Adam betas must lie in [0, 1)");
  if (!(adam.epsilon > 0.0)) throw ConfigError("Adam epsilon must be positive");
  if (history_stride == 0) throw ConfigError("history stride must be at least 1");
  if (architecture.size() < 3) throw ConfigError("architecture needs at least one hidden layer");
  if (architecture.front() != 2) throw ConfigError("surface networks take two inputs (moneyness, tau)");
  if (architecture.back() != 1) throw ConfigError("network output must be scalar");
  for (std::size_t d : architecture)
    if (d == 0) throw ConfigError("layer sizes must be positive");
  penalty.validate();
}

AdamState AdamState::zeros_like(const MlpParams& params) {
  return {ParamGradients::zeros_like(params), ParamGradients::zeros_like(params), 0};
}

namespace {

void check_shapes(const MlpParams& params, const ParamGradients& g, const char* what) {
  if (g.weights.size() != params.layers.size() || g.bias.size() != params.layers.size())
    throw ConsistencyError(std::string("Adam: ") + what + " layer count mismatch");
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    if (g.weights[l].size() != params.layers[l].weights.size() ||
        g.bias[l].size() != params.layers[l].bias.size())
      throw ConsistencyError(std::string("Adam: ") + what + " shape mismatch");
  }
}

void adam_update(std::vector<double>& theta, std::vector<double>& m, std::vector<double>& v,
                 const std::vector<double>& g, const AdamOptions& opt, double c1, double c2) {
  for (std::size_t i = 0; i < theta.size(); ++i) {
    m[i] = opt.beta1 * m[i] + (1.0 - opt.beta1) * g[i];
    v[i] = opt.beta2 * v[i] + (1.0 - opt.beta2) * g[i] * g[i];
    const double m_hat = m[i] / c1;
    const double v_hat = v[i] / c2;
    theta[i] -= opt.learning_rate * m_hat / (std::sqrt(v_hat) + opt.epsilon);
  }
}

}  // namespace

void adam_step(MlpParams& params, AdamState& state, const ParamGradients& grads,
               const AdamOptions& opt) {
  check_shapes(params, grads, "gradient");
  check_shapes(params, state.m, "first moment");
  check_shapes(params, state.v, "second moment");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(opt.beta1, t);
  const double c2 = 1.0 - std::pow(opt.beta2, t);
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    adam_update(params.layers[l].weights, state.m.weights[l], state.v.weights[l], grads.weights[l],
                opt, c1, c2);
    adam_update(params.layers[l].bias, state.m.bias[l], state.v.bias[l], grads.bias[l], opt, c1, c2);
  }
}

namespace {

struct EpochResult {
  double e_mse = 0.0;
  double e_penalty = 0.0;  // training penalty
  double monitored = 0.0;  // baseline penalty (only when requested)
  std::vector<std::array<double, kTermCount>> signed_values;
};

class Trainer {
 public:
  Trainer(const QuoteGrid& data, const Mesh& mesh, const TrainConfig& cfg, double rate)
      : data_(data), mesh_(mesh), cfg_(cfg), rate_(rate) {
    monitor_ = PenaltyConfig::baseline();
    monitor_.lower_bound = cfg.penalty.lower_bound;
    use_mesh_ = cfg.penalty.active() || cfg.force_penalty_path;
    // With fixed baseline magnitudes the training penalty is the monitored one.
    monitor_is_training_ = !cfg.penalty.self_adaptive && cfg.penalty.m_k == monitor_.m_k &&
                           cfg.penalty.m_kk == monitor_.m_kk && cfg.penalty.m_tau == monitor_.m_tau &&
                           cfg.penalty.g == monitor_.g;
    if (cfg.penalty.self_adaptive) weights_ = AdaptiveWeights::uniform(cfg.penalty, mesh.size());
  }

  EpochResult epoch(const MlpParams& params, ParamGradients& grads, bool want_monitor) {
    EpochResult r;
    grads.set_zero();
    const double n = static_cast<double>(data_.points.size());
    for (const auto& q : data_.points) {
      const double x[2] = {q.moneyness, q.tau};
      forward_into(params, x, DerivativeMode::None, tape_);
      const double e = q.premium - tape_.value();
      r.e_mse += q.weight * e * e;
      accumulate_gradients(params, tape_, -2.0 * q.weight * e / n, {}, {}, grads, ws_);
    }
    r.e_mse /= n;

    if (use_mesh_) {
      const double inv_m = 1.0 / static_cast<double>(mesh_.size());
      const AdaptiveWeights* w = weights_ ? &*weights_ : nullptr;
      if (w) r.signed_values.resize(mesh_.size());
      // per-term sums, scaled, then totalled: same rounding as penalty_loss
      std::array<double, kTermCount> terms{}, monitored{};
      for (std::size_t j = 0; j < mesh_.size(); ++j) {
        const double x[2] = {mesh_[j].moneyness, mesh_[j].tau};
        forward_into(params, x, DerivativeMode::Diagonal, tape_);
        const auto grad = tape_.gradient();
        const auto diag2 = tape_.diag2();
        if (!std::isfinite(grad[0]) || !std::isfinite(grad[1]) || !std::isfinite(diag2[0])) {
          r.e_penalty = std::numeric_limits<double>::quiet_NaN();
          return r;
        }
        const PointPenalty pp = point_penalty(grad, diag2, mesh_[j].tau, rate_,
                                              effective_magnitudes(cfg_.penalty, w, j), cfg_.penalty);
        for (std::size_t t = 0; t < kTermCount; ++t) terms[t] += pp.values[t];
        if (w) r.signed_values[j] = pp.signed_values;
        if (want_monitor && !monitor_is_training_) {
          const PointPenalty mp = point_penalty(grad, diag2, mesh_[j].tau, rate_,
                                                effective_magnitudes(monitor_, nullptr, j), monitor_);
          for (std::size_t t = 0; t < kTermCount; ++t) monitored[t] += mp.values[t];
        }
        const double dg[2] = {pp.d_grad[0] * inv_m, pp.d_grad[1] * inv_m};
        const double ds[2] = {pp.d_diag2[0] * inv_m, pp.d_diag2[1] * inv_m};
        accumulate_gradients(params, tape_, 0.0, dg, ds, grads, ws_);
      }
      for (double t : terms) r.e_penalty += t * inv_m;
      double mon = 0.0;
      for (double t : monitored) mon += t * inv_m;
      r.monitored = monitor_is_training_ ? r.e_penalty : mon;
    } else if (want_monitor) {
      r.monitored = penalty_loss(params, mesh_, monitor_, rate_).e_penalty;
    }
    return r;
  }

  void update_weights(const EpochResult& r) {
    if (!weights_) return;
    *weights_ = self_adaptive_update(*weights_, r.signed_values, cfg_.penalty, cfg_.penalty.eta_m);
  }

  const AdaptiveWeights* weights() const { return weights_ ? &*weights_ : nullptr; }
  std::optional<AdaptiveWeights> take_weights() { return std::move(weights_); }

 private:
  const QuoteGrid& data_;
  const Mesh& mesh_;
  const TrainConfig& cfg_;
  double rate_;
  PenaltyConfig monitor_;
  bool use_mesh_ = false;
  bool monitor_is_training_ = false;
  std::optional<AdaptiveWeights> weights_;
  ForwardTape tape_;
  BackwardWorkspace ws_;
};

[[noreturn]] void diverged(std::size_t epoch, double e_mse, double e_penalty) {
  std::ostringstream msg;
  msg << "training diverged at epoch " << epoch << " (e_mse=" << e_mse << ", e_penalty=" << e_penalty
      << "); try a smaller learning rate";
  throw TrainingError(msg.str(), epoch, e_mse, e_penalty);
}

}  // namespace

TrainReport train(const QuoteGrid& data, const Mesh& mesh, const TrainConfig& cfg, double rate,
                  const EpochObserver& observer) {
  cfg.validate();
  if (data.points.empty()) throw InputError("training data is empty");
  if (mesh.empty()) throw InputError("penalty mesh is empty");

  const auto start = std::chrono::steady_clock::now();
  TrainReport report;
  report.params = init_params(cfg.architecture, cfg.activation, cfg.seed);
  MlpParams& params = report.params;
  AdamState adam = AdamState::zeros_like(params);
  ParamGradients grads = ParamGradients::zeros_like(params);
  Trainer trainer(data, mesh, cfg, rate);
  report.history.reserve((cfg.epochs + cfg.history_stride - 1) / cfg.history_stride);

  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    const bool sample = e % cfg.history_stride == 0;
    const EpochResult r = trainer.epoch(params, grads, sample);
    if (!std::isfinite(r.e_mse) || !std::isfinite(r.e_penalty)) diverged(e, r.e_mse, r.e_penalty);
    if (sample) report.history.push_back({e, r.e_mse, r.monitored, r.e_mse + r.e_penalty});
    adam_step(params, adam, grads, cfg.adam);
    trainer.update_weights(r);
    if (observer) observer(e, params, trainer.weights());
  }

  report.final_report = total_cost(params, data, mesh, cfg.penalty, rate, trainer.weights());
  if (!std::isfinite(report.final_report.total))
    diverged(cfg.epochs, report.final_report.e_mse, report.final_report.e_penalty);
  report.adaptive_weights = trainer.take_weights();
  report.epochs = cfg.epochs;
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::string history_to_csv(const std::vector<HistoryEntry>& history) {
  std::string out = "epoch,e_mse,e_penalty\n";
  for (const auto& h : history)
    out += std::to_string(h.epoch) + ',' + format_real(h.e_mse) + ',' + format_real(h.e_penalty) + '\n';
  return out;
}

}  // namespace arbfree
