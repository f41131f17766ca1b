#include "arbfree/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <thread>

#include "arbfree/errors.hpp"

namespace arbfree {

std::string mode_name(ModelMode mode) { return mode == ModelMode::Dcnn ? "dcnn" : "mlp"; }

ModelMode parse_mode(const std::string& name) {
  if (name == "mlp") return ModelMode::Mlp;
  if (name == "dcnn") return ModelMode::Dcnn;
  throw ConfigError("unknown mode '" + name + "' (expected mlp or dcnn)");
}

PenaltyConfig penalty_for_mode(ModelMode mode, const PenaltyConfig& dcnn) {
  if (mode == ModelMode::Dcnn) return dcnn;
  PenaltyConfig p = dcnn;
  p.m_k = p.m_kk = p.m_tau = 0.0;
  p.self_adaptive = false;
  return p;
}

std::string Condition::tag() const {
  char buf[64];
  std::snprintf(buf, sizeof buf, "nu%g_rho%g", nu, rho);
  return buf;
}

std::vector<Condition> benchmark_conditions() {
  return {{0.0, 0.0},  {0.2, 0.0},  {0.4, 0.0}, {0.6, 0.0}, {0.8, 0.0},
          {0.6, -0.8}, {0.6, -0.4}, {0.6, 0.4}, {0.6, 0.8}};
}

MetricsRow eval_metrics(const PremiumSurface& model, const QuoteGrid& truth, const Mesh& mesh,
                        const PenaltyConfig& cfg, double rate) {
  if (truth.points.empty()) throw InputError("evaluation set is empty");
  MetricsRow row;
  double sq = 0.0;
  double sq_sigma = 0.0;
  std::size_t valid = 0;
  for (const auto& q : truth.points) {
    const double pred = model.value(q.moneyness, q.tau);
    const double e = q.premium - pred;
    sq += e * e;
    if (!q.has_sigma()) continue;
    ++row.sigma_points;
    const IvResult iv = implied_vol_black(pred, 1.0, q.moneyness, rate, q.tau);
    if (iv.status != IvResult::Status::Ok) {
      ++row.invalid_iv;
      continue;
    }
    const double d = q.sigma - iv.sigma;
    sq_sigma += d * d;
    ++valid;
  }
  row.e_mse = sq / static_cast<double>(truth.points.size());
  row.e_mse_sigma = valid > 0 ? sq_sigma / static_cast<double>(valid) : 0.0;

  if (!mesh.empty()) {
    std::vector<DerivativeBundle> derivs;
    derivs.reserve(mesh.size());
    for (const auto& p : mesh) derivs.push_back(model.derivatives(p.moneyness, p.tau));
    row.e_penalty = penalty_from_derivatives(derivs, mesh, cfg, rate).e_penalty;
  }
  return row;
}

std::size_t RiskProfile::violations() const {
  std::size_t n = 0;
  for (const auto& s : slices) {
    n += std::count(s.delta_violation.begin(), s.delta_violation.end(), true);
    n += std::count(s.gamma_violation.begin(), s.gamma_violation.end(), true);
    n += std::count(s.theta_violation.begin(), s.theta_violation.end(), true);
    n += std::count(s.lower_violation.begin(), s.lower_violation.end(), true);
  }
  return n;
}

std::vector<double> default_profile_slices() { return {0.5, 1.0, 2.0, 3.0, 5.0}; }

RiskProfile risk_profiles(const PremiumSurface& model, std::span<const double> tau_slices,
                          std::span<const double> moneyness, double rate) {
  if (tau_slices.empty() || moneyness.empty()) throw InputError("risk profile needs slices and a moneyness grid");
  RiskProfile out;
  for (double tau : tau_slices) {
    if (!(tau >= 0.0) || !std::isfinite(tau)) throw InputError("profile slice outside the domain");
    ProfileSlice s;
    s.tau = tau;
    const double floor = -std::exp(-rate * tau);
    for (double m : moneyness) {
      if (!(m >= 0.0) || !std::isfinite(m)) throw InputError("profile moneyness outside the domain");
      const DerivativeBundle b = model.derivatives(m, tau);
      s.moneyness.push_back(m);
      s.d_m.push_back(b.grad[0]);
      s.d_mm.push_back(b.diag2[0]);
      s.d_tau.push_back(b.grad[1]);
      s.delta_violation.push_back(b.grad[0] > 0.0);
      s.gamma_violation.push_back(b.diag2[0] < 0.0);
      s.theta_violation.push_back(b.grad[1] < 0.0);
      s.lower_violation.push_back(b.grad[0] < floor);
    }
    out.slices.push_back(std::move(s));
  }
  return out;
}

std::string profile_to_csv(const RiskProfile& profile) {
  std::string out =
      "tau,moneyness,d_m,d_mm,d_tau,delta_violation,gamma_violation,theta_violation,lower_violation\n";
  for (const auto& s : profile.slices) {
    for (std::size_t i = 0; i < s.moneyness.size(); ++i) {
      out += format_real(s.tau) + ',' + format_real(s.moneyness[i]) + ',' + format_real(s.d_m[i]) + ',' +
             format_real(s.d_mm[i]) + ',' + format_real(s.d_tau[i]) + ',' +
             (s.delta_violation[i] ? '1' : '0') + ',' + (s.gamma_violation[i] ? '1' : '0') + ',' +
             (s.theta_violation[i] ? '1' : '0') + ',' + (s.lower_violation[i] ? '1' : '0') + '\n';
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Matrix

std::size_t MatrixResult::failures() const {
  return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const MatrixRow& r) { return !r.ok; }));
}

namespace {

struct ConditionData {
  SabrParams sabr;
  QuoteGrid in_sample;
  QuoteGrid out_sample;
  Mesh out_mesh;
};

void run_cell(const MatrixConfig& cfg, const ConditionData& data, const Mesh& mesh, MatrixRow& row) {
  try {
    TrainConfig tc = cfg.train;
    tc.seed = row.seed;
    tc.penalty = penalty_for_mode(row.mode, cfg.train.penalty);
    const TrainReport rep = train(data.in_sample, mesh, tc, data.sabr.rate);
    const MlpSurface surface(rep.params);
    // Both modes are scored against the same fixed-magnitude penalty.
    PenaltyConfig score = PenaltyConfig::baseline();
    score.lower_bound = cfg.train.penalty.lower_bound;
    row.in = eval_metrics(surface, data.in_sample, mesh, score, data.sabr.rate);
    row.out = eval_metrics(surface, data.out_sample, data.out_mesh, score, data.sabr.rate);
    for (MetricsRow* m : {&row.in, &row.out}) {
      m->condition = row.condition.tag();
      m->model = mode_name(row.mode);
      m->seed = row.seed;
    }
    row.in.sample = "in";
    row.out.sample = "out";
    row.ok = true;
  } catch (const std::exception& e) {
    row.ok = false;
    row.error = e.what();
  }
}

}  // namespace

MatrixResult run_matrix(const MatrixConfig& cfg) {
  if (cfg.conditions.empty() || cfg.seeds.empty() || cfg.modes.empty())
    throw ConfigError("matrix needs at least one condition, seed and mode");
  cfg.grid.validate();
  cfg.train.validate();

  const Mesh mesh = penalty_mesh(cfg.grid);
  std::vector<ConditionData> data;
  for (const auto& c : cfg.conditions) {
    ConditionData d;
    d.sabr = cfg.sabr;
    d.sabr.nu = c.nu;
    d.sabr.rho = c.rho;
    d.sabr.validate();
    d.in_sample = synth_in_sample(d.sabr, cfg.grid);
    d.out_sample = synth_out_sample(d.sabr, cfg.grid);
    d.out_mesh = mesh_from_grid(d.out_sample);
    data.push_back(std::move(d));
  }

  MatrixResult result;
  std::vector<std::size_t> cond_of;
  for (std::size_t c = 0; c < cfg.conditions.size(); ++c) {
    for (auto seed : cfg.seeds) {
      for (auto mode : cfg.modes) {
        MatrixRow row;
        row.condition = cfg.conditions[c];
        row.seed = seed;
        row.mode = mode;
        result.rows.push_back(row);
        cond_of.push_back(c);
      }
    }
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < result.rows.size(); i = next++)
      run_cell(cfg, data[cond_of[i]], mesh, result.rows[i]);
  };
  const std::size_t jobs = std::clamp<std::size_t>(cfg.jobs, 1, result.rows.size());
  std::vector<std::thread> pool;
  for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return result;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + '"';
}

}  // namespace

std::string matrix_to_csv(const MatrixResult& result) {
  std::string out =
      "condition,nu,rho,model,seed,status,in_e_mse,in_e_penalty,out_e_mse,out_e_penalty,"
      "out_e_mse_sigma,out_sigma_points,out_invalid_iv,error\n";
  for (const auto& r : result.rows) {
    out += r.condition.tag() + ',' + format_real(r.condition.nu) + ',' + format_real(r.condition.rho) +
           ',' + mode_name(r.mode) + ',' + std::to_string(r.seed) + ',' + (r.ok ? "ok" : "failed") + ',';
    if (r.ok) {
      out += format_real(r.in.e_mse) + ',' + format_real(r.in.e_penalty) + ',' + format_real(r.out.e_mse) +
             ',' + format_real(r.out.e_penalty) + ',' + format_real(r.out.e_mse_sigma) + ',' +
             std::to_string(r.out.sigma_points) + ',' + std::to_string(r.out.invalid_iv) + ",\n";
    } else {
      out += ",,,,,,," + csv_field(r.error) + '\n';
    }
  }
  return out;
}

Aggregate aggregate(std::vector<double> values) {
  Aggregate a;
  a.count = values.size();
  if (values.empty()) return a;
  double sum = 0.0;
  for (double v : values) sum += v;
  a.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - a.mean) * (v - a.mean);
    a.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  a.median = n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  return a;
}

std::vector<SummaryRow> summarize(const MatrixResult& result) {
  std::vector<SummaryRow> out;
  std::vector<std::array<std::vector<double>, 5>> samples;
  for (const auto& r : result.rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const SummaryRow& s) {
      return s.condition == r.condition && s.mode == r.mode;
    });
    std::size_t idx;
    if (it == out.end()) {
      SummaryRow s;
      s.condition = r.condition;
      s.mode = r.mode;
      out.push_back(s);
      samples.emplace_back();
      idx = out.size() - 1;
    } else {
      idx = static_cast<std::size_t>(it - out.begin());
    }
    if (!r.ok) continue;
    auto& v = samples[idx];
    v[0].push_back(r.in.e_mse);
    v[1].push_back(r.in.e_penalty);
    v[2].push_back(r.out.e_mse);
    v[3].push_back(r.out.e_penalty);
    v[4].push_back(r.out.e_mse_sigma);
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].in_e_mse = aggregate(samples[i][0]);
    out[i].in_e_penalty = aggregate(samples[i][1]);
    out[i].out_e_mse = aggregate(samples[i][2]);
    out[i].out_e_penalty = aggregate(samples[i][3]);
    out[i].out_e_mse_sigma = aggregate(samples[i][4]);
  }
  return out;
}

std::string summary_to_csv(const std::vector<SummaryRow>& summary) {
  std::string out = "condition,nu,rho,model,runs";
  for (const char* m : {"in_e_mse", "in_e_penalty", "out_e_mse", "out_e_penalty", "out_e_mse_sigma"})
    for (const char* s : {"_mean", "_std", "_median"}) out += std::string(",") + m + s;
  out += '\n';
  for (const auto& s : summary) {
    out += s.condition.tag() + ',' + format_real(s.condition.nu) + ',' + format_real(s.condition.rho) + ',' +
           mode_name(s.mode) + ',' + std::to_string(s.in_e_mse.count);
    for (const Aggregate* a : {&s.in_e_mse, &s.in_e_penalty, &s.out_e_mse, &s.out_e_penalty, &s.out_e_mse_sigma})
      out += ',' + format_real(a->mean) + ',' + format_real(a->std) + ',' + format_real(a->median);
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Bench

BenchResult bench(const BenchConfig& cfg) {
  if (cfg.hidden_layers.empty() || cfg.widths.empty() || cfg.activations.empty())
    throw ConfigError("bench sweep lists must be non-empty");
  if (cfg.repeats == 0) throw ConfigError("bench needs at least one repeat");
  const QuoteGrid data = synth_in_sample(cfg.sabr, cfg.grid);
  const Mesh mesh = penalty_mesh(cfg.grid);

  BenchResult result;
  for (const auto& act : cfg.activations) {
    for (std::size_t layers : cfg.hidden_layers) {
      for (std::size_t width : cfg.widths) {
        if (layers == 0 || width == 0) throw ConfigError("bench layers and widths must be positive");
        TrainConfig tc = cfg.train;
        tc.activation = act;
        tc.architecture.assign(1, 2);
        tc.architecture.insert(tc.architecture.end(), layers, width);
        tc.architecture.push_back(1);
        BenchSummaryRow summary;
        summary.activation = activation_name(act);
        summary.hidden_layers = layers;
        summary.width = width;
        std::vector<double> times[2];
        for (std::size_t rep = 0; rep < cfg.repeats; ++rep) {
          for (ModelMode mode : {ModelMode::Mlp, ModelMode::Dcnn}) {
            tc.seed = rep;
            tc.penalty = penalty_for_mode(mode, cfg.train.penalty);
            const TrainReport r = train(data, mesh, tc, cfg.sabr.rate);
            summary.params = r.params.parameter_count();
            result.rows.push_back({summary.activation, layers, width, summary.params, mode, rep, r.seconds});
            times[mode == ModelMode::Dcnn].push_back(r.seconds);
          }
        }
        summary.mlp = aggregate(times[0]);
        summary.dcnn = aggregate(times[1]);
        summary.ratio = summary.mlp.mean > 0.0 ? summary.dcnn.mean / summary.mlp.mean : 0.0;
        result.summary.push_back(summary);
      }
    }
  }
  return result;
}

std::string bench_to_csv(const BenchResult& result) {
  std::string out = "activation,hidden_layers,width,params,mode,repeat,seconds\n";
  for (const auto& r : result.rows)
    out += r.activation + ',' + std::to_string(r.hidden_layers) + ',' + std::to_string(r.width) + ',' +
           std::to_string(r.params) + ',' + mode_name(r.mode) + ',' + std::to_string(r.repeat) + ',' +
           format_real(r.seconds) + '\n';
  return out;
}

std::string bench_summary_to_csv(const BenchResult& result) {
  std::string out =
      "activation,hidden_layers,width,params,mlp_mean,mlp_std,dcnn_mean,dcnn_std,dcnn_mlp_ratio\n";
  for (const auto& s : result.summary)
    out += s.activation + ',' + std::to_string(s.hidden_layers) + ',' + std::to_string(s.width) + ',' +
           std::to_string(s.params) + ',' + format_real(s.mlp.mean) + ',' + format_real(s.mlp.std) + ',' +
           format_real(s.dcnn.mean) + ',' + format_real(s.dcnn.std) + ',' + format_real(s.ratio) + '\n';
  return out;
}

}  // namespace arbfree
