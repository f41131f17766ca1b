#include "arbfree/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "arbfree/errors.hpp"

namespace arbfree {

using nlohmann::json;

void ExperimentConfig::validate() const {
  sabr.validate();
  grid.validate();
  penalty.validate();
  train_config().validate();
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
  if (seeds.empty()) throw ConfigError("seeds must not be empty");
  if (matrix.conditions.empty()) throw ConfigError("matrix.conditions must not be empty");
  for (const auto& c : matrix.conditions) {
    SabrParams p = sabr;
    p.nu = c.nu;
    p.rho = c.rho;
    p.validate();
  }
  if (matrix.jobs == 0) throw ConfigError("matrix.jobs must be at least 1");
  if (bench.hidden_layers.empty() || bench.widths.empty() || bench.activations.empty())
    throw ConfigError("bench sweep lists must not be empty");
  for (auto v : bench.hidden_layers)
    if (v == 0) throw ConfigError("bench.hidden_layers entries must be positive");
  for (auto v : bench.widths)
    if (v == 0) throw ConfigError("bench.widths entries must be positive");
  for (const auto& a : bench.activations) parse_activation(a);
  if (bench.repeats == 0) throw ConfigError("bench.repeats must be at least 1");
  if (bench.epochs == 0) throw ConfigError("bench.epochs must be at least 1");
}

TrainConfig ExperimentConfig::train_config() const {
  TrainConfig t = train;
  t.penalty = penalty;
  return t;
}

MatrixConfig ExperimentConfig::matrix_config() const {
  MatrixConfig m;
  m.sabr = sabr;
  m.grid = grid;
  m.train = train_config();
  m.conditions = matrix.conditions;
  m.seeds = seeds;
  m.jobs = matrix.jobs;
  return m;
}

BenchConfig ExperimentConfig::bench_config() const {
  BenchConfig b;
  b.sabr = sabr;
  b.grid = grid;
  b.train = train_config();
  b.train.epochs = bench.epochs;
  b.hidden_layers = bench.hidden_layers;
  b.widths = bench.widths;
  b.activations.clear();
  for (const auto& a : bench.activations) b.activations.push_back(parse_activation(a));
  b.repeats = bench.repeats;
  return b;
}

namespace {

/// Reads known keys of one JSON object and rejects the rest.
class Section {
 public:
  Section(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError("'" + name() + "' must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError("config key '" + qualify(key) + "' has the wrong type");
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  std::string qualify(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError("unknown config key '" + qualify(it.key()) + "'");
  }

 private:
  std::string name() const { return path_.empty() ? "<root>" : path_; }

  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_sabr(const json& j, SabrParams& p) {
  Section s(j, "sabr");
  s.get("alpha", p.alpha);
  s.get("beta", p.beta);
  s.get("rho", p.rho);
  s.get("nu", p.nu);
  s.get("f", p.forward);
  s.get("r", p.rate);
  s.get("q", p.dividend);
  s.finish();
}

void read_grid(const json& j, GridSpec& g) {
  Section s(j, "grid");
  s.get("moneyness", g.moneyness);
  s.get("tau", g.tau);
  s.get("boundary_tau0", g.boundary_tau0);
  s.get("boundary_k0", g.boundary_k0);
  s.get("moneyness_max", g.moneyness_max);
  s.get("tau_max", g.tau_max);
  s.get("mesh_moneyness", g.mesh_moneyness);
  s.get("mesh_tau", g.mesh_tau);
  s.get("out_moneyness", g.out_moneyness);
  s.get("out_tau", g.out_tau);
  s.finish();
}

void read_penalty(const json& j, PenaltyConfig& p) {
  Section s(j, "penalty");
  s.get("m_k", p.m_k);
  s.get("m_kk", p.m_kk);
  s.get("m_tau", p.m_tau);
  std::string g = intensifier_name(p.g);
  s.get("g", g);
  p.g = parse_intensifier(g);
  s.get("lower_bound", p.lower_bound);
  s.get("self_adaptive", p.self_adaptive);
  s.get("eta_m", p.eta_m);
  s.finish();
}

void read_train(const json& j, TrainConfig& t) {
  Section s(j, "train");
  s.get("epochs", t.epochs);
  s.get("learning_rate", t.adam.learning_rate);
  s.get("beta1", t.adam.beta1);
  s.get("beta2", t.adam.beta2);
  s.get("epsilon", t.adam.epsilon);
  s.get("seed", t.seed);
  s.get("architecture", t.architecture);
  std::string act = activation_name(t.activation);
  s.get("activation", act);
  Activation a = parse_activation(act);
  a.slope = t.activation.slope;
  a.alpha = t.activation.alpha;
  a.beta = t.activation.beta;
  s.get("relu_slope", a.slope);
  s.get("elu_alpha", a.alpha);
  s.get("elu_beta", a.beta);
  t.activation = a;
  s.get("history_stride", t.history_stride);
  s.finish();
}

void read_matrix(const json& j, MatrixSettings& m) {
  Section s(j, "matrix");
  if (const json* conds = s.child("conditions")) {
    if (!conds->is_array()) throw ConfigError("'matrix.conditions' must be an array");
    m.conditions.clear();
    for (const auto& c : *conds) {
      Condition cond;
      Section cs(c, "matrix.conditions[]");
      cs.get("nu", cond.nu);
      cs.get("rho", cond.rho);
      cs.finish();
      m.conditions.push_back(cond);
    }
  }
  s.get("jobs", m.jobs);
  s.finish();
}

void read_bench(const json& j, BenchSettings& b) {
  Section s(j, "bench");
  s.get("hidden_layers", b.hidden_layers);
  s.get("widths", b.widths);
  s.get("activations", b.activations);
  s.get("repeats", b.repeats);
  s.get("epochs", b.epochs);
  s.finish();
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  Section root(doc, "");
  if (const json* j = root.child("sabr")) read_sabr(*j, cfg.sabr);
  if (const json* j = root.child("grid")) read_grid(*j, cfg.grid);
  if (const json* j = root.child("penalty")) read_penalty(*j, cfg.penalty);
  if (const json* j = root.child("train")) read_train(*j, cfg.train);
  root.get("output_dir", cfg.output_dir);
  root.get("seeds", cfg.seeds);
  if (const json* j = root.child("matrix")) read_matrix(*j, cfg.matrix);
  if (const json* j = root.child("bench")) read_bench(*j, cfg.bench);
  root.finish();
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string dump_config(const ExperimentConfig& cfg) {
  json doc;
  doc["sabr"] = {{"alpha", cfg.sabr.alpha}, {"beta", cfg.sabr.beta}, {"rho", cfg.sabr.rho},
                 {"nu", cfg.sabr.nu},       {"f", cfg.sabr.forward},  {"r", cfg.sabr.rate},
                 {"q", cfg.sabr.dividend}};
  const GridSpec& g = cfg.grid;
  doc["grid"] = {{"moneyness", g.moneyness},         {"tau", g.tau},
                 {"boundary_tau0", g.boundary_tau0}, {"boundary_k0", g.boundary_k0},
                 {"moneyness_max", g.moneyness_max}, {"tau_max", g.tau_max},
                 {"mesh_moneyness", g.mesh_moneyness}, {"mesh_tau", g.mesh_tau},
                 {"out_moneyness", g.out_moneyness}, {"out_tau", g.out_tau}};
  const PenaltyConfig& p = cfg.penalty;
  doc["penalty"] = {{"m_k", p.m_k},
                    {"m_kk", p.m_kk},
                    {"m_tau", p.m_tau},
                    {"g", intensifier_name(p.g)},
                    {"lower_bound", p.lower_bound},
                    {"self_adaptive", p.self_adaptive},
                    {"eta_m", p.eta_m}};
  const TrainConfig& t = cfg.train;
  doc["train"] = {{"epochs", t.epochs},
                  {"learning_rate", t.adam.learning_rate},
                  {"beta1", t.adam.beta1},
                  {"beta2", t.adam.beta2},
                  {"epsilon", t.adam.epsilon},
                  {"seed", t.seed},
                  {"architecture", t.architecture},
                  {"activation", activation_name(t.activation)},
                  {"relu_slope", t.activation.slope},
                  {"elu_alpha", t.activation.alpha},
                  {"elu_beta", t.activation.beta},
                  {"history_stride", t.history_stride}};
  doc["output_dir"] = cfg.output_dir;
  doc["seeds"] = cfg.seeds;
  json conds = json::array();
  for (const auto& c : cfg.matrix.conditions) conds.push_back({{"nu", c.nu}, {"rho", c.rho}});
  doc["matrix"] = {{"conditions", conds}, {"jobs", cfg.matrix.jobs}};
  const BenchSettings& b = cfg.bench;
  doc["bench"] = {{"hidden_layers", b.hidden_layers},
                  {"widths", b.widths},
                  {"activations", b.activations},
                  {"repeats", b.repeats},
                  {"epochs", b.epochs}};
  return doc.dump(2) + "\n";
}

std::string config_reference() {
  return R"(Config keys (JSON; missing keys keep their defaults, unknown keys are errors):
  sabr.alpha             SABR volatility level (0.2)
  sabr.beta              SABR backbone exponent in [0, 1] (1.0)
  sabr.rho               spot-vol correlation in (-1, 1) (0.0)
  sabr.nu                vol of vol, >= 0 (0.0)
  sabr.f                 forward (1.0)
  sabr.r                 risk-free rate (0.04)
  sabr.q                 dividend yield (0.0)
  grid.moneyness         in-sample moneyness axis (25 points on [0.1, 2.5])
  grid.tau               in-sample expiry axis ([0.1, 0.5, 1, 2, 3, 4, 5])
  grid.boundary_tau0     boundary points on the tau = 0 edge (100)
  grid.boundary_k0       boundary points on the K = 0 edge (100)
  grid.moneyness_max     upper moneyness of the domain (2.5)
  grid.tau_max           upper expiry of the domain (5.0)
  grid.mesh_moneyness    penalty mesh points along moneyness (26)
  grid.mesh_tau          penalty mesh points along expiry (11)
  grid.out_moneyness     out-of-sample points along moneyness (126)
  grid.out_tau           out-of-sample points along expiry (101)
  penalty.m_k            delta penalty magnitude (0.001)
  penalty.m_kk           gamma penalty magnitude (0.01)
  penalty.m_tau          theta penalty magnitude (0.001)
  penalty.g              intensifier: identity | square (identity)
  penalty.lower_bound    also penalize dC/dK < -exp(-r tau) (false)
  penalty.self_adaptive  learn per-point penalty weights by ascent (false)
  penalty.eta_m          learning rate of the self-adaptive weights (0.1)
  train.epochs           full-batch epochs (10000)
  train.learning_rate    Adam step size (0.001)
  train.beta1            Adam first-moment decay (0.9)
  train.beta2            Adam second-moment decay (0.999)
  train.epsilon          Adam denominator offset (1e-8)
  train.seed             initialization seed (0)
  train.architecture     layer sizes, input 2 and output 1 ([2, 16, 16, 1])
  train.activation       softplus | sigmoid | tanh | relu | elu (softplus)
  train.relu_slope       negative slope of relu (0.0)
  train.elu_alpha        elu scale (1.0)
  train.elu_beta         elu exponent rate (1.0)
  train.history_stride   epochs between loss-history samples (10)
  output_dir             default output directory ("out")
  seeds                  seeds for matrix runs ([0, 1, 2])
  matrix.conditions      list of {"nu": .., "rho": ..} (the nine benchmark settings)
  matrix.jobs            parallel training runs (1)
  bench.hidden_layers    hidden-layer counts to sweep ([2])
  bench.widths           hidden widths to sweep ([16])
  bench.activations      activation names to sweep (["softplus"])
  bench.repeats          timed repeats per configuration and mode (3)
  bench.epochs           epochs per timed run (1000)
)";
}

}  // namespace arbfree
