#include "arbfree/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "arbfree/errors.hpp"
#include "arbfree/random.hpp"

namespace arbfree {

std::size_t MlpParams::parameter_count() const {
  std::size_t count = 0;
  for (const auto& layer : layers) count += layer.weights.size() + layer.bias.size();
  return count;
}

std::vector<std::size_t> MlpParams::architecture() const {
  std::vector<std::size_t> arch;
  if (layers.empty()) return arch;
  arch.push_back(layers.front().inputs);
  for (const auto& layer : layers) arch.push_back(layer.outputs);
  return arch;
}

void MlpParams::validate() const {
  if (layers.empty()) throw ConfigError("network has no layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    if (layer.inputs == 0 || layer.outputs == 0)
      throw ConfigError("layer " + std::to_string(l + 1) + " has zero width");
    if (layer.weights.size() != layer.inputs * layer.outputs ||
        layer.bias.size() != layer.outputs)
      throw ConfigError("layer " + std::to_string(l + 1) + " storage does not match its shape");
    if (l > 0 && layers[l - 1].outputs != layer.inputs)
      throw ConfigError("layer " + std::to_string(l + 1) + " input size does not match layer " +
                        std::to_string(l));
    auto finite = [](double v) { return std::isfinite(v); };
    if (!std::all_of(layer.weights.begin(), layer.weights.end(), finite) ||
        !std::all_of(layer.bias.begin(), layer.bias.end(), finite))
      throw ConfigError("layer " + std::to_string(l + 1) + " has non-finite parameters");
  }
  if (layers.back().outputs != 1) throw ConfigError("network output must be scalar");
}

ParamGradients ParamGradients::zeros_like(const MlpParams& params) {
  ParamGradients g;
  for (const auto& layer : params.layers) {
    g.weights.emplace_back(layer.weights.size(), 0.0);
    g.bias.emplace_back(layer.bias.size(), 0.0);
  }
  return g;
}

void ParamGradients::set_zero() {
  for (auto& w : weights) std::fill(w.begin(), w.end(), 0.0);
  for (auto& b : bias) std::fill(b.begin(), b.end(), 0.0);
}

MlpParams init_params(std::span<const std::size_t> arch, const Activation& activation,
                      std::uint64_t seed) {
  if (arch.size() < 3) throw ConfigError("architecture needs an input, a hidden and an output layer");
  for (std::size_t l = 0; l < arch.size(); ++l)
    if (arch[l] == 0) throw ConfigError("architecture has a zero-size layer at position " +
                                        std::to_string(l));
  if (arch.back() != 1) throw ConfigError("architecture output size must be 1");

  MlpParams params;
  params.activation = activation;
  params.seed = seed;
  NormalStream normal(seed);
  for (std::size_t l = 1; l < arch.size(); ++l) {
    DenseLayer layer;
    layer.inputs = arch[l - 1];
    layer.outputs = arch[l];
    const double stddev = std::sqrt(2.0 / static_cast<double>(layer.inputs + layer.outputs));
    layer.weights.resize(layer.inputs * layer.outputs);
    for (auto& w : layer.weights) w = stddev * normal.next();
    layer.bias.assign(layer.outputs, 0.0);
    params.layers.push_back(std::move(layer));
  }
  return params;
}

void forward_into(const MlpParams& params, std::span<const double> x, DerivativeMode mode,
                  ForwardTape& tape) {
  const std::size_t n = params.input_dim();
  if (x.size() != n)
    throw InputError("input has " + std::to_string(x.size()) + " coordinates, network expects " +
                     std::to_string(n));
  for (double v : x)
    if (!std::isfinite(v)) throw InputError("non-finite network input");

  const std::size_t L = params.layers.size();
  tape.mode = mode;
  tape.input.assign(x.begin(), x.end());
  tape.layers.resize(L);
  const bool first_order = mode != DerivativeMode::None;
  const std::size_t nn = n * n;

  for (std::size_t l = 0; l < L; ++l) {
    const DenseLayer& layer = params.layers[l];
    LayerTape& t = tape.layers[l];
    const std::size_t d = layer.outputs;
    const std::size_t din = layer.inputs;
    const bool hidden = l + 1 < L;
    const std::span<const double> in =
        l == 0 ? std::span<const double>(tape.input) : std::span<const double>(tape.layers[l - 1].x);

    t.z.resize(d);
    t.x.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
      const double* w = &layer.weights[j * din];
      double acc = layer.bias[j];
      for (std::size_t k = 0; k < din; ++k) acc += w[k] * in[k];
      t.z[j] = acc;
    }
    if (hidden) {
      t.f1.resize(d);
      t.f2.resize(d);
      t.f3.resize(d);
      for (std::size_t j = 0; j < d; ++j) {
        const ActivationJet jet = act_jet(params.activation, t.z[j]);
        t.x[j] = jet.f;
        t.f1[j] = jet.d1;
        t.f2[j] = jet.d2;
        t.f3[j] = jet.d3;
      }
    } else {
      t.x = t.z;
    }
    if (!first_order) continue;

    // First derivatives: P = W^T J_{l-1}, J = f'(z) * P. J_0 is the identity.
    t.P.assign(d * n, 0.0);
    if (l == 0) {
      std::copy(layer.weights.begin(), layer.weights.end(), t.P.begin());
    } else {
      const auto& Jprev = tape.layers[l - 1].J;
      for (std::size_t j = 0; j < d; ++j) {
        const double* w = &layer.weights[j * din];
        double* p = &t.P[j * n];
        for (std::size_t k = 0; k < din; ++k) {
          const double* jp = &Jprev[k * n];
          for (std::size_t i = 0; i < n; ++i) p[i] += w[k] * jp[i];
        }
      }
    }
    t.J.resize(d * n);
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t i = 0; i < n; ++i)
        t.J[j * n + i] = hidden ? t.f1[j] * t.P[j * n + i] : t.P[j * n + i];

    if (mode == DerivativeMode::Diagonal) {
      // Q = W^T S_{l-1}; S = f''(z) * P^2 + f'(z) * Q. S_0 is zero.
      t.Q.assign(d * n, 0.0);
      if (l > 0) {
        const auto& Sprev = tape.layers[l - 1].S;
        for (std::size_t j = 0; j < d; ++j) {
          const double* w = &layer.weights[j * din];
          double* q = &t.Q[j * n];
          for (std::size_t k = 0; k < din; ++k) {
            const double* sp = &Sprev[k * n];
            for (std::size_t i = 0; i < n; ++i) q[i] += w[k] * sp[i];
          }
        }
      }
      t.S.resize(d * n);
      for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
          const std::size_t ji = j * n + i;
          t.S[ji] = hidden ? t.f2[j] * t.P[ji] * t.P[ji] + t.f1[j] * t.Q[ji] : t.Q[ji];
        }
      }
    } else if (mode == DerivativeMode::Full) {
      // HZ_j = sum_k W_jk H_{l-1,k}; H_j = f''(z_j) P_j (x) P_j + f'(z_j) HZ_j.
      t.HZ.assign(d * nn, 0.0);
      if (l > 0) {
        const auto& Hprev = tape.layers[l - 1].H;
        for (std::size_t j = 0; j < d; ++j) {
          const double* w = &layer.weights[j * din];
          double* hz = &t.HZ[j * nn];
          for (std::size_t k = 0; k < din; ++k) {
            const double* hp = &Hprev[k * nn];
            for (std::size_t ab = 0; ab < nn; ++ab) hz[ab] += w[k] * hp[ab];
          }
        }
      }
      t.H.resize(d * nn);
      for (std::size_t j = 0; j < d; ++j) {
        const double* p = &t.P[j * n];
        for (std::size_t a = 0; a < n; ++a) {
          for (std::size_t b = 0; b < n; ++b) {
            const std::size_t idx = j * nn + a * n + b;
            t.H[idx] = hidden ? t.f2[j] * p[a] * p[b] + t.f1[j] * t.HZ[idx] : t.HZ[idx];
          }
        }
      }
    }
  }
}

ForwardTape forward(const MlpParams& params, std::span<const double> x, DerivativeMode mode) {
  ForwardTape tape;
  forward_into(params, x, mode, tape);
  return tape;
}

double evaluate(const MlpParams& params, std::span<const double> x) {
  return forward(params, x, DerivativeMode::None).value();
}

std::vector<double> forward_jacobian(const MlpParams& params, std::span<const double> x) {
  // Diagonal mode computes first derivatives as well; a dedicated first-order
  // mode would only skip the S recursion.
  const ForwardTape tape = forward(params, x, DerivativeMode::Diagonal);
  const auto g = tape.gradient();
  return {g.begin(), g.end()};
}

std::vector<double> forward_second(const MlpParams& params, std::span<const double> x) {
  const ForwardTape tape = forward(params, x, DerivativeMode::Diagonal);
  const auto s = tape.diag2();
  return {s.begin(), s.end()};
}

std::vector<double> forward_hessian(const MlpParams& params, std::span<const double> x) {
  const ForwardTape tape = forward(params, x, DerivativeMode::Full);
  return tape.layers.back().H;
}

DerivativeBundle derivatives(const MlpParams& params, std::span<const double> x,
                             bool full_hessian) {
  DerivativeBundle bundle;
  const ForwardTape tape = forward(params, x, DerivativeMode::Diagonal);
  bundle.value = tape.value();
  bundle.grad.assign(tape.gradient().begin(), tape.gradient().end());
  bundle.diag2.assign(tape.diag2().begin(), tape.diag2().end());
  if (full_hessian) bundle.hessian = forward_hessian(params, x);
  return bundle;
}

void AdjointBatch::validate() const {
  const std::size_t count = d_value.size();
  if (points.size() != count * input_dim)
    throw ConsistencyError("adjoint batch: point storage does not match count");
  if (!d_grad.empty() && d_grad.size() != count * input_dim)
    throw ConsistencyError("adjoint batch: gradient adjoints do not match count");
  if (!d_diag2.empty() && d_diag2.size() != count * input_dim)
    throw ConsistencyError("adjoint batch: second-derivative adjoints do not match count");
}

void accumulate_gradients(const MlpParams& params, const ForwardTape& tape, double d_value,
                          std::span<const double> d_grad, std::span<const double> d_diag2,
                          ParamGradients& grads, BackwardWorkspace& ws) {
  const std::size_t n = params.input_dim();
  const std::size_t L = params.layers.size();
  const bool with_grad = !d_grad.empty();
  const bool with_diag2 = !d_diag2.empty();
  const bool with_derivs = with_grad || with_diag2;
  if (tape.layers.size() != L || grads.weights.size() != L)
    throw ConsistencyError("tape or gradient buffers do not match the network");
  if ((with_grad && d_grad.size() != n) || (with_diag2 && d_diag2.size() != n))
    throw ConsistencyError("derivative adjoints do not match the input dimension");
  if (with_derivs && tape.mode != DerivativeMode::Diagonal)
    throw ConsistencyError("derivative adjoints need a Diagonal-mode tape");

  ws.z_bar.assign(1, d_value);
  if (with_derivs) {
    ws.P_bar.assign(n, 0.0);
    ws.Q_bar.assign(n, 0.0);
    if (with_grad) std::copy(d_grad.begin(), d_grad.end(), ws.P_bar.begin());
    if (with_diag2) std::copy(d_diag2.begin(), d_diag2.end(), ws.Q_bar.begin());
  }

  for (std::size_t l = L; l-- > 0;) {
    const DenseLayer& layer = params.layers[l];
    const std::size_t d = layer.outputs;
    const std::size_t din = layer.inputs;
    const std::span<const double> in =
        l == 0 ? std::span<const double>(tape.input) : std::span<const double>(tape.layers[l - 1].x);
    auto& gw = grads.weights[l];
    auto& gb = grads.bias[l];

    // z = W^T in + b, P = W^T J_{l-1}, Q = W^T S_{l-1}.
    for (std::size_t j = 0; j < d; ++j) {
      const double zb = ws.z_bar[j];
      double* g = &gw[j * din];
      for (std::size_t k = 0; k < din; ++k) g[k] += zb * in[k];
      gb[j] += zb;
    }
    if (with_derivs) {
      if (l == 0) {
        for (std::size_t j = 0; j < d; ++j)
          for (std::size_t k = 0; k < din; ++k) gw[j * din + k] += ws.P_bar[j * n + k];
      } else {
        const auto& Jprev = tape.layers[l - 1].J;
        const auto& Sprev = tape.layers[l - 1].S;
        for (std::size_t j = 0; j < d; ++j) {
          const double* pb = &ws.P_bar[j * n];
          const double* qb = &ws.Q_bar[j * n];
          double* g = &gw[j * din];
          for (std::size_t k = 0; k < din; ++k) {
            const double* jp = &Jprev[k * n];
            const double* sp = &Sprev[k * n];
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) acc += pb[i] * jp[i] + qb[i] * sp[i];
            g[k] += acc;
          }
        }
      }
    }
    if (l == 0) break;

    // Pull bars back to the previous layer's outputs.
    ws.x_bar.assign(din, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
      const double* w = &layer.weights[j * din];
      const double zb = ws.z_bar[j];
      for (std::size_t k = 0; k < din; ++k) ws.x_bar[k] += w[k] * zb;
    }
    if (with_derivs) {
      ws.J_bar.assign(din * n, 0.0);
      ws.S_bar.assign(din * n, 0.0);
      for (std::size_t j = 0; j < d; ++j) {
        const double* w = &layer.weights[j * din];
        const double* pb = &ws.P_bar[j * n];
        const double* qb = &ws.Q_bar[j * n];
        for (std::size_t k = 0; k < din; ++k) {
          double* jb = &ws.J_bar[k * n];
          double* sb = &ws.S_bar[k * n];
          for (std::size_t i = 0; i < n; ++i) {
            jb[i] += w[k] * pb[i];
            sb[i] += w[k] * qb[i];
          }
        }
      }
    }

    // Through the activation of layer l-1:
    //   x = f(z), J = f'(z) P, S = f''(z) P^2 + f'(z) Q.
    const LayerTape& prev = tape.layers[l - 1];
    ws.z_bar.assign(din, 0.0);
    if (with_derivs) {
      ws.P_bar.assign(din * n, 0.0);
      ws.Q_bar.assign(din * n, 0.0);
    }
    for (std::size_t k = 0; k < din; ++k) {
      const double f1 = prev.f1[k];
      double zb = f1 * ws.x_bar[k];
      if (with_derivs) {
        const double f2 = prev.f2[k];
        const double f3 = prev.f3[k];
        for (std::size_t i = 0; i < n; ++i) {
          const std::size_t ki = k * n + i;
          const double p = prev.P[ki];
          const double jb = ws.J_bar[ki];
          const double sb = ws.S_bar[ki];
          zb += f2 * jb * p + f3 * sb * p * p + f2 * sb * prev.Q[ki];
          ws.P_bar[ki] = f1 * jb + 2.0 * f2 * p * sb;
          ws.Q_bar[ki] = f1 * sb;
        }
      }
      ws.z_bar[k] = zb;
    }
  }
}

ParamGradients param_gradients(const MlpParams& params, const AdjointBatch& data,
                               const AdjointBatch& mesh) {
  const std::size_t n = params.input_dim();
  for (const AdjointBatch* batch : {&data, &mesh}) {
    if (batch->size() == 0) continue;
    if (batch->input_dim != n)
      throw ConsistencyError("adjoint batch input dimension does not match the network");
    batch->validate();
  }
  ParamGradients grads = ParamGradients::zeros_like(params);
  ForwardTape tape;
  BackwardWorkspace ws;
  for (const AdjointBatch* batch : {&data, &mesh}) {
    const bool derivs = !batch->d_grad.empty() || !batch->d_diag2.empty();
    for (std::size_t p = 0; p < batch->size(); ++p) {
      const std::span<const double> x(&batch->points[p * n], n);
      forward_into(params, x, derivs ? DerivativeMode::Diagonal : DerivativeMode::None, tape);
      const std::span<const double> dg =
          batch->d_grad.empty() ? std::span<const double>() : std::span<const double>(&batch->d_grad[p * n], n);
      const std::span<const double> ds =
          batch->d_diag2.empty() ? std::span<const double>() : std::span<const double>(&batch->d_diag2[p * n], n);
      accumulate_gradients(params, tape, batch->d_value[p], dg, ds, grads, ws);
    }
  }
  return grads;
}

// ---------------------------------------------------------------------------
// Checkpoints

using nlohmann::json;

std::string checkpoint_to_json(const MlpParams& params) {
  json doc;
  doc["format"] = "arbfree-mlp";
  doc["version"] = 1;
  doc["architecture"] = params.architecture();
  doc["activation"] = {{"name", activation_name(params.activation)},
                       {"slope", params.activation.slope},
                       {"alpha", params.activation.alpha},
                       {"beta", params.activation.beta}};
  doc["seed"] = params.seed;
  json layers = json::array();
  for (const auto& layer : params.layers) {
    layers.push_back({{"inputs", layer.inputs},
                      {"outputs", layer.outputs},
                      {"weights", layer.weights},
                      {"bias", layer.bias}});
  }
  doc["layers"] = std::move(layers);
  return doc.dump(1);
}

MlpParams checkpoint_from_json(const std::string& text) {
  MlpParams params;
  try {
    const json doc = json::parse(text);
    if (doc.at("format").get<std::string>() != "arbfree-mlp")
      throw InputError("not an arbfree checkpoint");
    const auto& act = doc.at("activation");
    params.activation = parse_activation(act.at("name").get<std::string>());
    params.activation.slope = act.at("slope").get<double>();
    params.activation.alpha = act.at("alpha").get<double>();
    params.activation.beta = act.at("beta").get<double>();
    params.seed = doc.at("seed").get<std::uint64_t>();
    for (const auto& l : doc.at("layers")) {
      DenseLayer layer;
      layer.inputs = l.at("inputs").get<std::size_t>();
      layer.outputs = l.at("outputs").get<std::size_t>();
      layer.weights = l.at("weights").get<std::vector<double>>();
      layer.bias = l.at("bias").get<std::vector<double>>();
      params.layers.push_back(std::move(layer));
    }
    if (doc.at("architecture").get<std::vector<std::size_t>>() != params.architecture())
      throw InputError("checkpoint architecture does not match its layers");
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed checkpoint: ") + e.what());
  }
  params.validate();
  return params;
}

void save_checkpoint(const MlpParams& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint '" + path + "'");
  out << checkpoint_to_json(params) << '\n';
  if (!out) throw IoError("failed writing checkpoint '" + path + "'");
}

MlpParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return checkpoint_from_json(buf.str());
}

}  // namespace arbfree
