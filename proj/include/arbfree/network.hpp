#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "arbfree/activations.hpp"

namespace arbfree {

/// One affine map z = W^T x + b.
///
/// `weights` stores W^T row-major: weights[j * inputs + k] is the coefficient
/// of input k in output neuron j.
struct DenseLayer {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  double weight(std::size_t out, std::size_t in) const { return weights[out * inputs + in]; }
  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Trainable state of a scalar-output multilayer perceptron.
///
/// Hidden layers apply `activation` component-wise; the last layer is affine.
struct MlpParams {
  std::vector<DenseLayer> layers;
  Activation activation;
  std::uint64_t seed = 0;

  std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().inputs; }
  std::size_t parameter_count() const;
  /// Layer sizes d_0, ..., d_L.
  std::vector<std::size_t> architecture() const;
  /// Throws ConfigError unless dimensions chain, the output is scalar and entries are finite.
  void validate() const;

  friend bool operator==(const MlpParams&, const MlpParams&) = default;
};

/// Same layout as MlpParams, holding dE/dW and dE/db.
struct ParamGradients {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> bias;

  static ParamGradients zeros_like(const MlpParams& params);
  void set_zero();
};

/// Draws weights i.i.d. N(0, 2 / (d_{l-1} + d_l)) and zero biases; deterministic in `seed`.
/// `arch` is d_0, ..., d_L with at least one hidden layer and d_L = 1.
MlpParams init_params(std::span<const std::size_t> arch, const Activation& activation,
                      std::uint64_t seed);

/// Which input-derivatives the forward pass carries.
enum class DerivativeMode { None, Diagonal, Full };

/// Per-layer intermediate values of one forward pass.
///
/// P = dz/dx and J = dx_l/dx are d_l x n; Q and S hold the diagonal second
/// derivatives of z and x_l (d_l x n). In Full mode HZ and H hold the
/// d_l x n x n Hessians of z and x_l instead.
struct LayerTape {
  std::vector<double> z;
  std::vector<double> x;
  std::vector<double> f1;
  std::vector<double> f2;
  std::vector<double> f3;
  std::vector<double> P;
  std::vector<double> J;
  std::vector<double> Q;
  std::vector<double> S;
  std::vector<double> HZ;
  std::vector<double> H;
};

struct ForwardTape {
  DerivativeMode mode = DerivativeMode::None;
  std::vector<double> input;
  std::vector<LayerTape> layers;

  double value() const { return layers.back().x.front(); }
  /// dPhi/dx, valid for Diagonal and Full modes.
  std::span<const double> gradient() const { return layers.back().P; }
  /// Diagonal of the Hessian, valid for Diagonal mode.
  std::span<const double> diag2() const { return layers.back().Q; }
};

/// Value, gradient, Hessian diagonal and (optionally) the full Hessian at one point.
struct DerivativeBundle {
  double value = 0.0;
  std::vector<double> grad;
  std::vector<double> diag2;
  std::optional<std::vector<double>> hessian;  ///< n x n row-major
};

/// Runs the network on `x`, filling `tape` (buffers are reused across calls).
/// Throws InputError on non-finite or wrongly sized input.
void forward_into(const MlpParams& params, std::span<const double> x, DerivativeMode mode,
                  ForwardTape& tape);

ForwardTape forward(const MlpParams& params, std::span<const double> x,
                    DerivativeMode mode = DerivativeMode::None);

double evaluate(const MlpParams& params, std::span<const double> x);
std::vector<double> forward_jacobian(const MlpParams& params, std::span<const double> x);
std::vector<double> forward_second(const MlpParams& params, std::span<const double> x);
/// Full Hessian with mixed partials, n x n row-major.
std::vector<double> forward_hessian(const MlpParams& params, std::span<const double> x);
DerivativeBundle derivatives(const MlpParams& params, std::span<const double> x,
                             bool full_hessian = false);

/// Points with adjoints of a scalar cost E with respect to Phi, grad Phi and
/// the Hessian diagonal of Phi at each point. `d_grad` / `d_diag2` may be
/// empty when the cost does not depend on them.
struct AdjointBatch {
  std::size_t input_dim = 0;
  std::vector<double> points;   ///< count x n
  std::vector<double> d_value;  ///< count
  std::vector<double> d_grad;   ///< count x n, or empty
  std::vector<double> d_diag2;  ///< count x n, or empty

  std::size_t size() const { return d_value.size(); }
  void validate() const;
};

/// Scratch buffers for reverse-mode accumulation; reusable across points.
struct BackwardWorkspace {
  std::vector<double> z_bar;
  std::vector<double> P_bar;
  std::vector<double> Q_bar;
  std::vector<double> x_bar;
  std::vector<double> J_bar;
  std::vector<double> S_bar;
};

/// Adds the parameter gradient of one point's cost contribution to `grads`.
///
/// `tape` must come from forward_into at that point, in Diagonal mode when
/// d_grad or d_diag2 is non-empty.
void accumulate_gradients(const MlpParams& params, const ForwardTape& tape, double d_value,
                          std::span<const double> d_grad, std::span<const double> d_diag2,
                          ParamGradients& grads, BackwardWorkspace& ws);

/// Exact gradient of E = sum over both batches with respect to every weight
/// and bias. Points are processed data first, then mesh, in index order.
ParamGradients param_gradients(const MlpParams& params, const AdjointBatch& data,
                               const AdjointBatch& mesh);

/// JSON checkpoint: architecture, activation, seed and all parameters.
std::string checkpoint_to_json(const MlpParams& params);
MlpParams checkpoint_from_json(const std::string& text);
void save_checkpoint(const MlpParams& params, const std::string& path);
MlpParams load_checkpoint(const std::string& path);

}  // namespace arbfree
