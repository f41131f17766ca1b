#pragma once

#include <string>
#include <string_view>

namespace arbfree {

/// Activation families with closed-form derivatives up to third order.
///
/// ReLU and ELU are not differentiable at 0; there f', f'', f''' take their
/// right-hand limits (1, 0, 0 for both families with default shapes).
struct Activation {
  enum class Kind { Softplus, Sigmoid, Tanh, Relu, Elu };

  Kind kind = Kind::Softplus;
  double slope = 0.0;  ///< ReLU-family negative slope `a`
  double alpha = 1.0;  ///< ELU-family scale
  double beta = 1.0;   ///< ELU-family exponent rate

  static Activation softplus() { return {Kind::Softplus}; }
  static Activation sigmoid() { return {Kind::Sigmoid}; }
  static Activation tanh() { return {Kind::Tanh}; }
  static Activation relu(double a = 0.0) { return {Kind::Relu, a}; }
  static Activation elu(double alpha = 1.0, double beta = 1.0) {
    return {Kind::Elu, 0.0, alpha, beta};
  }

  friend bool operator==(const Activation&, const Activation&) = default;
};

/// f and its first three derivatives at one point.
struct ActivationJet {
  double f;
  double d1;
  double d2;
  double d3;
};

double act_eval(const Activation& act, double x);
double act_d1(const Activation& act, double x);
double act_d2(const Activation& act, double x);
double act_d3(const Activation& act, double x);

/// All four values at once; shares the exponentials between orders.
ActivationJet act_jet(const Activation& act, double x);

/// Lowercase config name: "softplus", "sigmoid", "tanh", "relu", "elu".
std::string activation_name(const Activation& act);

/// Inverse of activation_name with default shape parameters. Throws ConfigError.
Activation parse_activation(std::string_view name);

}  // namespace arbfree
