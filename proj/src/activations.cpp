#include "arbfree/activations.hpp"

#include <cmath>

#include "arbfree/errors.hpp"

namespace arbfree {
namespace {

// Logistic function and its complement, each evaluated without cancellation.
struct Logistic {
  double s;   // 1 / (1 + e^-x)
  double sc;  // 1 - s
};

Logistic logistic(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return {1.0 / (1.0 + e), e / (1.0 + e)};
  }
  const double e = std::exp(x);
  return {e / (1.0 + e), 1.0 / (1.0 + e)};
}

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

ActivationJet sigmoid_jet(double x) {
  const auto [s, sc] = logistic(x);
  const double d1 = s * sc;
  return {s, d1, d1 * (sc - s), d1 * (1.0 - 6.0 * d1)};
}

ActivationJet softplus_jet(double x) {
  const auto [s, sc] = logistic(x);
  const double d2 = s * sc;
  return {softplus(x), s, d2, d2 * (sc - s)};
}

ActivationJet tanh_jet(double x) {
  const double y = std::tanh(x);
  const double sech = 1.0 / std::cosh(x);
  const double d1 = sech * sech;  // 1 - y^2 without cancellation
  return {y, d1, -2.0 * y * d1, d1 * (6.0 * y * y - 2.0)};
}

ActivationJet relu_jet(const Activation& act, double x) {
  if (x > 0.0) return {x, 1.0, 0.0, 0.0};
  if (x < 0.0) return {act.slope * x, act.slope, 0.0, 0.0};
  return {0.0, 1.0, 0.0, 0.0};
}

ActivationJet elu_jet(const Activation& act, double x) {
  if (x >= 0.0) return {x, 1.0, 0.0, 0.0};
  const double e = std::exp(act.beta * x);
  const double ab = act.alpha * act.beta;
  return {act.alpha * std::expm1(act.beta * x), ab * e, ab * act.beta * e,
          ab * act.beta * act.beta * e};
}

}  // namespace

ActivationJet act_jet(const Activation& act, double x) {
  switch (act.kind) {
    case Activation::Kind::Softplus:
      return softplus_jet(x);
    case Activation::Kind::Sigmoid:
      return sigmoid_jet(x);
    case Activation::Kind::Tanh:
      return tanh_jet(x);
    case Activation::Kind::Relu:
      return relu_jet(act, x);
    case Activation::Kind::Elu:
      return elu_jet(act, x);
  }
  return {0.0, 0.0, 0.0, 0.0};
}

double act_eval(const Activation& act, double x) {
  switch (act.kind) {
    case Activation::Kind::Softplus:
      return softplus(x);
    case Activation::Kind::Tanh:
      return std::tanh(x);
    default:
      return act_jet(act, x).f;
  }
}

double act_d1(const Activation& act, double x) { return act_jet(act, x).d1; }
double act_d2(const Activation& act, double x) { return act_jet(act, x).d2; }
double act_d3(const Activation& act, double x) { return act_jet(act, x).d3; }

std::string activation_name(const Activation& act) {
  switch (act.kind) {
    case Activation::Kind::Softplus:
      return "softplus";
    case Activation::Kind::Sigmoid:
      return "sigmoid";
    case Activation::Kind::Tanh:
      return "tanh";
    case Activation::Kind::Relu:
      return "relu";
    case Activation::Kind::Elu:
      return "elu";
  }
  return "softplus";
}

Activation parse_activation(std::string_view name) {
  if (name == "softplus") return Activation::softplus();
  if (name == "sigmoid") return Activation::sigmoid();
  if (name == "tanh") return Activation::tanh();
  if (name == "relu") return Activation::relu();
  if (name == "elu") return Activation::elu();
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

}  // namespace arbfree
