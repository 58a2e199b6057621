#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "stackstep/core.hpp"

namespace stackstep {

enum class ActKind { identity, relu, leaky_relu, tanh_act, sigmoid_smooth };

/// Elementwise activation with a fixed Clarke-subgradient selection.
/// relu's subgradient at 0 is pinned to 0 (the left derivative) so runs are
/// reproducible.
class Activation {
 public:
  static Activation identity() { return Activation(ActKind::identity, 0.0); }
  static Activation relu() { return Activation(ActKind::relu, 0.0); }
  static Activation leaky_relu(double slope) { return Activation(ActKind::leaky_relu, slope); }
  static Activation tanh_act() { return Activation(ActKind::tanh_act, 0.0); }
  static Activation sigmoid_smooth() { return Activation(ActKind::sigmoid_smooth, 0.0); }

  static Activation parse(const std::string& name) {
    if (name == "identity") return identity();
    if (name == "relu") return relu();
    if (name == "leaky_relu") return leaky_relu(0.01);
    if (name == "tanh") return tanh_act();
    if (name == "sigmoid") return sigmoid_smooth();
    throw std::invalid_argument("unknown activation: " + name);
  }

  ActKind kind() const { return kind_; }
  bool smooth() const {
    return kind_ == ActKind::identity || kind_ == ActKind::tanh_act ||
           kind_ == ActKind::sigmoid_smooth;
  }
  /// Lipschitz constant of the elementwise map.
  double lipschitz() const {
    switch (kind_) {
      case ActKind::identity: return 1.0;
      case ActKind::relu: return 1.0;
      case ActKind::leaky_relu: return std::max(1.0, std::abs(slope_));
      case ActKind::tanh_act: return 1.0;
      case ActKind::sigmoid_smooth: return 0.25;
    }
    return 1.0;
  }

  std::string name() const {
    switch (kind_) {
      case ActKind::identity: return "identity";
      case ActKind::relu: return "relu";
      case ActKind::leaky_relu: return "leaky_relu";
      case ActKind::tanh_act: return "tanh";
      case ActKind::sigmoid_smooth: return "sigmoid";
    }
    return "?";
  }

  double apply(double a) const {
    switch (kind_) {
      case ActKind::identity: return a;
      case ActKind::relu: return a > 0.0 ? a : 0.0;
      case ActKind::leaky_relu: return a > 0.0 ? a : slope_ * a;
      case ActKind::tanh_act: return std::tanh(a);
      case ActKind::sigmoid_smooth: return 1.0 / (1.0 + std::exp(-a));
    }
    return a;
  }

  double subgrad(double a) const {
    switch (kind_) {
      case ActKind::identity: return 1.0;
      case ActKind::relu: return a > 0.0 ? 1.0 : 0.0;
      case ActKind::leaky_relu: return a > 0.0 ? 1.0 : slope_;
      case ActKind::tanh_act: {
        const double t = std::tanh(a);
        return 1.0 - t * t;
      }
      case ActKind::sigmoid_smooth: {
        const double s = 1.0 / (1.0 + std::exp(-a));
        return s * (1.0 - s);
      }
    }
    return 1.0;
  }

  template <typename Derived>
  typename Derived::PlainObject apply(const Eigen::MatrixBase<Derived>& a) const {
    return a.unaryExpr([this](double v) { return apply(v); });
  }
  template <typename Derived>
  typename Derived::PlainObject subgrad(const Eigen::MatrixBase<Derived>& a) const {
    return a.unaryExpr([this](double v) { return subgrad(v); });
  }

 private:
  Activation(ActKind kind, double slope) : kind_(kind), slope_(slope) {}
  ActKind kind_;
  double slope_;
};

}  // namespace stackstep
