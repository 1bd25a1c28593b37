// SPDX-License-Identifier: Apache-2.0
//
// Fully connected network templated on the scalar type: double gives the
// real-valued FFNN, std::complex<double> the CVNN. Samples are columns.
//
// Gradient convention: for complex parameters the stored gradient is
// dL/dtheta* (the steepest-ascent direction); for real parameters it is dL/dtheta.
// The backward pass propagates delta = dL/da* through every layer; a
// non-holomorphic activation f maps an upstream delta_f to
//   delta_z = conj(delta_f) df/dz* + delta_f conj(df/dz).
#pragma once

#include "fdsic/activation.hpp"
#include "fdsic/net_spec.hpp"
#include "fdsic/param_pack.hpp"
#include "fdsic/rng.hpp"
#include "fdsic/types.hpp"

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace fdsic {

template <typename Scalar>
struct DenseLayer {
  Matrix<Scalar> weights;  // width x fan_in
  Vector<Scalar> biases;
  RVector modrelu_bias;  // per neuron, empty unless activation == ModReLU
  Activation activation = Activation::Identity;

  [[nodiscard]] Index fan_in() const { return weights.cols(); }
  [[nodiscard]] Index width() const { return weights.rows(); }
};

template <typename Scalar>
class DenseNetwork {
 public:
  using scalar_type = Scalar;

  /// Layer inputs and pre-activations recorded by forward() for backward().
  struct Tape {
    std::vector<Matrix<Scalar>> inputs;
    std::vector<Matrix<Scalar>> pre;
  };

  std::vector<DenseLayer<Scalar>> layers;  // hidden layers, then the affine output layer

  /// Correctly shaped all-zero parameters (also used as gradient accumulators).
  static DenseNetwork zeros(const NetSpec& spec) {
    spec.validate();
    constexpr Field expected = is_complex_v<Scalar> ? Field::Complex : Field::Real;
    if (spec.field() != expected) throw std::invalid_argument("DenseNetwork: scalar type does not match spec field");
    if (spec.kind == NetKind::RNN) throw std::invalid_argument("DenseNetwork: recurrent spec");
    DenseNetwork net;
    Index fan_in = spec.input_arity();
    for (const auto& ls : spec.hidden) {
      net.layers.push_back(make_layer(ls.width, fan_in, ls.activation));
      fan_in = ls.width;
    }
    net.layers.push_back(make_layer(spec.output_arity(), fan_in, Activation::Identity));
    return net;
  }

  /// Glorot-uniform weights (complex: re and im each at half the variance), zero biases.
  static DenseNetwork init(const NetSpec& spec, std::uint64_t seed) {
    DenseNetwork net = zeros(spec);
    Rng rng(seed);
    for (auto& layer : net.layers) {
      const double fan_sum = static_cast<double>(layer.fan_in() + layer.width());
      if constexpr (is_complex_v<Scalar>) {
        std::uniform_real_distribution<double> u(-std::sqrt(3.0 / fan_sum), std::sqrt(3.0 / fan_sum));
        for (Index j = 0; j < layer.weights.cols(); ++j)
          for (Index i = 0; i < layer.weights.rows(); ++i) {
            const double re = u(rng);
            const double im = u(rng);
            layer.weights(i, j) = Scalar(re, im);
          }
      } else {
        std::uniform_real_distribution<double> u(-std::sqrt(6.0 / fan_sum), std::sqrt(6.0 / fan_sum));
        for (Index j = 0; j < layer.weights.cols(); ++j)
          for (Index i = 0; i < layer.weights.rows(); ++i) layer.weights(i, j) = u(rng);
      }
    }
    return net;
  }

  [[nodiscard]] Index input_arity() const { return layers.front().fan_in(); }
  [[nodiscard]] Index output_arity() const { return layers.back().width(); }

  Matrix<Scalar> forward(const Matrix<Scalar>& features) const {
    check_arity(features);
    Matrix<Scalar> a = features;
    for (const auto& layer : layers) {
      Matrix<Scalar> z = layer.weights * a;
      z.colwise() += layer.biases;
      a = activate(layer, z);
    }
    return a;
  }

  Matrix<Scalar> forward(const Matrix<Scalar>& features, Tape& tape) const {
    check_arity(features);
    tape.inputs.resize(layers.size());
    tape.pre.resize(layers.size());
    Matrix<Scalar> a = features;
    for (std::size_t k = 0; k < layers.size(); ++k) {
      const auto& layer = layers[k];
      tape.inputs[k] = std::move(a);
      tape.pre[k] = layer.weights * tape.inputs[k];
      tape.pre[k].colwise() += layer.biases;
      a = activate(layer, tape.pre[k]);
    }
    return a;
  }

  /// `output_grad` is dL/d(out)* per output entry and sample.
  DenseNetwork backward(const Tape& tape, const Matrix<Scalar>& output_grad) const {
    DenseNetwork grad;
    grad.layers.resize(layers.size());
    Matrix<Scalar> delta = output_grad;
    for (std::size_t k = layers.size(); k-- > 0;) {
      const auto& layer = layers[k];
      auto& g = grad.layers[k];
      g.activation = layer.activation;
      const Matrix<Scalar>& z = tape.pre[k];
      if (layer.activation == Activation::ModReLU) g.modrelu_bias = RVector::Zero(layer.width());
      if (layer.activation != Activation::Identity) {
        for (Index j = 0; j < z.cols(); ++j)
          for (Index i = 0; i < z.rows(); ++i) {
            const Scalar d = delta(i, j);
            if constexpr (is_complex_v<Scalar>) {
              const double b = layer.activation == Activation::ModReLU ? layer.modrelu_bias(i) : 0.0;
              const WirtingerPair w = activation_derivative(layer.activation, z(i, j), b);
              if (layer.activation == Activation::ModReLU)
                g.modrelu_bias(i) += 2.0 * (std::conj(d) * modrelu_bias_derivative(z(i, j), b)).real();
              delta(i, j) = std::conj(d) * w.dz_conj + d * std::conj(w.dz);
            } else {
              delta(i, j) = d * activation_derivative(layer.activation, z(i, j));
            }
          }
      }
      g.weights.noalias() = delta * tape.inputs[k].adjoint();
      g.biases = delta.rowwise().sum();
      if (k > 0) delta = layer.weights.adjoint() * delta;
    }
    check_finite(grad);
    return grad;
  }

  [[nodiscard]] Index parameter_count() const {
    Index n = 0;
    for (const auto& l : layers) n += detail::real_size(l.weights) + detail::real_size(l.biases) + l.modrelu_bias.size();
    return n;
  }

  /// Flat real parameter vector; with `as_gradient`, complex entries are scaled to (dL/dRe, dL/dIm).
  [[nodiscard]] RVector pack(bool as_gradient = false) const {
    RVector out(parameter_count());
    Index pos = 0;
    const double factor = as_gradient ? detail::real_gradient_factor<Scalar>() : 1.0;
    for (const auto& l : layers) {
      detail::pack_block(l.weights, out, pos, factor);
      detail::pack_block(l.biases, out, pos, factor);
      detail::pack_block(l.modrelu_bias, out, pos);
    }
    return out;
  }

  void unpack(const RVector& in) {
    if (in.size() != parameter_count()) throw std::invalid_argument("DenseNetwork::unpack: size mismatch");
    Index pos = 0;
    for (auto& l : layers) {
      detail::unpack_block(l.weights, in, pos);
      detail::unpack_block(l.biases, in, pos);
      detail::unpack_block(l.modrelu_bias, in, pos);
    }
  }

 private:
  static DenseLayer<Scalar> make_layer(Index width, Index fan_in, Activation act) {
    DenseLayer<Scalar> layer;
    layer.weights = Matrix<Scalar>::Zero(width, fan_in);
    layer.biases = Vector<Scalar>::Zero(width);
    if (act == Activation::ModReLU) layer.modrelu_bias = RVector::Zero(width);
    layer.activation = act;
    return layer;
  }

  static Matrix<Scalar> activate(const DenseLayer<Scalar>& layer, const Matrix<Scalar>& z) {
    if (layer.activation == Activation::Identity) return z;
    Matrix<Scalar> a(z.rows(), z.cols());
    for (Index j = 0; j < z.cols(); ++j)
      for (Index i = 0; i < z.rows(); ++i) {
        if constexpr (is_complex_v<Scalar>) {
          const double b = layer.activation == Activation::ModReLU ? layer.modrelu_bias(i) : 0.0;
          a(i, j) = activation_apply(layer.activation, z(i, j), b);
        } else {
          a(i, j) = activation_apply(layer.activation, z(i, j));
        }
      }
    return a;
  }

  void check_arity(const Matrix<Scalar>& features) const {
    if (layers.empty()) throw std::logic_error("DenseNetwork: no layers");
    if (features.rows() != input_arity())
      throw std::invalid_argument("DenseNetwork: feature arity " + std::to_string(features.rows()) + " != " +
                                  std::to_string(input_arity()));
  }

  static void check_finite(const DenseNetwork& grad) {
    for (const auto& l : grad.layers)
      if (!l.weights.allFinite() || !l.biases.allFinite() || !l.modrelu_bias.allFinite())
        throw NumericalError("non-finite gradient");
  }
};

using RealNetwork = DenseNetwork<double>;
using ComplexNetwork = DenseNetwork<Complex>;

}  // namespace fdsic
