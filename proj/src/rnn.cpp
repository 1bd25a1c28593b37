// SPDX-License-Identifier: Apache-2.0
#include "fdsic/rnn.hpp"

#include "fdsic/param_pack.hpp"
#include "fdsic/rng.hpp"

#include <cmath>
#include <string>

namespace fdsic {

namespace {

void glorot_fill(RMatrix& m, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
  std::uniform_real_distribution<double> u(-a, a);
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i) m(i, j) = u(rng);
}

}  // namespace

RnnNetwork RnnNetwork::zeros(const NetSpec& spec) {
  spec.validate();
  if (spec.kind != NetKind::RNN) throw std::invalid_argument("RnnNetwork: spec is not recurrent");
  RnnNetwork net;
  net.steps = spec.L;
  Index fan_in = 2;
  for (const auto& ls : spec.hidden) {
    RecurrentLayer layer;
    layer.input_weights = RMatrix::Zero(ls.width, fan_in);
    layer.recurrent_weights = RMatrix::Zero(ls.width, ls.width);
    layer.biases = RVector::Zero(ls.width);
    net.layers.push_back(std::move(layer));
    fan_in = ls.width;
  }
  net.output_weights = RMatrix::Zero(2, fan_in);
  net.output_biases = RVector::Zero(2);
  return net;
}

RnnNetwork RnnNetwork::init(const NetSpec& spec, std::uint64_t seed) {
  RnnNetwork net = zeros(spec);
  Rng rng(seed);
  for (auto& layer : net.layers) {
    glorot_fill(layer.input_weights, rng);
    glorot_fill(layer.recurrent_weights, rng);
  }
  glorot_fill(net.output_weights, rng);
  return net;
}

void RnnNetwork::check_arity(const RMatrix& features) const {
  if (layers.empty()) throw std::logic_error("RnnNetwork: no layers");
  if (features.rows() != input_arity())
    throw std::invalid_argument("RnnNetwork: feature arity " + std::to_string(features.rows()) + " != " +
                                std::to_string(input_arity()));
}

RMatrix RnnNetwork::forward(const RMatrix& features) const {
  Tape tape;
  return forward(features, tape);
}

RMatrix RnnNetwork::forward(const RMatrix& features, Tape& tape) const {
  check_arity(features);
  const Index batch = features.cols();
  tape.features = features;
  tape.states.assign(layers.size(), std::vector<RMatrix>(static_cast<std::size_t>(steps)));
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto& layer = layers[k];
    for (int t = 0; t < steps; ++t) {
      RMatrix a(layer.units(), batch);
      if (k == 0)
        a.noalias() = layer.input_weights * features.middleRows(2 * (steps - 1 - t), 2);
      else
        a.noalias() = layer.input_weights * tape.states[k - 1][t];
      if (t > 0) a.noalias() += layer.recurrent_weights * tape.states[k][t - 1];
      a.colwise() += layer.biases;
      tape.states[k][t] = a.array().tanh().matrix();
    }
  }
  RMatrix out = output_weights * tape.states.back().back();
  out.colwise() += output_biases;
  return out;
}

RnnNetwork RnnNetwork::backward(const Tape& tape, const RMatrix& output_grad) const {
  RnnNetwork grad;
  grad.steps = steps;
  grad.layers.resize(layers.size());
  const auto& top = tape.states.back().back();
  grad.output_weights.noalias() = output_grad * top.transpose();
  grad.output_biases = output_grad.rowwise().sum();

  // d_states[t]: dL/dh[t] for the layer being processed
  std::vector<RMatrix> d_states(static_cast<std::size_t>(steps));
  for (auto& d : d_states) d = RMatrix::Zero(layers.back().units(), output_grad.cols());
  d_states.back().noalias() = output_weights.transpose() * output_grad;

  for (std::size_t k = layers.size(); k-- > 0;) {
    const auto& layer = layers[k];
    auto& g = grad.layers[k];
    g.input_weights = RMatrix::Zero(layer.input_weights.rows(), layer.input_weights.cols());
    g.recurrent_weights = RMatrix::Zero(layer.units(), layer.units());
    g.biases = RVector::Zero(layer.units());
    std::vector<RMatrix> d_below;
    if (k > 0) d_below.assign(static_cast<std::size_t>(steps), RMatrix());

    for (int t = steps - 1; t >= 0; --t) {
      const RMatrix& h = tape.states[k][t];
      const RMatrix da = (d_states[t].array() * (1.0 - h.array().square())).matrix();
      if (k == 0)
        g.input_weights.noalias() += da * tape.features.middleRows(2 * (steps - 1 - t), 2).transpose();
      else
        g.input_weights.noalias() += da * tape.states[k - 1][t].transpose();
      if (t > 0) {
        g.recurrent_weights.noalias() += da * tape.states[k][t - 1].transpose();
        d_states[t - 1].noalias() += layer.recurrent_weights.transpose() * da;
      }
      g.biases += da.rowwise().sum();
      if (k > 0) d_below[t].noalias() = layer.input_weights.transpose() * da;
    }
    if (k > 0) d_states = std::move(d_below);
  }

  for (const auto& l : grad.layers)
    if (!l.input_weights.allFinite() || !l.recurrent_weights.allFinite() || !l.biases.allFinite())
      throw NumericalError("non-finite recurrent gradient");
  if (!grad.output_weights.allFinite() || !grad.output_biases.allFinite())
    throw NumericalError("non-finite recurrent gradient");
  return grad;
}

Index RnnNetwork::parameter_count() const {
  Index n = output_weights.size() + output_biases.size();
  for (const auto& l : layers) n += l.input_weights.size() + l.recurrent_weights.size() + l.biases.size();
  return n;
}

RVector RnnNetwork::pack(bool) const {
  RVector out(parameter_count());
  Index pos = 0;
  for (const auto& l : layers) {
    detail::pack_block(l.input_weights, out, pos);
    detail::pack_block(l.recurrent_weights, out, pos);
    detail::pack_block(l.biases, out, pos);
  }
  detail::pack_block(output_weights, out, pos);
  detail::pack_block(output_biases, out, pos);
  return out;
}

void RnnNetwork::unpack(const RVector& in) {
  if (in.size() != parameter_count()) throw std::invalid_argument("RnnNetwork::unpack: size mismatch");
  Index pos = 0;
  for (auto& l : layers) {
    detail::unpack_block(l.input_weights, in, pos);
    detail::unpack_block(l.recurrent_weights, in, pos);
    detail::unpack_block(l.biases, in, pos);
  }
  detail::unpack_block(output_weights, in, pos);
  detail::unpack_block(output_biases, in, pos);
}

}  // namespace fdsic
