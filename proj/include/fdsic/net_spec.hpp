// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "fdsic/types.hpp"

#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace fdsic {

enum class NetKind { FFNN, CVNN, RNN };
enum class Activation { Tanh, ReLU, AmpPhase, Cardioid, ModReLU, CReLU, ZReLU, Identity };
enum class Field { Real, Complex };

std::string_view to_string(NetKind k);
std::string_view to_string(Activation a);
std::string_view to_string(Field f);
NetKind parse_net_kind(std::string_view s);
Activation parse_activation(std::string_view s);

bool is_complex_activation(Activation a);

struct LayerSpec {
  int width = 1;
  Activation activation = Activation::Tanh;
  Field field = Field::Real;
  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct NetSpec {
  NetKind kind = NetKind::FFNN;
  std::vector<LayerSpec> hidden;
  int L = 13;

  void validate() const;
  /// Scalars fed per window: FFNN 2L reals, CVNN L complex, RNN 2 reals per step over L steps.
  [[nodiscard]] int input_arity() const;
  /// FFNN/RNN 2 reals, CVNN 1 complex.
  [[nodiscard]] int output_arity() const;
  [[nodiscard]] Field field() const { return kind == NetKind::CVNN ? Field::Complex : Field::Real; }

  static NetSpec ffnn(std::vector<int> widths, int L = 13, Activation act = Activation::Tanh);
  static NetSpec cvnn(std::vector<int> widths, int L = 13, Activation act = Activation::CReLU);
  static NetSpec rnn(std::vector<int> widths, int L = 13);

  friend bool operator==(const NetSpec&, const NetSpec&) = default;
};

struct PolySpec {
  int P = 5;
  int L = 13;
  void validate() const;
  friend bool operator==(const PolySpec&, const PolySpec&) = default;
};

/// Declarative canceller description shared by the CLI, the harness and the complexity counter.
using CancellerSpec = std::variant<PolySpec, NetSpec>;

/// Canonical identifier, e.g. "poly:P=5,L=13", "ffnn:10-10-10,act=tanh,L=13", "cvnn:7,act=crelu,L=13", "rnn:20,L=13".
std::string spec_id(const CancellerSpec& spec);
/// Inverse of spec_id; optional fields (act, L) take their defaults. Throws ConfigError.
CancellerSpec parse_spec(std::string_view text);

}  // namespace fdsic
