// SPDX-License-Identifier: Apache-2.0
//
// Real-valued fully connected RNN over an L-step window:
//   h[t] = tanh(W_h x[t] + U_h h[t-1] + b_h),  h[-1] = 0
//   y    = W_y h_top[L-1] + b_y
// Stacked layers consume the full state sequence of the layer below.
// Step t reads the sample x[n-L+1+t] (oldest first) as (re, im).
#pragma once

#include "fdsic/net_spec.hpp"
#include "fdsic/types.hpp"

#include <cstdint>
#include <vector>

namespace fdsic {

struct RecurrentLayer {
  RMatrix input_weights;      // units x fan_in
  RMatrix recurrent_weights;  // units x units
  RVector biases;

  [[nodiscard]] Index units() const { return input_weights.rows(); }
};

class RnnNetwork {
 public:
  using scalar_type = double;

  struct Tape {
    RMatrix features;
    std::vector<std::vector<RMatrix>> states;  // [layer][step], units x batch
  };

  std::vector<RecurrentLayer> layers;
  RMatrix output_weights;  // 2 x units of the top layer
  RVector output_biases;
  int steps = 1;

  static RnnNetwork zeros(const NetSpec& spec);
  static RnnNetwork init(const NetSpec& spec, std::uint64_t seed);

  [[nodiscard]] Index input_arity() const { return 2 * static_cast<Index>(steps); }
  [[nodiscard]] Index output_arity() const { return output_weights.rows(); }

  /// `features` has 2L rows laid out as (re, im) of x[n], x[n-1], ..., x[n-L+1].
  [[nodiscard]] RMatrix forward(const RMatrix& features) const;
  RMatrix forward(const RMatrix& features, Tape& tape) const;
  /// Exact BPTT over all L steps; `output_grad` is dL/d(out).
  [[nodiscard]] RnnNetwork backward(const Tape& tape, const RMatrix& output_grad) const;

  [[nodiscard]] Index parameter_count() const;
  [[nodiscard]] RVector pack(bool as_gradient = false) const;
  void unpack(const RVector& in);

 private:
  void check_arity(const RMatrix& features) const;
};

}  // namespace fdsic
