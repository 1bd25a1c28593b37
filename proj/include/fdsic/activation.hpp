// SPDX-License-Identifier: Apache-2.0
//
// Real and complex activation functions. Complex derivatives are returned as
// the Wirtinger pair (df/dz, df/dz*), computed from the real/imaginary partials
//   df/dz  = (df/dx - i df/dy) / 2,   df/dz* = (df/dx + i df/dy) / 2.
// Phase-dependent functions map z = 0 to 0 with a zero subgradient.
#pragma once

#include "fdsic/net_spec.hpp"
#include "fdsic/types.hpp"

namespace fdsic {

struct WirtingerPair {
  Complex dz;
  Complex dz_conj;
};

double activation_apply(Activation kind, double z);
/// d f / d z for real activations.
double activation_derivative(Activation kind, double z);

/// `bias` is the modReLU offset b and is ignored by the other kinds.
Complex activation_apply(Activation kind, Complex z, double bias = 0.0);
WirtingerPair activation_derivative(Activation kind, Complex z, double bias = 0.0);
/// d f / d b for modReLU (zero when inactive).
Complex modrelu_bias_derivative(Complex z, double bias);

}  // namespace fdsic
