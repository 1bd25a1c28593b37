// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "fdsic/types.hpp"

namespace fdsic {

/// Adam over a flat real parameter vector; complex parameters appear as (re, im) pairs.
struct AdamState {
  long step = 0;
  RVector m;
  RVector v;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState for_size(Index n, double lr) {
    AdamState s;
    s.m = RVector::Zero(n);
    s.v = RVector::Zero(n);
    s.lr = lr;
    return s;
  }
};

/// One bias-corrected Adam update of `params` in place.
void adam_step(AdamState& state, RVector& params, const RVector& grads);

}  // namespace fdsic
