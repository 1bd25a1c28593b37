// SPDX-License-Identifier: Apache-2.0
//
// Flattening of real/complex parameter blocks into a real vector. A complex
// entry occupies two consecutive reals (re, im).
#pragma once

#include "fdsic/types.hpp"

namespace fdsic::detail {

template <typename Derived>
Index real_size(const Eigen::DenseBase<Derived>& m) {
  return m.size() * (is_complex_v<typename Derived::Scalar> ? 2 : 1);
}

/// Writes m into out[pos...]; `factor` multiplies every written real.
template <typename Derived>
void pack_block(const Eigen::DenseBase<Derived>& m, RVector& out, Index& pos, double factor = 1.0) {
  using Scalar = typename Derived::Scalar;
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i) {
      if constexpr (is_complex_v<Scalar>) {
        out(pos++) = factor * m(i, j).real();
        out(pos++) = factor * m(i, j).imag();
      } else {
        out(pos++) = factor * m(i, j);
      }
    }
}

template <typename Derived>
void unpack_block(Eigen::DenseBase<Derived>& m, const RVector& in, Index& pos) {
  using Scalar = typename Derived::Scalar;
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i) {
      if constexpr (is_complex_v<Scalar>) {
        m(i, j) = Scalar(in(pos), in(pos + 1));
        pos += 2;
      } else {
        m(i, j) = in(pos++);
      }
    }
}

/// Factor converting a stored gradient into the real gradient (d/dRe, d/dIm):
/// complex parameters store dL/dtheta*, which is half of it.
template <typename Scalar>
constexpr double real_gradient_factor() {
  return is_complex_v<Scalar> ? 2.0 : 1.0;
}

}  // namespace fdsic::detail
