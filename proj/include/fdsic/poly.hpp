// SPDX-License-Identifier: Apache-2.0
//
// Memory-polynomial SI canceller
//
//   y[n] = sum_{p odd <= P} sum_{q=0..p} sum_{l<L} h_{p,q}[l] x[n-l]^q conj(x[n-l])^(p-q)
//
// fitted by complex least squares, plus the direct-term linear canceller that
// every neural pipeline composes with.
#pragma once

#include "fdsic/signal.hpp"
#include "fdsic/types.hpp"

#include <span>
#include <string>
#include <vector>

namespace fdsic {

struct BasisTerm {
  int p = 1;
  int q = 0;
  friend bool operator==(const BasisTerm&, const BasisTerm&) = default;
};

/// Regressor column layout tag stored with serialized models.
inline constexpr const char* kBasisOrderTag = "lag-major/p-asc/q-asc";

/// (p, q) pairs for odd p <= P, ascending p then q. Throws on even or nonpositive P.
std::vector<BasisTerm> basis_functions(int P);
/// N_bf(P) = sum over odd p <= P of (p + 1).
int basis_count(int P);

/// One regressor row for window[l] = x[n - l]; entry l * N_bf + b holds term b at lag l.
CVector build_regressor_row(const Eigen::Ref<const CVector>& window, int P);

/// Regressor rows for the given target indices; history before index 0 is zero.
CMatrix build_regressor(const Eigen::Ref<const CVector>& x, std::span<const Index> rows, int P, int L);
CMatrix build_regressor(const Eigen::Ref<const CVector>& x, IndexRange rows, int P, int L);

struct LsSolution {
  CVector coeffs;
  Index rank = 0;
  double condition_estimate = 1.0;
  /// Set when the scaled problem is rank deficient or badly conditioned.
  bool ill_conditioned = false;
};

/// argmin_h ||A h - y||_2 with unit-norm column scaling and a complete
/// orthogonal decomposition (minimum-norm solution when rank deficient).
LsSolution ls_fit(const Eigen::Ref<const CMatrix>& A, const Eigen::Ref<const CVector>& y);

struct PolyModel {
  int P = 1;
  int L = 1;
  CVector coeffs;  // lag-major, then basis order

  void validate() const;
  [[nodiscard]] Index coefficient_index(int p, int q, int l) const;
  [[nodiscard]] Complex coeff(int p, int q, int l) const { return coeffs(coefficient_index(p, q, l)); }
  Complex& coeff(int p, int q, int l) { return coeffs(coefficient_index(p, q, l)); }

  static PolyModel zeros(int P, int L);
};

struct LinearCanceller {
  CVector taps;  // applied to x[n - l]
  [[nodiscard]] int L() const { return static_cast<int>(taps.size()); }
  static LinearCanceller zeros(int L) { return {CVector::Zero(L)}; }
};

PolyModel fit_poly(const ComplexSignal& x, const ComplexSignal& y, std::span<const Index> rows, int P, int L,
                   LsSolution* diagnostics = nullptr);
PolyModel fit_poly(const ComplexSignal& x, const ComplexSignal& y, IndexRange rows, int P, int L,
                   LsSolution* diagnostics = nullptr);
LinearCanceller fit_linear(const ComplexSignal& x, const ComplexSignal& y, std::span<const Index> rows, int L);
LinearCanceller fit_linear(const ComplexSignal& x, const ComplexSignal& y, IndexRange rows, int L);

CVector poly_predict(const PolyModel& model, const Eigen::Ref<const CVector>& x, IndexRange range);
ComplexSignal poly_predict(const PolyModel& model, const ComplexSignal& x, IndexRange range);
CVector linear_predict(const LinearCanceller& lin, const Eigen::Ref<const CVector>& x, IndexRange range);

/// y - linear prediction over the full signal length.
ComplexSignal nonlinear_target(const ComplexSignal& y, const LinearCanceller& lin, const ComplexSignal& x);

/// The P=1 model whose q=1 (direct) terms equal the linear taps.
PolyModel as_poly_model(const LinearCanceller& lin);

std::vector<Index> range_indices(IndexRange r);

}  // namespace fdsic
