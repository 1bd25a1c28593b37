// SPDX-License-Identifier: Apache-2.0
#include "fdsic/poly.hpp"

#include <array>
#include <limits>
#include <numeric>
#include <string>

namespace fdsic {

namespace {

void require_valid_order(int P) {
  if (P < 1 || P % 2 == 0) throw std::invalid_argument("nonlinearity order P must be odd and >= 1, got " + std::to_string(P));
}

void require_valid_memory(int L) {
  if (L < 1) throw std::invalid_argument("memory length L must be >= 1, got " + std::to_string(L));
}

// Fills the N_bf(P) terms of one lag, starting at out[0].
template <typename Out>
void fill_terms(Complex x, int P, Out&& out) {
  const Complex xc = std::conj(x);
  // pow_x[k] = x^k, pow_xc[k] = conj(x)^k
  std::array<Complex, 32> pow_x{};
  std::array<Complex, 32> pow_xc{};
  pow_x[0] = pow_xc[0] = Complex{1.0, 0.0};
  for (int k = 1; k <= P; ++k) {
    pow_x[k] = pow_x[k - 1] * x;
    pow_xc[k] = pow_xc[k - 1] * xc;
  }
  Index b = 0;
  for (int p = 1; p <= P; p += 2)
    for (int q = 0; q <= p; ++q) out(b++) = pow_x[q] * pow_xc[p - q];
}

constexpr int kMaxOrder = 31;

}  // namespace

std::vector<BasisTerm> basis_functions(int P) {
  require_valid_order(P);
  std::vector<BasisTerm> terms;
  for (int p = 1; p <= P; p += 2)
    for (int q = 0; q <= p; ++q) terms.push_back({p, q});
  return terms;
}

int basis_count(int P) {
  require_valid_order(P);
  int n = 0;
  for (int p = 1; p <= P; p += 2) n += p + 1;
  return n;
}

CVector build_regressor_row(const Eigen::Ref<const CVector>& window, int P) {
  require_valid_order(P);
  if (P > kMaxOrder) throw std::invalid_argument("nonlinearity order P too large");
  if (window.size() < 1) throw std::invalid_argument("build_regressor_row: empty window");
  const int nbf = basis_count(P);
  CVector row(window.size() * nbf);
  for (Index l = 0; l < window.size(); ++l) fill_terms(window(l), P, row.segment(l * nbf, nbf));
  return row;
}

CMatrix build_regressor(const Eigen::Ref<const CVector>& x, std::span<const Index> rows, int P, int L) {
  require_valid_order(P);
  require_valid_memory(L);
  if (P > kMaxOrder) throw std::invalid_argument("nonlinearity order P too large");
  const int nbf = basis_count(P);

  // Per-sample terms are computed once and reused across lags.
  Index lo = x.size();
  Index hi = 0;
  for (Index n : rows) {
    if (n < 0 || n >= x.size()) throw std::out_of_range("build_regressor: row index outside signal");
    lo = std::min(lo, n);
    hi = std::max(hi, n + 1);
  }
  CMatrix A(static_cast<Index>(rows.size()), static_cast<Index>(L) * nbf);
  if (rows.empty()) return A;
  const Index first = std::max<Index>(0, lo - L + 1);
  CMatrix terms(hi - first, nbf);
  for (Index n = first; n < hi; ++n) fill_terms(x(n), P, terms.row(n - first).transpose());

  for (Index r = 0; r < A.rows(); ++r) {
    const Index n = rows[static_cast<std::size_t>(r)];
    for (int l = 0; l < L; ++l) {
      auto block = A.row(r).segment(static_cast<Index>(l) * nbf, nbf);
      if (n - l < 0)
        block.setZero();
      else
        block = terms.row(n - l - first);
    }
  }
  return A;
}

CMatrix build_regressor(const Eigen::Ref<const CVector>& x, IndexRange rows, int P, int L) {
  const auto idx = range_indices(rows);
  return build_regressor(x, idx, P, L);
}

LsSolution ls_fit(const Eigen::Ref<const CMatrix>& A, const Eigen::Ref<const CVector>& y) {
  if (A.rows() != y.size()) throw std::invalid_argument("ls_fit: row count differs from target length");
  if (A.rows() < A.cols()) throw std::invalid_argument("ls_fit: fewer rows than columns");
  if (A.cols() == 0) throw std::invalid_argument("ls_fit: empty regressor");
  if (!A.allFinite() || !y.allFinite()) throw std::invalid_argument("ls_fit: non-finite input");

  RVector scale = A.colwise().norm().transpose();
  for (Index j = 0; j < scale.size(); ++j)
    if (scale(j) == 0.0) scale(j) = 1.0;
  const CMatrix scaled = A * scale.cwiseInverse().asDiagonal();

  Eigen::CompleteOrthogonalDecomposition<CMatrix> cod(scaled);
  LsSolution sol;
  sol.coeffs = cod.solve(y);
  sol.coeffs = sol.coeffs.cwiseQuotient(scale.cast<Complex>());
  sol.rank = cod.rank();

  const auto& qtz = cod.matrixQTZ();
  const double r_max = std::abs(qtz(0, 0));
  const double r_min = sol.rank > 0 ? std::abs(qtz(sol.rank - 1, sol.rank - 1)) : 0.0;
  sol.condition_estimate = r_min > 0.0 ? r_max / r_min : std::numeric_limits<double>::infinity();
  sol.ill_conditioned = sol.rank < A.cols() || sol.condition_estimate > 1e10;
  return sol;
}

void PolyModel::validate() const {
  require_valid_order(P);
  require_valid_memory(L);
  if (coeffs.size() != static_cast<Index>(L) * basis_count(P))
    throw std::invalid_argument("PolyModel: coefficient count must equal L * N_bf(P)");
  if (!coeffs.allFinite()) throw std::invalid_argument("PolyModel: non-finite coefficient");
}

Index PolyModel::coefficient_index(int p, int q, int l) const {
  if (p < 1 || p > P || p % 2 == 0 || q < 0 || q > p || l < 0 || l >= L)
    throw std::out_of_range("PolyModel: basis index out of range");
  Index b = 0;
  for (int pp = 1; pp < p; pp += 2) b += pp + 1;
  return static_cast<Index>(l) * basis_count(P) + b + q;
}

PolyModel PolyModel::zeros(int P, int L) {
  require_valid_order(P);
  require_valid_memory(L);
  return PolyModel{P, L, CVector::Zero(static_cast<Index>(L) * basis_count(P))};
}

PolyModel fit_poly(const ComplexSignal& x, const ComplexSignal& y, std::span<const Index> rows, int P, int L,
                   LsSolution* diagnostics) {
  if (x.size() != y.size()) throw std::invalid_argument("fit_poly: x and y lengths differ");
  const CMatrix A = build_regressor(x.samples, rows, P, L);
  CVector target(static_cast<Index>(rows.size()));
  for (Index r = 0; r < target.size(); ++r) target(r) = y.samples(rows[static_cast<std::size_t>(r)]);
  LsSolution sol = ls_fit(A, target);
  PolyModel model{P, L, sol.coeffs};
  if (diagnostics) *diagnostics = std::move(sol);
  return model;
}

PolyModel fit_poly(const ComplexSignal& x, const ComplexSignal& y, IndexRange rows, int P, int L,
                   LsSolution* diagnostics) {
  const auto idx = range_indices(rows);
  return fit_poly(x, y, idx, P, L, diagnostics);
}

LinearCanceller fit_linear(const ComplexSignal& x, const ComplexSignal& y, std::span<const Index> rows, int L) {
  require_valid_memory(L);
  if (x.size() != y.size()) throw std::invalid_argument("fit_linear: x and y lengths differ");
  CMatrix A(static_cast<Index>(rows.size()), L);
  CVector target(A.rows());
  for (Index r = 0; r < A.rows(); ++r) {
    const Index n = rows[static_cast<std::size_t>(r)];
    for (int l = 0; l < L; ++l) A(r, l) = n - l >= 0 ? x.samples(n - l) : Complex{};
    target(r) = y.samples(n);
  }
  return LinearCanceller{ls_fit(A, target).coeffs};
}

LinearCanceller fit_linear(const ComplexSignal& x, const ComplexSignal& y, IndexRange rows, int L) {
  const auto idx = range_indices(rows);
  return fit_linear(x, y, idx, L);
}

CVector poly_predict(const PolyModel& model, const Eigen::Ref<const CVector>& x, IndexRange range) {
  model.validate();
  if (range.begin < 0 || range.end > x.size() || range.end < range.begin)
    throw std::out_of_range("poly_predict: range outside signal");
  const int nbf = basis_count(model.P);
  CVector out = CVector::Zero(range.size());
  CVector terms(nbf);
  for (Index n = range.begin; n < range.end; ++n) {
    Complex acc{};
    for (int l = 0; l < model.L && l <= n; ++l) {
      fill_terms(x(n - l), model.P, terms);
      acc += (terms.array() * model.coeffs.segment(static_cast<Index>(l) * nbf, nbf).array()).sum();
    }
    out(n - range.begin) = acc;
  }
  return out;
}

ComplexSignal poly_predict(const PolyModel& model, const ComplexSignal& x, IndexRange range) {
  return ComplexSignal{poly_predict(model, x.samples, range), x.sample_rate_hz};
}

CVector linear_predict(const LinearCanceller& lin, const Eigen::Ref<const CVector>& x, IndexRange range) {
  if (range.begin < 0 || range.end > x.size() || range.end < range.begin)
    throw std::out_of_range("linear_predict: range outside signal");
  CVector out = CVector::Zero(range.size());
  for (Index n = range.begin; n < range.end; ++n) {
    Complex acc{};
    for (Index l = 0; l < lin.taps.size() && l <= n; ++l) acc += lin.taps(l) * x(n - l);
    out(n - range.begin) = acc;
  }
  return out;
}

ComplexSignal nonlinear_target(const ComplexSignal& y, const LinearCanceller& lin, const ComplexSignal& x) {
  if (x.size() != y.size()) throw std::invalid_argument("nonlinear_target: x and y lengths differ");
  return ComplexSignal{y.samples - linear_predict(lin, x.samples, IndexRange{0, x.size()}), y.sample_rate_hz};
}

PolyModel as_poly_model(const LinearCanceller& lin) {
  PolyModel m = PolyModel::zeros(1, lin.L());
  for (int l = 0; l < lin.L(); ++l) m.coeff(1, 1, l) = lin.taps(l);
  return m;
}

std::vector<Index> range_indices(IndexRange r) {
  std::vector<Index> idx(static_cast<std::size_t>(r.size()));
  std::iota(idx.begin(), idx.end(), r.begin);
  return idx;
}

}  // namespace fdsic
