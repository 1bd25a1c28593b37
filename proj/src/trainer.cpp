// SPDX-License-Identifier: Apache-2.0
#include "fdsic/trainer.hpp"

#include "fdsic/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace fdsic {

namespace {

template <typename Net>
using Features = Matrix<typename Net::scalar_type>;

template <typename Net>
Features<Net> window_features(const Eigen::Ref<const CVector>& x, int L) {
  if constexpr (is_complex_v<typename Net::scalar_type>)
    return complex_window_features(x, L);
  else
    return real_window_features(x, L);
}

template <typename Scalar>
CVector to_complex(const Matrix<Scalar>& out) {
  if constexpr (is_complex_v<Scalar>) {
    return out.row(0).transpose();
  } else {
    CVector c(out.cols());
    for (Index j = 0; j < out.cols(); ++j) c(j) = Complex{out(0, j), out(1, j)};
    return c;
  }
}

// dL/d(out)* for L = mean |t - p|^2 (real outputs: dL/d(out)).
template <typename Scalar>
Matrix<Scalar> loss_gradient(const Matrix<Scalar>& out, const CVector& target, double& loss) {
  const auto batch = static_cast<double>(target.size());
  Matrix<Scalar> grad(out.rows(), out.cols());
  loss = 0.0;
  for (Index j = 0; j < out.cols(); ++j) {
    if constexpr (is_complex_v<Scalar>) {
      const Complex err = out(0, j) - target(j);
      loss += std::norm(err);
      grad(0, j) = err / batch;
    } else {
      const double er = out(0, j) - target(j).real();
      const double ei = out(1, j) - target(j).imag();
      loss += er * er + ei * ei;
      grad(0, j) = 2.0 * er / batch;
      grad(1, j) = 2.0 * ei / batch;
    }
  }
  loss /= batch;
  return grad;
}

CVector linear_predict_at(const LinearCanceller& lin, const Eigen::Ref<const CVector>& x, std::span<const Index> idx) {
  CVector out(static_cast<Index>(idx.size()));
  for (Index r = 0; r < out.size(); ++r) {
    const Index n = idx[static_cast<std::size_t>(r)];
    Complex acc{};
    for (Index l = 0; l < lin.taps.size() && l <= n; ++l) acc += lin.taps(l) * x(n - l);
    out(r) = acc;
  }
  return out;
}

CVector gather(const Eigen::Ref<const CVector>& v, std::span<const Index> idx) {
  CVector out(static_cast<Index>(idx.size()));
  for (Index r = 0; r < out.size(); ++r) out(r) = v(idx[static_cast<std::size_t>(r)]);
  return out;
}

template <typename Net>
TrainResult train_typed(Net net, const NetSpec& spec, const ComplexSignal& x, const ComplexSignal& y,
                        const LinearCanceller& lin, std::span<const Index> train_idx, std::span<const Index> eval_idx,
                        const TrainConfig& cfg, const TrainOptions& opts) {
  using Scalar = typename Net::scalar_type;
  const Features<Net> features = window_features<Net>(x.samples, spec.L);

  const LinearCanceller linear = opts.linear_stage ? lin : LinearCanceller::zeros(spec.L);
  const CVector y_nl = nonlinear_target(y, linear, x).samples;

  double scale = 0.0;
  for (Index n : train_idx) scale += std::norm(y_nl(n));
  scale = std::sqrt(scale / static_cast<double>(train_idx.size()));
  if (!(scale > 0.0) || !std::isfinite(scale)) scale = 1.0;
  const CVector target = y_nl / scale;

  const CVector eval_y = gather(y.samples, eval_idx);
  const CVector eval_y_nl = gather(y_nl, eval_idx);
  const CVector eval_lin = eval_y - eval_y_nl;

  TrainResult result;
  result.model.spec = spec;
  result.model.linear = linear;
  result.model.target_scale = scale;
  result.model.config = cfg;

  RVector params = net.pack();
  AdamState adam = AdamState::for_size(params.size(), cfg.lr);
  Rng shuffle_rng(derive_seed(cfg.seed, {1}));
  std::vector<Index> order(train_idx.begin(), train_idx.end());
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  const std::size_t n_batches = order.size() / batch;
  if (n_batches == 0) throw ConfigError("batch size exceeds the number of training windows");

  std::vector<Index> cols(batch);
  CVector batch_target(cfg.batch_size);
  typename Net::Tape tape;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < n_batches; ++b) {
      for (std::size_t i = 0; i < batch; ++i) {
        cols[i] = order[b * batch + i];
        batch_target(static_cast<Index>(i)) = target(cols[i]);
      }
      const Features<Net> in = features(Eigen::all, cols);
      const Matrix<Scalar> out = net.forward(in, tape);
      double loss = 0.0;
      const Matrix<Scalar> grad_out = loss_gradient<Scalar>(out, batch_target, loss);
      if (!std::isfinite(loss))
        throw NumericalError("training diverged: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(b));
      Net grad;
      try {
        grad = net.backward(tape, grad_out);
      } catch (const NumericalError& e) {
        throw NumericalError(std::string(e.what()) + " at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(b));
      }
      adam_step(adam, params, grad.pack(true));
      net.unpack(params);
      loss_sum += loss;
    }

    if (opts.record_history || epoch + 1 == cfg.epochs) {
      const CVector nl_hat = scale * to_complex<Scalar>(net.forward(Features<Net>(features(Eigen::all, std::vector<Index>(eval_idx.begin(), eval_idx.end())))));
      if (!nl_hat.allFinite())
        throw NumericalError("training diverged: non-finite prediction after epoch " + std::to_string(epoch));
      EpochRecord rec;
      rec.epoch = epoch + 1;
      rec.train_loss = loss_sum / static_cast<double>(n_batches);
      rec.eval_total_db = cancellation_db(eval_y, eval_y - eval_lin - nl_hat);
      rec.eval_nonlinear_db = cancellation_db(eval_y_nl, eval_y_nl - nl_hat);
      if (result.best_epoch < 0 || rec.eval_total_db > result.best_eval_db) {
        result.best_epoch = rec.epoch;
        result.best_eval_db = rec.eval_total_db;
      }
      result.history.push_back(rec);
    }
  }

  result.model.params = std::move(net);
  const EpochRecord& last = result.history.back();
  result.model.metrics["final_eval_total_db"] = last.eval_total_db;
  result.model.metrics["final_eval_nonlinear_db"] = last.eval_nonlinear_db;
  result.model.metrics["final_train_loss"] = last.train_loss;
  return result;
}

}  // namespace

NetworkParams init_params(const NetSpec& spec, std::uint64_t seed) {
  spec.validate();
  switch (spec.kind) {
    case NetKind::FFNN: return RealNetwork::init(spec, seed);
    case NetKind::CVNN: return ComplexNetwork::init(spec, seed);
    case NetKind::RNN: return RnnNetwork::init(spec, seed);
  }
  throw std::logic_error("init_params: unknown kind");
}

NetworkParams zero_params(const NetSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case NetKind::FFNN: return RealNetwork::zeros(spec);
    case NetKind::CVNN: return ComplexNetwork::zeros(spec);
    case NetKind::RNN: return RnnNetwork::zeros(spec);
  }
  throw std::logic_error("zero_params: unknown kind");
}

Index parameter_count(const NetworkParams& params) {
  return std::visit([](const auto& net) { return net.parameter_count(); }, params);
}

void TrainConfig::validate() const {
  if (!(lr >= 1e-6 && lr <= 0.05)) throw ConfigError("train.lr must lie in [1e-6, 0.05]");
  if (batch_size < 4 || batch_size > 64) throw ConfigError("train.batch_size must lie in [4, 64]");
  if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
}

RMatrix real_window_features(const Eigen::Ref<const CVector>& x, int L) {
  if (L < 1) throw std::invalid_argument("window length must be >= 1");
  RMatrix f = RMatrix::Zero(2 * L, x.size());
  for (Index n = 0; n < x.size(); ++n)
    for (int l = 0; l < L && l <= n; ++l) {
      f(2 * l, n) = x(n - l).real();
      f(2 * l + 1, n) = x(n - l).imag();
    }
  return f;
}

CMatrix complex_window_features(const Eigen::Ref<const CVector>& x, int L) {
  if (L < 1) throw std::invalid_argument("window length must be >= 1");
  CMatrix f = CMatrix::Zero(L, x.size());
  for (Index n = 0; n < x.size(); ++n)
    for (int l = 0; l < L && l <= n; ++l) f(l, n) = x(n - l);
  return f;
}

CVector network_predict(const NetworkParams& params, const NetSpec& spec, const Eigen::Ref<const CVector>& x,
                        std::span<const Index> idx) {
  return std::visit(
      [&](const auto& net) -> CVector {
        using Net = std::decay_t<decltype(net)>;
        const auto features = window_features<Net>(x, spec.L);
        const std::vector<Index> cols(idx.begin(), idx.end());
        return to_complex<typename Net::scalar_type>(net.forward(Features<Net>(features(Eigen::all, cols))));
      },
      params);
}

TrainResult train_on(const NetSpec& spec, const ComplexSignal& x, const ComplexSignal& y, const LinearCanceller& lin,
                     std::span<const Index> train_idx, std::span<const Index> eval_idx, const TrainConfig& cfg,
                     const TrainOptions& opts) {
  spec.validate();
  cfg.validate();
  if (x.size() != y.size()) throw std::invalid_argument("train: x and y lengths differ");
  if (opts.linear_stage && lin.L() != spec.L) throw std::invalid_argument("train: linear canceller length != L");
  if (train_idx.empty() || eval_idx.empty()) throw std::invalid_argument("train: empty index set");
  return std::visit(
      [&](auto net) { return train_typed(std::move(net), spec, x, y, lin, train_idx, eval_idx, cfg, opts); },
      init_params(spec, derive_seed(cfg.seed, {0})));
}

TrainResult train(const NetSpec& spec, const Dataset& data, const LinearCanceller& lin, const TrainConfig& cfg,
                  const TrainOptions& opts) {
  data.validate();
  const auto train_idx = range_indices(data.train_range);
  const auto test_idx = range_indices(data.test_range);
  return train_on(spec, data.x, data.y, lin, train_idx, test_idx, cfg, opts);
}

CVector predict(const TrainedCanceller& model, const Eigen::Ref<const CVector>& x, std::span<const Index> idx) {
  return linear_predict_at(model.linear, x, idx) + model.target_scale * network_predict(model.params, model.spec, x, idx);
}

double evaluate_prediction(const ComplexSignal& y, std::span<const Index> idx, const Eigen::Ref<const CVector>& y_hat) {
  const CVector target = gather(y.samples, idx);
  return cancellation_db(target, target - y_hat);
}

double evaluate(const TrainedCanceller& model, const ComplexSignal& x, const ComplexSignal& y,
                std::span<const Index> idx) {
  return evaluate_prediction(y, idx, predict(model, x.samples, idx));
}

double evaluate(const TrainedCanceller& model, const Dataset& data, IndexRange range) {
  const auto idx = range_indices(range);
  return evaluate(model, data.x, data.y, idx);
}

}  // namespace fdsic
