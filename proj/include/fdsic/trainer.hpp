// SPDX-License-Identifier: Apache-2.0
//
// Training of neural cancellers for the nonlinear SI residual
//   y_nl = y - y_lin_hat
// and evaluation of the composed canceller y_hat = y_lin_hat + y_nl_hat.
#pragma once

#include "fdsic/adam.hpp"
#include "fdsic/dense.hpp"
#include "fdsic/net_spec.hpp"
#include "fdsic/poly.hpp"
#include "fdsic/rnn.hpp"
#include "fdsic/signal.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace fdsic {

using NetworkParams = std::variant<RealNetwork, ComplexNetwork, RnnNetwork>;

NetworkParams init_params(const NetSpec& spec, std::uint64_t seed);
NetworkParams zero_params(const NetSpec& spec);
Index parameter_count(const NetworkParams& params);

struct TrainConfig {
  double lr = 1e-3;
  int batch_size = 32;
  int epochs = 50;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainOptions {
  /// false: no linear canceller, the network regresses raw y.
  bool linear_stage = true;
  bool record_history = true;
};

struct TrainedCanceller {
  NetSpec spec;
  LinearCanceller linear;
  NetworkParams params;
  double target_scale = 1.0;
  TrainConfig config;
  std::map<std::string, double> metrics;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double eval_total_db = 0.0;      // linear + NN
  double eval_nonlinear_db = 0.0;  // NN on y_nl alone
};

struct TrainResult {
  TrainedCanceller model;
  std::vector<EpochRecord> history;
  int best_epoch = -1;
  double best_eval_db = 0.0;
};

/// Window features for every sample index: 2L x N reals (re, im of x[n-l]) or L x N complex.
RMatrix real_window_features(const Eigen::Ref<const CVector>& x, int L);
CMatrix complex_window_features(const Eigen::Ref<const CVector>& x, int L);

/// Raw network outputs for target indices `idx`, as complex samples (before de-standardization).
CVector network_predict(const NetworkParams& params, const NetSpec& spec, const Eigen::Ref<const CVector>& x,
                        std::span<const Index> idx);

/// Trains on `train_idx`, records per-epoch metrics on `eval_idx`. Throws NumericalError on divergence.
TrainResult train_on(const NetSpec& spec, const ComplexSignal& x, const ComplexSignal& y, const LinearCanceller& lin,
                     std::span<const Index> train_idx, std::span<const Index> eval_idx, const TrainConfig& cfg,
                     const TrainOptions& opts = {});

/// Trains on the dataset's training range; history is measured on its test range.
TrainResult train(const NetSpec& spec, const Dataset& data, const LinearCanceller& lin, const TrainConfig& cfg,
                  const TrainOptions& opts = {});

/// y_lin_hat + scale * network output for the given indices.
CVector predict(const TrainedCanceller& model, const Eigen::Ref<const CVector>& x, std::span<const Index> idx);

/// Total cancellation of a prediction over target indices.
double evaluate_prediction(const ComplexSignal& y, std::span<const Index> idx, const Eigen::Ref<const CVector>& y_hat);

double evaluate(const TrainedCanceller& model, const Dataset& data, IndexRange range);
double evaluate(const TrainedCanceller& model, const ComplexSignal& x, const ComplexSignal& y,
                std::span<const Index> idx);

}  // namespace fdsic
