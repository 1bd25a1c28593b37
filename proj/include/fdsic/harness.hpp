// SPDX-License-Identifier: Apache-2.0
//
// Experiment harness: random hyperparameter search scored by k-fold
// cross-validation on the training range, multi-initialization final
// training, and width/depth sweeps with complexity reports.
//
// Every run seed is derived from the master seed and the run's indices, so
// results do not depend on `jobs` or scheduling order.
#pragma once

#include "fdsic/complexity.hpp"
#include "fdsic/serialize.hpp"
#include "fdsic/trainer.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace fdsic {

struct HyperParams {
  double lr = 1e-3;
  int batch_size = 32;
  friend bool operator==(const HyperParams&, const HyperParams&) = default;
};

struct HyperParamSpace {
  double lr_min = 1e-6;
  double lr_max = 0.05;
  int batch_min = 4;
  int batch_max = 64;
  int n_samples = 20;
  int k_folds = 5;
  int inits_per_fold = 5;
  /// Epochs per cross-validation run.
  int epochs = 50;

  void validate() const;
};

/// lr ~ unif[lr_min, lr_max], batch ~ unif{batch_min..batch_max}.
std::vector<HyperParams> sample_hyperparams(const HyperParamSpace& space, std::uint64_t seed);

/// k contiguous, disjoint folds covering `range`; the first (size mod k) folds get one extra sample.
std::vector<IndexRange> fold_ranges(IndexRange range, int k);

struct CandidateScore {
  HyperParams hp;
  std::vector<double> scores;  // one per (fold, init); NaN marks a diverged run
  double mean = 0.0;
  bool diverged = false;  // any run diverged; such candidates are never chosen
};

struct SearchResult {
  HyperParams best;
  std::vector<CandidateScore> candidates;  // in sampling order
};

/// Highest mean wins; ties go to the lower lr, then the smaller batch.
/// Throws NumericalError naming `what` if every candidate diverged.
HyperParams select_best(const std::vector<CandidateScore>& candidates, const std::string& what);

struct RunControl {
  int jobs = 1;
  /// Optional progress sink, called from the coordinating thread only.
  std::function<void(const std::string&)> log;
};

SearchResult hyperparam_search(const NetSpec& spec, const Dataset& data, const HyperParamSpace& space,
                               std::uint64_t seed, const RunControl& ctl = {});

struct EpochSummary {
  int epoch = 0;
  double mean_db = 0.0;
  double std_db = 0.0;
  double mean_nonlinear_db = 0.0;
};

struct FinalEval {
  std::vector<double> values;  // final-epoch test cancellation per init; NaN if diverged
  double mean = 0.0;
  double std = 0.0;  // population standard deviation over non-diverged inits
  double min = 0.0;
  double max = 0.0;
  int diverged = 0;
  Json best_model;  // serialized model of the best init
  std::vector<EpochSummary> history;
};

/// Trains `n_inits` models with seeds derived from (seed, init index); a
/// polynomial spec is fitted once by least squares and repeated.
FinalEval final_eval(const CancellerSpec& spec, const Dataset& data, const HyperParams& hp, int n_inits, int epochs,
                     std::uint64_t seed, const RunControl& ctl = {});

struct SweepConfig {
  std::vector<CancellerSpec> specs;
  HyperParamSpace search;
  int final_inits = 20;
  int epochs = 50;

  void validate() const;
  /// FFNN/RNN widths 2..20 step 2 shallow and W-W-W, CVNN 1..10 shallow and W-W-W, poly P=3,5,7,9; L=13.
  static SweepConfig full();
  /// Same families on widths {2,6,10} real / {1,3,5,7} complex with a reduced search budget.
  static SweepConfig desk();
};

struct SweepEntry {
  std::string spec;
  ComplexityReport complexity;
  std::optional<HyperParams> hp;  // neural specs only
  FinalEval result;
  std::string error;  // non-empty when this entry failed
};

struct SweepReport {
  std::uint64_t seed = 0;
  std::vector<SweepEntry> entries;
};

SweepReport run_sweep(const SweepConfig& cfg, const Dataset& data, std::uint64_t seed, const RunControl& ctl = {});

Json to_json(const HyperParamSpace& space);
HyperParamSpace hyperparam_space_from_json(const Json& j, const HyperParamSpace& base = {});
Json to_json(const SweepConfig& cfg);
SweepConfig sweep_config_from_json(const Json& j, const SweepConfig& base);

Json to_json(const SearchResult& r);
Json to_json(const FinalEval& r);
Json to_json(const SweepReport& r);
SweepReport sweep_report_from_json(const Json& j);

/// One row per spec: spec,flops,params,mean_db,std_db,lr,batch_size (plus diverged, error).
std::string sweep_csv(const SweepReport& r);
/// epoch,mean_db,std_db,mean_nonlinear_db.
std::string history_csv(const std::vector<EpochSummary>& history);

/// Runs fn(0..n-1) on up to `jobs` threads; rethrows the first exception by index.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace fdsic
