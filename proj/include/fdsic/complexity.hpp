// SPDX-License-Identifier: Apache-2.0
//
// Real-valued FLOP and parameter accounting per predicted sample.
//
// Conventions: complex multiply = 3 real mult + 5 real add (8), complex add = 2,
// one unit per activation use (a complex neuron counts once), polynomial basis
// functions are free. Neurons accumulate fan-in products plus one bias add.
// Neural cancellers include the linear canceller (L direct complex taps) and
// the final complex add combining the linear and nonlinear estimates.
#pragma once

#include "fdsic/net_spec.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace fdsic {

/// How a recurrent layer is charged per output sample.
enum class RecurrentFlops {
  /// One state update per new sample (streaming evaluation); matches the reference FLOP comparison.
  PerStep,
  /// All L steps re-run from a zero state for every output sample.
  Unrolled,
};

struct StageCost {
  std::string stage;
  std::int64_t flops = 0;
  std::int64_t params = 0;
};

struct ComplexityReport {
  std::string spec_id;
  std::int64_t flops = 0;
  std::int64_t params = 0;
  std::vector<StageCost> breakdown;
};

std::int64_t count_params(const CancellerSpec& spec);
std::int64_t count_flops(const CancellerSpec& spec, RecurrentFlops rnn = RecurrentFlops::PerStep);
ComplexityReport complexity_report(const CancellerSpec& spec, RecurrentFlops rnn = RecurrentFlops::PerStep);

/// Linear canceller alone: 8L + 2(L-1) FLOPs, 2L parameters.
StageCost linear_canceller_cost(int L);

/// Relative change of `value` against `baseline`, in percent.
double percent_change(std::int64_t value, std::int64_t baseline);

nlohmann::json to_json(const ComplexityReport& report);
/// Aligned-column table, one row per stage plus a total row.
std::string to_text_table(const ComplexityReport& report);

}  // namespace fdsic
