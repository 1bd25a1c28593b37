// SPDX-License-Identifier: Apache-2.0
//
// Synthetic full-duplex self-interference data: QPSK-OFDM transmit frames,
// transmitter IQ/PA impairments, FIR SI channel with receiver noise, and the
// cancellation metric.
#pragma once

#include "fdsic/types.hpp"

#include <cstdint>
#include <limits>
#include <map>

namespace fdsic {

/// Reported by cancellation_db when the residual has zero energy.
inline constexpr double kCancellationCapDb = 300.0;

struct ComplexSignal {
  CVector samples;
  double sample_rate_hz = 20e6;

  [[nodiscard]] Index size() const { return samples.size(); }
  /// Throws std::invalid_argument on empty or non-finite samples.
  void validate() const;
};

struct OfdmConfig {
  int n_carriers = 1024;
  int occupied_carriers = 512;  // centered, DC excluded
  int cp_len = 256;
  int n_frames = 16;  // 16 * (1024 + 256) = 20480 samples
  double sample_rate_hz = 20e6;

  void validate() const;
  [[nodiscard]] Index samples_per_frame() const { return n_carriers + cp_len; }
};

struct ImpairmentConfig {
  Complex k1{1.0, 0.0};
  Complex k2{0.0, 0.0};
  std::map<int, Complex> pa_coeffs{{1, Complex{1.0, 0.0}}};
  CVector si_channel_taps = CVector::Ones(1);
  /// Relative to unit SI power; -inf disables noise.
  double noise_power_db = -std::numeric_limits<double>::infinity();

  /// Configs need a nonzero leading tap; direct channel calls may pass a pure delay.
  void validate(bool allow_leading_zero_tap = false) const;

  /// IQ image at -44 dB, third-order PA term ~35 dB below the linear term,
  /// 4 exponentially decaying channel taps, -50 dB noise floor.
  static ImpairmentConfig defaults();
  /// No IQ image, linear PA, default channel, noise disabled.
  static ImpairmentConfig linear_only();
};

struct Dataset {
  ComplexSignal x;
  ComplexSignal y;
  IndexRange train_range;
  IndexRange test_range;

  void validate() const;
  [[nodiscard]] Index size() const { return x.size(); }
};

ComplexSignal generate_ofdm_frame(const OfdmConfig& cfg, std::uint64_t seed);

/// Memoryless IQ mixer followed by an odd-order PA polynomial.
ComplexSignal apply_tx_impairments(const ComplexSignal& x, const ImpairmentConfig& imp);

/// FIR SI channel, normalized to unit SI power, plus circular complex Gaussian noise.
ComplexSignal apply_si_channel(const ComplexSignal& x_pa, const ImpairmentConfig& imp,
                               std::uint64_t noise_seed);

Dataset synthesize_dataset(const OfdmConfig& ofdm, const ImpairmentConfig& imp, std::uint64_t seed,
                           double train_fraction = 0.9);

/// Contiguous split: the first round(fraction * n) samples train, the rest test.
std::pair<IndexRange, IndexRange> split_ranges(Index n, double train_fraction);

/// 10 log10(sum |y|^2 / sum |e|^2); kCancellationCapDb when the residual is exactly zero.
double cancellation_db(const Eigen::Ref<const CVector>& y, const Eigen::Ref<const CVector>& e);
double cancellation_db(const ComplexSignal& y, const ComplexSignal& e);

double mean_power(const Eigen::Ref<const CVector>& v);

}  // namespace fdsic
