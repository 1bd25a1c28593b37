// SPDX-License-Identifier: Apache-2.0
#include "fdsic/signal.hpp"

#include "fdsic/rng.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <numbers>
#include <string>

namespace fdsic {

void ComplexSignal::validate() const {
  if (samples.size() < 1) throw std::invalid_argument("ComplexSignal: empty signal");
  if (!samples.allFinite()) throw std::invalid_argument("ComplexSignal: non-finite sample");
  if (!(sample_rate_hz > 0.0)) throw std::invalid_argument("ComplexSignal: sample rate must be positive");
}

void OfdmConfig::validate() const {
  if (n_carriers < 2) throw ConfigError("ofdm.n_carriers must be >= 2");
  if (occupied_carriers < 1 || occupied_carriers >= n_carriers)
    throw ConfigError("ofdm.occupied_carriers must lie in [1, n_carriers)");
  if (cp_len < 0 || cp_len >= n_carriers) throw ConfigError("ofdm.cp_len must lie in [0, n_carriers)");
  if (n_frames < 1) throw ConfigError("ofdm.n_frames must be >= 1");
  if (!(sample_rate_hz > 0.0)) throw ConfigError("ofdm.sample_rate_hz must be positive");
}

void ImpairmentConfig::validate(bool allow_leading_zero_tap) const {
  if (!(std::abs(k2) < std::abs(k1))) throw ConfigError("impairments: |k2| must be < |k1|");
  if (!pa_coeffs.contains(1)) throw ConfigError("impairments.pa_coeffs must contain p=1");
  for (const auto& [p, a] : pa_coeffs) {
    if (p < 1 || p % 2 == 0) throw ConfigError("impairments.pa_coeffs: order " + std::to_string(p) + " is not odd");
    if (!std::isfinite(a.real()) || !std::isfinite(a.imag())) throw ConfigError("impairments.pa_coeffs: non-finite");
  }
  if (si_channel_taps.size() == 0) throw ConfigError("impairments.si_channel_taps must be non-empty");
  if (!allow_leading_zero_tap && si_channel_taps(0) == Complex{}) throw ConfigError("impairments.si_channel_taps[0] must be nonzero");
  if (!si_channel_taps.allFinite()) throw ConfigError("impairments.si_channel_taps: non-finite");
  if (std::isnan(noise_power_db) || noise_power_db == std::numeric_limits<double>::infinity())
    throw ConfigError("impairments.noise_power_db must be finite or -inf");
}

ImpairmentConfig ImpairmentConfig::defaults() {
  ImpairmentConfig imp;
  imp.k1 = Complex{1.0, 0.0};
  imp.k2 = std::polar(std::pow(10.0, -44.0 / 20.0), 0.4);
  // |a3|^2 E|x|^6 ~ -35 dB for near-Gaussian OFDM (E|x|^6 ~ 5.7); compressive with mild AM/PM
  imp.pa_coeffs = {{1, Complex{1.0, 0.0}}, {3, std::polar(0.00745, std::numbers::pi - 0.35)}};
  imp.si_channel_taps.resize(4);
  imp.si_channel_taps << std::polar(1.0, 0.0), std::polar(0.45, 1.1), std::polar(0.2, -0.7), std::polar(0.09, 2.3);
  imp.noise_power_db = -50.0;
  return imp;
}

ImpairmentConfig ImpairmentConfig::linear_only() {
  ImpairmentConfig imp = defaults();
  imp.k2 = Complex{};
  imp.pa_coeffs = {{1, Complex{1.0, 0.0}}};
  imp.noise_power_db = -std::numeric_limits<double>::infinity();
  return imp;
}

void Dataset::validate() const {
  x.validate();
  y.validate();
  if (x.size() != y.size()) throw std::invalid_argument("Dataset: x and y lengths differ");
  const bool tiled = (train_range.begin == 0 && train_range.end == test_range.begin && test_range.end == x.size()) ||
                     (test_range.begin == 0 && test_range.end == train_range.begin && train_range.end == x.size());
  if (!tiled || train_range.size() == 0 || test_range.size() == 0)
    throw std::invalid_argument("Dataset: train/test ranges must be disjoint, non-empty and cover all samples");
}

ComplexSignal generate_ofdm_frame(const OfdmConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const int n = cfg.n_carriers;
  const int n_pos = (cfg.occupied_carriers + 1) / 2;
  const int n_neg = cfg.occupied_carriers / 2;

  Rng rng(seed);
  std::uniform_int_distribution<int> quadrant(0, 3);
  Eigen::FFT<double> fft;

  ComplexSignal out;
  out.sample_rate_hz = cfg.sample_rate_hz;
  out.samples.resize(static_cast<Index>(cfg.n_frames) * cfg.samples_per_frame());

  std::vector<Complex> freq(n);
  std::vector<Complex> time(n);
  const auto qpsk = [&] {
    return std::polar(1.0, std::numbers::pi / 4 + quadrant(rng) * std::numbers::pi / 2);
  };
  for (int f = 0; f < cfg.n_frames; ++f) {
    std::fill(freq.begin(), freq.end(), Complex{});
    for (int k = 1; k <= n_pos; ++k) freq[k] = qpsk();
    for (int k = n - n_neg; k < n; ++k) freq[k] = qpsk();
    fft.inv(time, freq);
    const Index base = static_cast<Index>(f) * cfg.samples_per_frame();
    for (int i = 0; i < cfg.cp_len; ++i) out.samples(base + i) = time[n - cfg.cp_len + i];
    for (int i = 0; i < n; ++i) out.samples(base + cfg.cp_len + i) = time[i];
  }
  out.samples /= std::sqrt(mean_power(out.samples));
  return out;
}

ComplexSignal apply_tx_impairments(const ComplexSignal& x, const ImpairmentConfig& imp) {
  x.validate();
  imp.validate();
  ComplexSignal out{CVector(x.size()), x.sample_rate_hz};
  for (Index n = 0; n < x.size(); ++n) {
    const Complex iq = imp.k1 * x.samples(n) + imp.k2 * std::conj(x.samples(n));
    const double mag = std::abs(iq);
    Complex pa{};
    for (const auto& [p, alpha] : imp.pa_coeffs) pa += alpha * iq * std::pow(mag, p - 1);
    out.samples(n) = pa;
  }
  return out;
}

ComplexSignal apply_si_channel(const ComplexSignal& x_pa, const ImpairmentConfig& imp, std::uint64_t noise_seed) {
  x_pa.validate();
  imp.validate(true);
  if (imp.si_channel_taps.isZero(0.0)) throw ConfigError("impairments.si_channel_taps must not be all zero");
  const Index n_samples = x_pa.size();
  const Index n_taps = imp.si_channel_taps.size();
  CVector si = CVector::Zero(n_samples);
  for (Index n = 0; n < n_samples; ++n)
    for (Index l = 0; l < n_taps && l <= n; ++l) si(n) += imp.si_channel_taps(l) * x_pa.samples(n - l);

  const double si_power = mean_power(si);
  if (!(si_power > 0.0)) throw std::invalid_argument("apply_si_channel: SI component has zero power");
  si /= std::sqrt(si_power);

  if (std::isfinite(imp.noise_power_db)) {
    const double sigma = std::sqrt(std::pow(10.0, imp.noise_power_db / 10.0) / 2.0);
    Rng rng(noise_seed);
    std::normal_distribution<double> gauss(0.0, sigma);
    for (Index n = 0; n < n_samples; ++n) {
      const double re = gauss(rng);
      const double im = gauss(rng);
      si(n) += Complex{re, im};
    }
  }
  return ComplexSignal{std::move(si), x_pa.sample_rate_hz};
}

std::pair<IndexRange, IndexRange> split_ranges(Index n, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train_fraction must lie in (0, 1)");
  const auto cut = static_cast<Index>(std::llround(train_fraction * static_cast<double>(n)));
  if (cut <= 0 || cut >= n) throw ConfigError("dataset too short for the requested split");
  return {IndexRange{0, cut}, IndexRange{cut, n}};
}

Dataset synthesize_dataset(const OfdmConfig& ofdm, const ImpairmentConfig& imp, std::uint64_t seed,
                           double train_fraction) {
  Dataset ds;
  ds.x = generate_ofdm_frame(ofdm, derive_seed(seed, {0}));
  ds.y = apply_si_channel(apply_tx_impairments(ds.x, imp), imp, derive_seed(seed, {1}));
  std::tie(ds.train_range, ds.test_range) = split_ranges(ds.size(), train_fraction);
  return ds;
}

double mean_power(const Eigen::Ref<const CVector>& v) {
  return v.size() == 0 ? 0.0 : v.squaredNorm() / static_cast<double>(v.size());
}

double cancellation_db(const Eigen::Ref<const CVector>& y, const Eigen::Ref<const CVector>& e) {
  if (y.size() != e.size() || y.size() < 1)
    throw std::invalid_argument("cancellation_db: signals must have equal, non-zero length");
  const double ey = y.squaredNorm();
  const double ee = e.squaredNorm();
  if (ee == 0.0) return kCancellationCapDb;
  return std::min(kCancellationCapDb, 10.0 * std::log10(ey / ee));
}

double cancellation_db(const ComplexSignal& y, const ComplexSignal& e) {
  return cancellation_db(y.samples, e.samples);
}

}  // namespace fdsic
