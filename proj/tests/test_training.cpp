// SPDX-License-Identifier: Apache-2.0
#include "fdsic/adam.hpp"
#include "fdsic/poly.hpp"
#include "fdsic/serialize.hpp"
#include "fdsic/trainer.hpp"
#include "test_support.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace fdsic;
using namespace fdsic::testing;

namespace {

OfdmConfig small_ofdm(int frames = 4) {
  OfdmConfig c;
  c.n_frames = frames;
  return c;
}

const Dataset& default_dataset() {
  static const Dataset d = synthesize_dataset(OfdmConfig{}, ImpairmentConfig::defaults(), 1);
  return d;
}

}  // namespace

TEST_CASE("Adam first step moves every parameter by lr against the gradient sign", "[training]") {
  Rng rng(1);
  RVector p = random_matrix<double>(50, 1, rng).col(0);
  RVector g = random_matrix<double>(50, 1, rng, 10.0).col(0);
  g(0) = 1e-3;
  g(1) = -250.0;
  const RVector before = p;
  AdamState s = AdamState::for_size(p.size(), 1e-3);
  adam_step(s, p, g);
  CHECK(s.step == 1);
  for (Index k = 0; k < p.size(); ++k) {
    const double expected = -1e-3 * (g(k) > 0 ? 1.0 : -1.0);
    CHECK(std::abs((p(k) - before(k)) - expected) <= 1e-6);
  }
}

TEST_CASE("Adam leaves parameters alone under zero gradients", "[training]") {
  Rng rng(2);
  RVector p = random_matrix<double>(10, 1, rng).col(0);
  const RVector before = p;
  AdamState s = AdamState::for_size(p.size(), 0.01);
  for (int i = 0; i < 5; ++i) adam_step(s, p, RVector::Zero(10));
  CHECK(p == before);
}

TEST_CASE("Adam converges on a quadratic bowl", "[training]") {
  RVector p = RVector::Constant(3, 2.0);
  AdamState s = AdamState::for_size(3, 0.05);
  for (int i = 0; i < 2000; ++i) {
    const RVector g = 2.0 * (p - RVector::Ones(3));
    adam_step(s, p, g);
  }
  CHECK((p - RVector::Ones(3)).norm() < 1e-3);
}

TEST_CASE("window features", "[training]") {
  CVector x(4);
  x << Complex{1, 2}, Complex{3, 4}, Complex{5, 6}, Complex{7, 8};
  const CMatrix c = complex_window_features(x, 2);
  REQUIRE(c.rows() == 2);
  REQUIRE(c.cols() == 4);
  CHECK(c(0, 2) == x(2));
  CHECK(c(1, 2) == x(1));
  CHECK(c(1, 0) == Complex{});
  const RMatrix r = real_window_features(x, 2);
  REQUIRE(r.rows() == 4);
  CHECK(r(0, 3) == 7.0);
  CHECK(r(1, 3) == 8.0);
  CHECK(r(2, 3) == 5.0);
  CHECK(r(3, 3) == 6.0);
}

TEST_CASE("training is deterministic for a fixed seed", "[training]") {
  const Dataset d = synthesize_dataset(small_ofdm(2), ImpairmentConfig::defaults(), 3);
  const LinearCanceller lin = fit_linear(d.x, d.y, d.train_range, 13);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.seed = 9;
  for (const NetSpec& spec : {NetSpec::ffnn({4}), NetSpec::cvnn({3}), NetSpec::rnn({3})}) {
    const TrainResult a = train(spec, d, lin, cfg);
    const TrainResult b = train(spec, d, lin, cfg);
    CHECK(to_json(a.model.params) == to_json(b.model.params));
    REQUIRE(a.history.size() == 2);
    CHECK(a.history.back().eval_total_db == b.history.back().eval_total_db);
  }
}

TEST_CASE("training loss decreases on a learnable toy problem", "[training]") {
  const Dataset d = synthesize_dataset(small_ofdm(2), ImpairmentConfig::defaults(), 4);
  const LinearCanceller lin = fit_linear(d.x, d.y, d.train_range, 13);
  TrainConfig cfg;
  cfg.epochs = 6;
  cfg.seed = 1;
  const TrainResult r = train(NetSpec::cvnn({5}), d, lin, cfg);
  REQUIRE(r.history.size() == 6);
  CHECK(r.history.back().train_loss < r.history.front().train_loss);
  CHECK(r.history.back().eval_total_db > r.history.front().eval_total_db);
}

TEST_CASE("composed canceller special cases", "[training]") {
  const Dataset d = synthesize_dataset(small_ofdm(2), ImpairmentConfig::defaults(), 5);
  const LinearCanceller lin = fit_linear(d.x, d.y, d.train_range, 13);
  const std::vector<Index> test_idx = range_indices(d.test_range);
  const CVector lin_hat = linear_predict(lin, d.x.samples, d.test_range);
  const double linear_db = cancellation_db(d.y.samples.segment(d.test_range.begin, d.test_range.size()),
                                           d.y.samples.segment(d.test_range.begin, d.test_range.size()) - lin_hat);

  SECTION("zero network equals the linear canceller") {
    for (const NetSpec& spec : {NetSpec::ffnn({3}), NetSpec::cvnn({3}), NetSpec::rnn({3})}) {
      TrainedCanceller m{spec, lin, zero_params(spec), 1.0, {}, {}};
      CHECK(std::abs(evaluate(m, d, d.test_range) - linear_db) < 1e-9);
    }
  }
  SECTION("prediction scales with the stored target scale") {
    const NetSpec spec = NetSpec::cvnn({3});
    TrainedCanceller m{spec, LinearCanceller::zeros(13), init_params(spec, 2), 1.0, {}, {}};
    const CVector a = predict(m, d.x.samples, test_idx);
    m.target_scale = 2.5;
    const CVector b = predict(m, d.x.samples, test_idx);
    CHECK((b - 2.5 * a).norm() <= 1e-12 * b.norm());
  }
  SECTION("perfect prediction hits the cap") {
    CVector y_hat(static_cast<Index>(test_idx.size()));
    for (std::size_t i = 0; i < test_idx.size(); ++i) y_hat(static_cast<Index>(i)) = d.y.samples(test_idx[i]);
    CHECK(evaluate_prediction(d.y, test_idx, y_hat) == kCancellationCapDb);
  }
  SECTION("linear-only composition matches the P=1 polynomial") {
    const PolyModel p = as_poly_model(lin);
    const CVector poly_hat = poly_predict(p, d.x.samples, d.test_range);
    CHECK((poly_hat - lin_hat).norm() <= 1e-9 * lin_hat.norm());
  }
}

TEST_CASE("networks add nothing on linear data", "[training]") {
  ImpairmentConfig imp = ImpairmentConfig::linear_only();
  imp.si_channel_taps = ImpairmentConfig::defaults().si_channel_taps;
  imp.noise_power_db = -50.0;
  const Dataset d = synthesize_dataset(small_ofdm(4), imp, 6);
  const LinearCanceller lin = fit_linear(d.x, d.y, d.train_range, 13);
  const double linear_db = evaluate(TrainedCanceller{NetSpec::cvnn({3}), lin, zero_params(NetSpec::cvnn({3})), 1.0, {}, {}},
                                    d, d.test_range);
  TrainConfig cfg;
  cfg.epochs = 10;
  cfg.seed = 2;
  const TrainResult r = train(NetSpec::cvnn({7}), d, lin, cfg);
  INFO("linear " << linear_db << " dB, composed " << r.history.back().eval_total_db << " dB");
  CHECK(r.history.back().eval_total_db <= linear_db + 0.5);
}

TEST_CASE("CVNN(7) beats linear cancellation on the default dataset", "[training]") {
  const Dataset& d = default_dataset();
  const LinearCanceller lin = fit_linear(d.x, d.y, d.train_range, 13);
  const double linear_db = evaluate(TrainedCanceller{NetSpec::cvnn({7}), lin, zero_params(NetSpec::cvnn({7})), 1.0, {}, {}},
                                    d, d.test_range);
  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.seed = 1;
  const TrainResult r = train(NetSpec::cvnn({7}), d, lin, cfg);
  INFO("linear " << linear_db << " dB, composed " << r.history.back().eval_total_db << " dB");
  CHECK(r.history.back().eval_total_db >= linear_db + 4.0);
  CHECK(std::abs(evaluate(r.model, d, d.test_range) - r.history.back().eval_total_db) < 1e-9);
}

TEST_CASE("training configuration validation", "[training]") {
  TrainConfig cfg;
  cfg.lr = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.lr = 0.1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.epochs = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
