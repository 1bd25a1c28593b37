// SPDX-License-Identifier: Apache-2.0
#include "fdsic/rnn.hpp"
#include "test_support.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace fdsic;
using namespace fdsic::testing;

TEST_CASE("RNN shapes and parameter count", "[rnn]") {
  const RnnNetwork net = RnnNetwork::init(NetSpec::rnn({20}, 13), 1);
  REQUIRE(net.layers.size() == 1);
  CHECK(net.layers[0].input_weights.rows() == 20);
  CHECK(net.layers[0].input_weights.cols() == 2);
  CHECK(net.layers[0].recurrent_weights.rows() == 20);
  CHECK(net.layers[0].recurrent_weights.cols() == 20);
  CHECK(net.output_weights.rows() == 2);
  CHECK(net.steps == 13);
  // U(2 + U + 1) per first layer, U(U + U + 1) per stacked layer, 2U + 2 output
  for (const auto& widths : std::vector<std::vector<int>>{{20}, {16, 16, 16}, {3, 5}, {1}}) {
    Index expected = 0;
    int fan_in = 2;
    for (int u : widths) {
      expected += u * (fan_in + u + 1);
      fan_in = u;
    }
    expected += 2 * fan_in + 2;
    CHECK(RnnNetwork::zeros(NetSpec::rnn(widths)).parameter_count() == expected);
  }
  CHECK(RnnNetwork::init(NetSpec::rnn({4}), 7).pack() == RnnNetwork::init(NetSpec::rnn({4}), 7).pack());
}

TEST_CASE("RNN forward examples", "[rnn]") {
  SECTION("zero network outputs zero") {
    Rng rng(1);
    const RnnNetwork net = RnnNetwork::zeros(NetSpec::rnn({3}, 4));
    CHECK(net.forward(random_matrix<double>(8, 5, rng)).isZero(0.0));
  }
  SECTION("single unit follows the recursion by hand") {
    RnnNetwork net = RnnNetwork::zeros(NetSpec::rnn({1}, 3));
    net.layers[0].input_weights << 0.5, -0.25;
    net.layers[0].recurrent_weights << 0.8;
    net.layers[0].biases << 0.1;
    net.output_weights << 2.0, -1.0;
    net.output_biases << 0.3, 0.4;
    // features: x[n], x[n-1], x[n-2]; the recursion runs from x[n-2] forward
    RMatrix f(6, 1);
    f << 1.0, 2.0, -0.5, 0.3, 0.7, -1.1;
    double h = 0.0;
    for (int lag = 2; lag >= 0; --lag) h = std::tanh(0.5 * f(2 * lag, 0) - 0.25 * f(2 * lag + 1, 0) + 0.8 * h + 0.1);
    const RMatrix out = net.forward(f);
    CHECK(std::abs(out(0, 0) - (2.0 * h + 0.3)) < 1e-15);
    CHECK(std::abs(out(1, 0) - (-1.0 * h + 0.4)) < 1e-15);
  }
  SECTION("without recurrence only the newest sample matters") {
    Rng rng(2);
    RnnNetwork net = RnnNetwork::init(NetSpec::rnn({4}, 5), 3);
    net.layers[0].recurrent_weights.setZero();
    RMatrix f = random_matrix<double>(10, 3, rng);
    const RMatrix a = net.forward(f);
    f.bottomRows(8) = random_matrix<double>(8, 3, rng);
    CHECK((net.forward(f) - a).norm() < 1e-15);
  }
  SECTION("arity mismatch") {
    const RnnNetwork net = RnnNetwork::zeros(NetSpec::rnn({3}, 4));
    CHECK_THROWS_AS(net.forward(RMatrix::Zero(6, 1)), std::invalid_argument);
  }
}

TEST_CASE("RNN states stay inside (-1, 1)", "[rnn]") {
  Rng rng(3);
  RnnNetwork net = RnnNetwork::init(NetSpec::rnn({5, 4}, 6), 4);
  randomize(net, rng, 3.0);
  RnnNetwork::Tape tape;
  net.forward(random_matrix<double>(12, 20, rng, 5.0), tape);
  for (const auto& layer : tape.states)
    for (const auto& s : layer) CHECK(s.cwiseAbs().maxCoeff() <= 1.0);
}

TEST_CASE("BPTT gradients match finite differences", "[rnn]") {
  Rng rng(4);
  for (const auto& widths : std::vector<std::vector<int>>{{4}, {3, 3}, {2, 3, 2}}) {
    double worst = 0.0;
    for (int pt = 0; pt < 100; ++pt) {
      RnnNetwork net = RnnNetwork::init(NetSpec::rnn(widths, 4), rng());
      randomize(net, rng, 0.6);
      const RMatrix f = random_matrix<double>(8, 3, rng);
      const CVector target = random_cvector(3, rng);
      worst = std::max(worst, check_gradients(net, f, target).max_rel_error);
    }
    INFO("layers " << widths.size() << " worst relative error " << worst);
    CHECK(worst <= 1e-5);
  }
}

TEST_CASE("recurrent weights get no gradient for a one-step window", "[rnn]") {
  Rng rng(5);
  RnnNetwork net = RnnNetwork::init(NetSpec::rnn({4}, 1), 6);
  randomize(net, rng);
  RnnNetwork::Tape tape;
  RMatrix seed;
  mse_loss<double>(net.forward(random_matrix<double>(2, 5, rng), tape), random_cvector(5, rng), &seed);
  const RnnNetwork g = net.backward(tape, seed);
  CHECK(g.layers[0].recurrent_weights.isZero(0.0));
  CHECK_FALSE(g.layers[0].input_weights.isZero(0.0));
}

TEST_CASE("RNN gradient is linear in the loss scale", "[rnn]") {
  Rng rng(6);
  RnnNetwork net = RnnNetwork::init(NetSpec::rnn({3, 3}, 5), 7);
  randomize(net, rng);
  RnnNetwork::Tape tape;
  RMatrix seed;
  mse_loss<double>(net.forward(random_matrix<double>(10, 4, rng), tape), random_cvector(4, rng), &seed);
  const RVector g1 = net.backward(tape, seed).pack(true);
  const RVector g2 = net.backward(tape, 2.0 * seed).pack(true);
  CHECK((g2 - 2.0 * g1).norm() <= 1e-14 * g2.norm());
}

TEST_CASE("RNN pack and unpack are inverse", "[rnn]") {
  Rng rng(7);
  RnnNetwork net = RnnNetwork::init(NetSpec::rnn({3, 2}, 4), 1);
  randomize(net, rng);
  const RVector p = net.pack();
  RnnNetwork other = RnnNetwork::zeros(NetSpec::rnn({3, 2}, 4));
  other.unpack(p);
  CHECK(other.pack() == p);
  CHECK(other.forward(random_matrix<double>(8, 2, rng)).allFinite());
}
