// SPDX-License-Identifier: Apache-2.0
//
// Acceptance checks. `acceptance` runs every criterion, `acceptance N` runs
// criterion N only. Each criterion prints one PASS/FAIL line; the exit status
// is nonzero if any of them failed.
#include "cli.hpp"
#include "fdsic/adam.hpp"
#include "fdsic/complexity.hpp"
#include "fdsic/harness.hpp"
#include "fdsic/poly.hpp"
#include "fdsic/serialize.hpp"
#include "test_support.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <thread>

using namespace fdsic;
using namespace fdsic::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string details;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

int jobs() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

const Dataset& default_dataset() {
  static const Dataset d = synthesize_dataset(OfdmConfig{}, ImpairmentConfig::defaults(), 1);
  return d;
}

double linear_only_db(const Dataset& d) {
  const LinearCanceller lin = fit_linear(d.x, d.y, d.train_range, 13);
  return evaluate_prediction(d.y, range_indices(d.test_range), linear_predict(lin, d.x.samples, d.test_range));
}

// ---------------------------------------------------------------------------

Outcome parameter_counts() {
  const std::vector<std::pair<CancellerSpec, std::int64_t>> rows = {
      {PolySpec{5, 13}, 312},         {NetSpec::ffnn({18}), 550},       {NetSpec::ffnn({10, 10, 10}), 538},
      {NetSpec::cvnn({7}), 238},      {NetSpec::cvnn({4, 4, 4}), 228},  {NetSpec::rnn({20}), 528},
      {NetSpec::rnn({16, 16, 16}), 1420}};
  // reference relative changes against 312
  const double reference_pct[] = {0.0, 76.3, 72.4, -23.7, -26.9, 69.2, 355.1};
  Outcome o{true, ""};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::int64_t got = count_params(rows[i].first);
    const double pct = percent_change(got, 312);
    const bool ok = got == rows[i].second && std::abs(pct - reference_pct[i]) < 0.05;
    o.pass = o.pass && ok;
    o.details += spec_id(rows[i].first) + "=" + std::to_string(got) + (ok ? " " : "(!) ");
  }
  return o;
}

Outcome flop_counts() {
  const std::int64_t base = count_flops(PolySpec{5, 13});
  double worst = std::abs(static_cast<double>(base) - 1556.0) / 1556.0;
  std::string details = "poly=" + std::to_string(base);
  const std::vector<std::pair<NetSpec, double>> rows = {
      {NetSpec::ffnn({18}), -27.5},      {NetSpec::ffnn({10, 10, 10}), -29.8}, {NetSpec::cvnn({7}), -27.9},
      {NetSpec::cvnn({4, 4, 4}), -33.7}, {NetSpec::rnn({20}), -30.5},          {NetSpec::rnn({16, 16, 16}), 82.4}};
  for (const auto& [spec, pct] : rows) {
    const double reference = 1556.0 * (1.0 + pct / 100.0);
    const std::int64_t got = count_flops(spec);
    worst = std::max(worst, std::abs(static_cast<double>(got) - reference) / reference);
    details += " " + spec_id(spec) + "=" + std::to_string(got) + fmt("(%+.1f%%)", percent_change(got, base));
  }
  return {worst <= 0.03, details + fmt("; worst deviation %.2f%%", 100.0 * worst)};
}

template <typename Net>
double worst_gradient_error(const NetSpec& spec, std::uint64_t seed, double modrelu_low = 0.0) {
  Rng rng(seed);
  double worst = 0.0;
  for (int pt = 0; pt < 100; ++pt) {
    Net net = Net::init(spec, rng());
    randomize(net, rng, 0.6);
    if constexpr (!std::is_same_v<Net, RnnNetwork>) {
      for (auto& l : net.layers)
        for (Index i = 0; i < l.modrelu_bias.size(); ++i)
          l.modrelu_bias(i) = std::uniform_real_distribution<double>(modrelu_low, 0.3)(rng);
    }
    const Index arity = spec.input_arity();
    const auto f = random_matrix<typename Net::scalar_type>(arity, 5, rng);
    const CVector target = random_cvector(5, rng);
    worst = std::max(worst, check_gradients(net, f, target).max_rel_error);
  }
  return worst;
}

Outcome gradient_correctness() {
  double worst = 0.0;
  std::string worst_case;
  int combos = 0;
  const auto record = [&](const NetSpec& spec, double e) {
    ++combos;
    if (e >= worst) {
      worst = e;
      worst_case = spec_id(spec);
    }
  };
  for (Activation a : {Activation::Tanh, Activation::ReLU})
    for (const auto& w : std::vector<std::vector<int>>{{4}, {3, 3}}) {
      const NetSpec s = NetSpec::ffnn(w, 3, a);
      record(s, worst_gradient_error<RealNetwork>(s, 100 + combos));
    }
  for (Activation a : {Activation::AmpPhase, Activation::Cardioid, Activation::ModReLU, Activation::CReLU,
                       Activation::ZReLU})
    for (const auto& w : std::vector<std::vector<int>>{{4}, {3, 2}}) {
      const NetSpec s = NetSpec::cvnn(w, 3, a);
      record(s, worst_gradient_error<ComplexNetwork>(s, 100 + combos, -1.0));
    }
  for (const auto& w : std::vector<std::vector<int>>{{4}, {3, 3}, {2, 3, 2}}) {
    const NetSpec s = NetSpec::rnn(w, 4);
    record(s, worst_gradient_error<RnnNetwork>(s, 100 + combos));
  }
  return {worst <= 1e-5, std::to_string(combos) + " combinations x 100 points, worst relative error " +
                             fmt("%.2e", worst) + " (" + worst_case + ")"};
}

Outcome ls_identifiability() {
  const int P = 5, L = 13;
  OfdmConfig o;
  o.n_frames = 4;
  const ComplexSignal x = generate_ofdm_frame(o, 11);
  Rng rng(12);
  PolyModel truth = PolyModel::zeros(P, L);
  truth.coeffs = random_cvector(truth.coeffs.size(), rng);
  // target from the model sum written out term by term
  ComplexSignal y{CVector::Zero(x.size()), x.sample_rate_hz};
  for (Index n = 0; n < x.size(); ++n)
    for (int l = 0; l < L && l <= n; ++l) {
      const Complex v = x.samples(n - l);
      for (int p = 1; p <= P; p += 2)
        for (int q = 0; q <= p; ++q) y.samples(n) += truth.coeff(p, q, l) * std::pow(v, q) * std::pow(std::conj(v), p - q);
    }
  const auto [train, test] = split_ranges(x.size(), 0.9);
  const PolyModel fit = fit_poly(x, y, train, P, L);
  const double rel = (fit.coeffs - truth.coeffs).norm() / truth.coeffs.norm();
  const double db = evaluate_prediction(y, range_indices(test), poly_predict(fit, x.samples, test));
  return {rel <= 1e-8 && db >= 100.0, "coefficient relative error " + fmt("%.2e", rel) + ", cancellation " +
                                          fmt("%.1f dB", db)};
}

Outcome noise_limited_bound() {
  const Dataset& d = default_dataset();
  const PolyModel fit = fit_poly(d.x, d.y, d.train_range, 5, 13);
  const double db = evaluate_prediction(d.y, range_indices(d.test_range), poly_predict(fit, d.x.samples, d.test_range));
  // noise at -50 dB of unit SI power
  const double bound = 10.0 * std::log10(1.0 / std::pow(10.0, ImpairmentConfig::defaults().noise_power_db / 10.0));
  return {std::abs(db - bound) <= 1.0, "P=5 test cancellation " + fmt("%.2f dB", db) + " vs bound " + fmt("%.1f dB", bound)};
}

struct InitStats {
  double mean_total = 0.0;
  double mean_nonlinear = 0.0;
  int diverged = 0;
};

InitStats train_inits(const NetSpec& spec, const Dataset& d, bool linear_stage, int n_inits, std::uint64_t seed) {
  const LinearCanceller lin = fit_linear(d.x, d.y, d.train_range, spec.L);
  std::vector<double> total(static_cast<std::size_t>(n_inits), std::nan(""));
  std::vector<double> nonlinear = total;
  parallel_for(static_cast<std::size_t>(n_inits), jobs(), [&](std::size_t i) {
    TrainConfig cfg;  // lr 1e-3, batch 32, 50 epochs
    cfg.seed = derive_seed(seed, {i});
    try {
      const TrainResult r = train(spec, d, lin, cfg, TrainOptions{.linear_stage = linear_stage, .record_history = true});
      total[i] = r.history.back().eval_total_db;
      nonlinear[i] = r.history.back().eval_nonlinear_db;
    } catch (const NumericalError&) {
    }
  });
  InitStats s;
  int ok = 0;
  for (std::size_t i = 0; i < total.size(); ++i) {
    if (std::isnan(total[i])) {
      ++s.diverged;
      continue;
    }
    s.mean_total += total[i];
    s.mean_nonlinear += nonlinear[i];
    ++ok;
  }
  s.mean_total = ok > 0 ? s.mean_total / ok : std::nan("");
  s.mean_nonlinear = ok > 0 ? s.mean_nonlinear / ok : std::nan("");
  return s;
}

Outcome linear_vs_full_training() {
  const Dataset& d = default_dataset();
  const double lin_db = linear_only_db(d);
  Outcome o{true, "linear " + fmt("%.2f dB", lin_db) + ";"};
  for (const NetSpec& spec : {NetSpec::ffnn({18}), NetSpec::ffnn({10, 10, 10}), NetSpec::cvnn({7}),
                              NetSpec::cvnn({4, 4, 4})}) {
    const InitStats raw = train_inits(spec, d, false, 20, 60);
    const InitStats full = train_inits(spec, d, true, 20, 61);
    const bool raw_ok = raw.diverged == 0 && std::abs(raw.mean_total - lin_db) <= 1.0;
    const bool full_ok = full.diverged == 0 && full.mean_total >= lin_db + 4.0;
    o.pass = o.pass && raw_ok && full_ok;
    o.details += " " + spec_id(spec) + " raw " + fmt("%+.2f", raw.mean_total - lin_db) + (raw_ok ? "" : "(!)") +
                 " y_nl " + fmt("%+.2f", full.mean_total - lin_db) + (full_ok ? "" : "(!)") + ";";
  }
  o.details += " dB vs linear, 20-init means";
  return o;
}

Outcome activation_ordering() {
  const Dataset& d = default_dataset();
  std::map<Activation, double> nl;
  std::string details;
  for (Activation a : {Activation::AmpPhase, Activation::Cardioid, Activation::ModReLU, Activation::CReLU,
                       Activation::ZReLU}) {
    const InitStats s = train_inits(NetSpec::cvnn({10}, 13, a), d, true, 20, 70);
    nl[a] = s.diverged == 0 ? s.mean_nonlinear : std::nan("");
    details += std::string(to_string(a)) + " " + fmt("%.2f", nl[a]) + " ";
  }
  bool ok = true;
  for (Activation hi : {Activation::CReLU, Activation::Cardioid})
    for (Activation lo : {Activation::ModReLU, Activation::ZReLU}) ok = ok && nl[hi] >= nl[lo] + 2.0;
  return {ok, details + "dB nonlinear cancellation, 20-init means"};
}

bool is_cvnn(const std::string& id) { return id.rfind("cvnn:", 0) == 0; }
bool is_real_nn(const std::string& id) { return id.rfind("ffnn:", 0) == 0 || id.rfind("rnn:", 0) == 0; }

Outcome cvnn_parameter_efficiency() {
  const SweepReport r = run_sweep(SweepConfig::desk(), default_dataset(), 1, {jobs(), {}});
  Outcome o{true, ""};
  int cvnns = 0;
  for (const auto& e : r.entries) {
    if (!e.error.empty()) {
      o.pass = false;
      o.details += e.spec + " failed: " + e.error + "; ";
    }
  }
  for (const auto& c : r.entries) {
    if (!is_cvnn(c.spec) || !c.error.empty()) continue;
    ++cvnns;
    for (const auto& x : r.entries) {
      if (!is_real_nn(x.spec) || !x.error.empty()) continue;
      if (x.complexity.params < c.complexity.params && x.result.mean >= c.result.mean) {
        o.pass = false;
        o.details += c.spec + " (" + std::to_string(c.complexity.params) + " params, " + fmt("%.2f dB", c.result.mean) +
                     ") dominated by " + x.spec + " (" + std::to_string(x.complexity.params) + ", " +
                     fmt("%.2f dB", x.result.mean) + "); ";
      }
    }
  }
  if (o.pass) o.details = std::to_string(cvnns) + " CVNN specs, none dominated by a real-valued spec";
  return o;
}

std::map<std::string, std::string> artifact_bytes(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().filename() == "manifest.json") continue;
    std::ifstream in(e.path(), std::ios::binary);
    files[fs::relative(e.path(), dir).string()] = {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  }
  return files;
}

Outcome determinism() {
  ScratchDir dir("acceptance_determinism");
  const std::string cfg = dir / "config.json";
  write_json_file(cfg, Json{{"version", 1},
                            {"dataset", {{"ofdm", {{"n_frames", 2}}}}},
                            {"train", {{"epochs", 3}}},
                            {"search", {{"n_samples", 2}, {"k_folds", 2}, {"inits_per_fold", 1}, {"epochs", 2}}},
                            {"sweep", {{"specs", {"poly:P=3,L=13", "ffnn:3", "cvnn:2", "rnn:2"}}, {"final_inits", 2},
                                       {"epochs", 2}}}});
  const std::vector<std::vector<std::string>> commands = {
      {"generate"},
      {"fit-poly", "--P", "5", "--L", "13"},
      {"fit-linear", "--L", "13"},
      {"train", "--spec", "cvnn:3"},
      {"train", "--spec", "rnn:3", "--no-linear"},
      {"search", "--spec", "ffnn:3"},
      {"--jobs", "2", "sweep"},
      {"complexity", "--spec", "rnn:16-16-16"}};
  std::ostringstream sink;
  int checked = 0;
  std::string problems;
  for (std::size_t i = 0; i < commands.size(); ++i) {
    const auto run_into = [&](const std::string& out, std::vector<std::string> args) {
      args.insert(args.begin(), {"--config", cfg, "--seed", "5", "--out", out});
      return cli::run(args, sink, sink);
    };
    const std::string a = dir / ("a" + std::to_string(i));
    const std::string b = dir / ("b" + std::to_string(i));
    const std::string c = dir / ("c" + std::to_string(i));
    int rc = run_into(a, commands[i]);
    rc = std::max(rc, run_into(b, commands[i]));
    rc = std::max(rc, cli::run({"rerun", "--manifest", a + "/manifest.json", "--out", c}, sink, sink));
    if (rc != 0) {
      problems += commands[i].back() + " exited " + std::to_string(rc) + "; ";
      continue;
    }
    const auto fa = artifact_bytes(a);
    if (fa.empty() || fa != artifact_bytes(b) || fa != artifact_bytes(c)) problems += commands[i].front() + " differs; ";
    checked += static_cast<int>(fa.size());
  }
  // report re-rendering from the stored sweep
  const std::string sweep_json = dir / "a6/sweep.json";
  if (cli::run({"report", "--in", sweep_json, "--out", dir / "r"}, sink, sink) != 0 ||
      artifact_bytes(dir / "r").at("sweep.csv") != artifact_bytes(dir / "a6").at("sweep.csv"))
    problems += "report differs; ";
  if (!problems.empty()) return {false, problems};
  return {true, std::to_string(commands.size()) + " commands run twice and rerun from manifest, " +
                    std::to_string(checked) + " artifacts byte-identical"};
}

Outcome adam_first_step() {
  // a real gradient from one network backward pass
  Rng rng(3);
  const NetSpec spec = NetSpec::cvnn({5}, 13, Activation::ModReLU);
  ComplexNetwork net = ComplexNetwork::init(spec, 4);
  randomize(net, rng, 0.5);
  ComplexNetwork::Tape tape;
  CMatrix seed;
  mse_loss<Complex>(net.forward(random_matrix<Complex>(13, 32, rng), tape), random_cvector(32, rng), &seed);
  const RVector grad = net.backward(tape, seed).pack(true);
  RVector theta = net.pack();
  const RVector before = theta;
  double worst = 0.0;
  for (double lr : {1e-3, 0.05, 1e-6}) {
    theta = before;
    AdamState s = AdamState::for_size(theta.size(), lr);
    adam_step(s, theta, grad);
    for (Index k = 0; k < theta.size(); ++k) {
      const double sign = grad(k) > 0 ? 1.0 : (grad(k) < 0 ? -1.0 : 0.0);
      worst = std::max(worst, std::abs((theta(k) - before(k)) + lr * sign));
    }
  }
  return {worst <= 1e-6, std::to_string(before.size()) + " parameters, max deviation from -lr*sign(g) " +
                             fmt("%.2e", worst)};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all = {
      {1, "parameter counts", parameter_counts},
      {2, "FLOP counts", flop_counts},
      {3, "gradient correctness", gradient_correctness},
      {4, "LS identifiability", ls_identifiability},
      {5, "noise-limited bound", noise_limited_bound},
      {6, "linear-vs-full training", linear_vs_full_training},
      {7, "activation ordering", activation_ordering},
      {8, "CVNN parameter efficiency", cvnn_parameter_efficiency},
      {9, "CLI determinism", determinism},
      {10, "Adam first step", adam_first_step},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));
  if (wanted.empty())
    for (const auto& c : criteria()) wanted.push_back(c.id);

  bool all_pass = true;
  for (int id : wanted) {
    const auto it = std::find_if(criteria().begin(), criteria().end(), [id](const Criterion& c) { return c.id == id; });
    if (it == criteria().end()) {
      std::cerr << "unknown criterion " << id << '\n';
      return 2;
    }
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = it->run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << it->id << ' ' << it->name << ": " << o.details
              << fmt(" (%.1f s)", secs) << std::endl;
    all_pass = all_pass && o.pass;
  }
  return all_pass ? 0 : 1;
}
