// SPDX-License-Identifier: Apache-2.0
#include "fdsic/harness.hpp"

#include "fdsic/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

namespace fdsic {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<Index> indices_excluding(IndexRange all, IndexRange hole) {
  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(all.size() - hole.size()));
  for (Index n = all.begin; n < all.end; ++n)
    if (!hole.contains(n)) out.push_back(n);
  return out;
}

std::string fmt(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

double number_from(const Json& j) { return j.is_null() ? kNaN : j.get<double>(); }

void log_line(const RunControl& ctl, const std::string& msg) {
  if (ctl.log) ctl.log(msg);
}

// mean, population std, min, max over finite entries
void summarize(FinalEval& r) {
  std::vector<double> ok;
  for (double v : r.values)
    if (std::isfinite(v)) ok.push_back(v);
  r.diverged = static_cast<int>(r.values.size() - ok.size());
  if (ok.empty()) {
    r.mean = r.std = r.min = r.max = kNaN;
    return;
  }
  r.mean = std::accumulate(ok.begin(), ok.end(), 0.0) / static_cast<double>(ok.size());
  double ss = 0.0;
  for (double v : ok) ss += (v - r.mean) * (v - r.mean);
  r.std = std::sqrt(ss / static_cast<double>(ok.size()));
  r.min = *std::min_element(ok.begin(), ok.end());
  r.max = *std::max_element(ok.begin(), ok.end());
}

ComplexityReport complexity_from_json(const Json& j) {
  ComplexityReport c;
  c.spec_id = j.at("spec").get<std::string>();
  c.flops = j.at("flops").get<std::int64_t>();
  c.params = j.at("params").get<std::int64_t>();
  for (const auto& s : j.at("breakdown"))
    c.breakdown.push_back({s.at("stage").get<std::string>(), s.at("flops").get<std::int64_t>(),
                           s.at("params").get<std::int64_t>()});
  return c;
}

}  // namespace

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, jobs));
  std::vector<std::exception_ptr> errors(n);
  if (workers == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(workers, n); ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

void HyperParamSpace::validate() const {
  if (!(lr_min >= 1e-6 && lr_max <= 0.05 && lr_min <= lr_max)) throw ConfigError("search.lr range must lie in [1e-6, 0.05]");
  if (!(batch_min >= 4 && batch_max <= 64 && batch_min <= batch_max))
    throw ConfigError("search.batch range must lie in [4, 64]");
  if (n_samples < 1) throw ConfigError("search.n_samples must be >= 1");
  if (k_folds < 2) throw ConfigError("search.k_folds must be >= 2");
  if (inits_per_fold < 1) throw ConfigError("search.inits_per_fold must be >= 1");
  if (epochs < 1) throw ConfigError("search.epochs must be >= 1");
}

std::vector<HyperParams> sample_hyperparams(const HyperParamSpace& space, std::uint64_t seed) {
  space.validate();
  Rng rng(seed);
  std::uniform_real_distribution<double> lr(space.lr_min, space.lr_max);
  std::uniform_int_distribution<int> batch(space.batch_min, space.batch_max);
  std::vector<HyperParams> out;
  for (int i = 0; i < space.n_samples; ++i) {
    HyperParams hp;
    hp.lr = lr(rng);
    hp.batch_size = batch(rng);
    out.push_back(hp);
  }
  return out;
}

std::vector<IndexRange> fold_ranges(IndexRange range, int k) {
  if (k < 1 || range.size() < k) throw ConfigError("cannot split " + std::to_string(range.size()) + " samples into " +
                                                   std::to_string(k) + " folds");
  std::vector<IndexRange> folds;
  const Index base = range.size() / k;
  const Index extra = range.size() % k;
  Index start = range.begin;
  for (int f = 0; f < k; ++f) {
    const Index len = base + (f < extra ? 1 : 0);
    folds.push_back({start, start + len});
    start += len;
  }
  return folds;
}

HyperParams select_best(const std::vector<CandidateScore>& candidates, const std::string& what) {
  const CandidateScore* best = nullptr;
  for (const auto& c : candidates) {
    if (c.diverged || !std::isfinite(c.mean)) continue;
    if (best == nullptr || c.mean > best->mean ||
        (c.mean == best->mean &&
         (c.hp.lr < best->hp.lr || (c.hp.lr == best->hp.lr && c.hp.batch_size < best->hp.batch_size))))
      best = &c;
  }
  if (best == nullptr) throw NumericalError("hyperparameter search: every candidate diverged for " + what);
  return best->hp;
}

SearchResult hyperparam_search(const NetSpec& spec, const Dataset& data, const HyperParamSpace& space,
                               std::uint64_t seed, const RunControl& ctl) {
  spec.validate();
  space.validate();
  data.validate();
  const std::string id = spec_id(spec);
  const auto candidates = sample_hyperparams(space, derive_seed(seed, {0}));
  const auto folds = fold_ranges(data.train_range, space.k_folds);

  // per-fold linear stage, fitted on the training folds only
  std::vector<std::vector<Index>> fit_idx;
  std::vector<std::vector<Index>> val_idx;
  std::vector<LinearCanceller> linear;
  for (const auto& f : folds) {
    fit_idx.push_back(indices_excluding(data.train_range, f));
    val_idx.push_back(range_indices(f));
    linear.push_back(fit_linear(data.x, data.y, fit_idx.back(), spec.L));
  }

  const std::size_t per_candidate = folds.size() * static_cast<std::size_t>(space.inits_per_fold);
  std::vector<double> scores(candidates.size() * per_candidate, kNaN);
  parallel_for(scores.size(), ctl.jobs, [&](std::size_t t) {
    const std::size_t c = t / per_candidate;
    const std::size_t f = (t % per_candidate) / static_cast<std::size_t>(space.inits_per_fold);
    const std::size_t i = t % static_cast<std::size_t>(space.inits_per_fold);
    TrainConfig cfg;
    cfg.lr = candidates[c].lr;
    cfg.batch_size = candidates[c].batch_size;
    cfg.epochs = space.epochs;
    cfg.seed = derive_seed(seed, {1, c, f, i});
    try {
      const TrainResult r = train_on(spec, data.x, data.y, linear[f], fit_idx[f], val_idx[f], cfg,
                                     TrainOptions{.linear_stage = true, .record_history = false});
      scores[t] = r.history.back().eval_total_db;
    } catch (const NumericalError&) {
      scores[t] = kNaN;
    }
  });

  SearchResult result;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    CandidateScore cs;
    cs.hp = candidates[c];
    cs.scores.assign(scores.begin() + static_cast<std::ptrdiff_t>(c * per_candidate),
                     scores.begin() + static_cast<std::ptrdiff_t>((c + 1) * per_candidate));
    double sum = 0.0;
    for (double s : cs.scores) {
      cs.diverged = cs.diverged || !std::isfinite(s);
      sum += s;
    }
    cs.mean = cs.diverged ? kNaN : sum / static_cast<double>(cs.scores.size());
    result.candidates.push_back(std::move(cs));
  }
  result.best = select_best(result.candidates, id);
  log_line(ctl, id + ": lr=" + fmt(result.best.lr) + " batch=" + std::to_string(result.best.batch_size));
  return result;
}

FinalEval final_eval(const CancellerSpec& spec, const Dataset& data, const HyperParams& hp, int n_inits, int epochs,
                     std::uint64_t seed, const RunControl& ctl) {
  if (n_inits < 1) throw ConfigError("final_inits must be >= 1");
  data.validate();
  FinalEval r;

  if (const auto* poly = std::get_if<PolySpec>(&spec)) {
    poly->validate();
    const PolyModel model = fit_poly(data.x, data.y, data.train_range, poly->P, poly->L);
    const CVector y_hat = poly_predict(model, data.x.samples, data.test_range);
    const auto idx = range_indices(data.test_range);
    const double db = evaluate_prediction(data.y, idx, y_hat);
    r.values.assign(static_cast<std::size_t>(n_inits), db);
    r.best_model = to_json(model);
    summarize(r);
    return r;
  }

  const NetSpec& net = std::get<NetSpec>(spec);
  net.validate();
  const LinearCanceller lin = fit_linear(data.x, data.y, data.train_range, net.L);
  std::vector<std::optional<TrainResult>> runs(static_cast<std::size_t>(n_inits));
  parallel_for(runs.size(), ctl.jobs, [&](std::size_t i) {
    TrainConfig cfg;
    cfg.lr = hp.lr;
    cfg.batch_size = hp.batch_size;
    cfg.epochs = epochs;
    cfg.seed = derive_seed(seed, {i});
    try {
      runs[i] = train(net, data, lin, cfg);
    } catch (const NumericalError&) {
      runs[i].reset();
    }
  });

  int best = -1;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const double v = runs[i] ? runs[i]->history.back().eval_total_db : kNaN;
    r.values.push_back(v);
    if (std::isfinite(v) && (best < 0 || v > r.values[static_cast<std::size_t>(best)])) best = static_cast<int>(i);
  }
  summarize(r);
  if (best < 0) throw NumericalError("every initialization diverged for " + spec_id(spec));
  r.best_model = to_json(runs[static_cast<std::size_t>(best)]->model);

  for (int e = 0; e < epochs; ++e) {
    EpochSummary s;
    s.epoch = e + 1;
    double sum = 0.0, sq = 0.0, nl = 0.0;
    int n = 0;
    for (const auto& run : runs) {
      if (!run) continue;
      const EpochRecord& rec = run->history[static_cast<std::size_t>(e)];
      sum += rec.eval_total_db;
      sq += rec.eval_total_db * rec.eval_total_db;
      nl += rec.eval_nonlinear_db;
      ++n;
    }
    s.mean_db = sum / n;
    s.std_db = std::sqrt(std::max(0.0, sq / n - s.mean_db * s.mean_db));
    s.mean_nonlinear_db = nl / n;
    r.history.push_back(s);
  }
  return r;
}

void SweepConfig::validate() const {
  if (specs.empty()) throw ConfigError("sweep.specs must be non-empty");
  for (const auto& s : specs) std::visit([](const auto& v) { v.validate(); }, s);
  search.validate();
  if (final_inits < 1) throw ConfigError("sweep.final_inits must be >= 1");
  if (epochs < 1) throw ConfigError("sweep.epochs must be >= 1");
}

namespace {

void add_family(std::vector<CancellerSpec>& specs, NetKind kind, const std::vector<int>& widths) {
  const auto make = [kind](std::vector<int> w) {
    switch (kind) {
      case NetKind::FFNN: return NetSpec::ffnn(std::move(w));
      case NetKind::CVNN: return NetSpec::cvnn(std::move(w));
      case NetKind::RNN: return NetSpec::rnn(std::move(w));
    }
    throw std::logic_error("unknown kind");
  };
  for (int w : widths) specs.emplace_back(make({w}));
  for (int w : widths) specs.emplace_back(make({w, w, w}));
}

}  // namespace

SweepConfig SweepConfig::full() {
  SweepConfig cfg;
  std::vector<int> even;
  for (int w = 2; w <= 20; w += 2) even.push_back(w);
  std::vector<int> small;
  for (int w = 1; w <= 10; ++w) small.push_back(w);
  add_family(cfg.specs, NetKind::FFNN, even);
  add_family(cfg.specs, NetKind::RNN, even);
  add_family(cfg.specs, NetKind::CVNN, small);
  for (int P : {3, 5, 7, 9}) cfg.specs.emplace_back(PolySpec{P, 13});
  return cfg;
}

SweepConfig SweepConfig::desk() {
  SweepConfig cfg;
  add_family(cfg.specs, NetKind::FFNN, {2, 6, 10});
  add_family(cfg.specs, NetKind::RNN, {2, 6, 10});
  add_family(cfg.specs, NetKind::CVNN, {1, 3, 5, 7});
  for (int P : {3, 5, 7, 9}) cfg.specs.emplace_back(PolySpec{P, 13});
  cfg.search.n_samples = 4;
  cfg.search.k_folds = 3;
  cfg.search.inits_per_fold = 1;
  cfg.search.epochs = 10;
  cfg.final_inits = 5;
  cfg.epochs = 30;
  return cfg;
}

SweepReport run_sweep(const SweepConfig& cfg, const Dataset& data, std::uint64_t seed, const RunControl& ctl) {
  cfg.validate();
  data.validate();
  SweepReport report;
  report.seed = seed;
  for (const auto& spec : cfg.specs) {
    SweepEntry entry;
    entry.spec = spec_id(spec);
    entry.complexity = complexity_report(spec);
    const std::uint64_t spec_seed = derive_seed(seed, {fnv1a(entry.spec)});
    try {
      HyperParams hp;
      if (const auto* net = std::get_if<NetSpec>(&spec)) {
        hp = hyperparam_search(*net, data, cfg.search, derive_seed(spec_seed, {0}), ctl).best;
        entry.hp = hp;
      }
      entry.result = final_eval(spec, data, hp, cfg.final_inits, cfg.epochs, derive_seed(spec_seed, {1}), ctl);
      log_line(ctl, entry.spec + ": " + fmt(entry.result.mean) + " +- " + fmt(entry.result.std) + " dB");
    } catch (const std::exception& e) {
      entry.error = e.what();
      log_line(ctl, entry.spec + ": failed: " + entry.error);
    }
    report.entries.push_back(std::move(entry));
  }
  return report;
}

Json to_json(const HyperParamSpace& s) {
  return Json{{"lr_min", s.lr_min},         {"lr_max", s.lr_max},   {"batch_min", s.batch_min},
              {"batch_max", s.batch_max},   {"n_samples", s.n_samples}, {"k_folds", s.k_folds},
              {"inits_per_fold", s.inits_per_fold}, {"epochs", s.epochs}};
}

HyperParamSpace hyperparam_space_from_json(const Json& j, const HyperParamSpace& base) {
  require_known_keys(j, {"lr_min", "lr_max", "batch_min", "batch_max", "n_samples", "k_folds", "inits_per_fold", "epochs"},
                     "search");
  HyperParamSpace s = base;
  try {
    if (j.contains("lr_min")) s.lr_min = j.at("lr_min").get<double>();
    if (j.contains("lr_max")) s.lr_max = j.at("lr_max").get<double>();
    if (j.contains("batch_min")) s.batch_min = j.at("batch_min").get<int>();
    if (j.contains("batch_max")) s.batch_max = j.at("batch_max").get<int>();
    if (j.contains("n_samples")) s.n_samples = j.at("n_samples").get<int>();
    if (j.contains("k_folds")) s.k_folds = j.at("k_folds").get<int>();
    if (j.contains("inits_per_fold")) s.inits_per_fold = j.at("inits_per_fold").get<int>();
    if (j.contains("epochs")) s.epochs = j.at("epochs").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("search: wrong type: ") + e.what());
  }
  s.validate();
  return s;
}

Json to_json(const SweepConfig& cfg) {
  Json specs = Json::array();
  for (const auto& s : cfg.specs) specs.push_back(spec_id(s));
  return Json{{"specs", specs}, {"search", to_json(cfg.search)}, {"final_inits", cfg.final_inits}, {"epochs", cfg.epochs}};
}

SweepConfig sweep_config_from_json(const Json& j, const SweepConfig& base) {
  require_known_keys(j, {"specs", "search", "final_inits", "epochs"}, "sweep");
  SweepConfig cfg = base;
  try {
    if (j.contains("specs")) {
      cfg.specs.clear();
      for (const auto& s : j.at("specs")) cfg.specs.push_back(parse_spec(s.get<std::string>()));
    }
    if (j.contains("search")) cfg.search = hyperparam_space_from_json(j.at("search"), base.search);
    if (j.contains("final_inits")) cfg.final_inits = j.at("final_inits").get<int>();
    if (j.contains("epochs")) cfg.epochs = j.at("epochs").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("sweep: wrong type: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

Json to_json(const SearchResult& r) {
  Json cands = Json::array();
  for (const auto& c : r.candidates) {
    Json scores = Json::array();
    for (double s : c.scores) scores.push_back(number_or_null(s));
    cands.push_back({{"lr", c.hp.lr},
                     {"batch_size", c.hp.batch_size},
                     {"mean_db", number_or_null(c.mean)},
                     {"diverged", c.diverged},
                     {"scores_db", scores}});
  }
  return Json{{"best", {{"lr", r.best.lr}, {"batch_size", r.best.batch_size}}}, {"candidates", cands}};
}

Json to_json(const FinalEval& r) {
  Json values = Json::array();
  for (double v : r.values) values.push_back(number_or_null(v));
  Json hist = Json::array();
  for (const auto& h : r.history)
    hist.push_back({{"epoch", h.epoch},
                    {"mean_db", number_or_null(h.mean_db)},
                    {"std_db", number_or_null(h.std_db)},
                    {"mean_nonlinear_db", number_or_null(h.mean_nonlinear_db)}});
  return Json{{"values_db", values},
              {"mean_db", number_or_null(r.mean)},
              {"std_db", number_or_null(r.std)},
              {"min_db", number_or_null(r.min)},
              {"max_db", number_or_null(r.max)},
              {"diverged", r.diverged},
              {"history", hist},
              {"best_model", r.best_model}};
}

namespace {

FinalEval final_eval_from_json(const Json& j) {
  FinalEval r;
  for (const auto& v : j.at("values_db")) r.values.push_back(number_from(v));
  r.mean = number_from(j.at("mean_db"));
  r.std = number_from(j.at("std_db"));
  r.min = number_from(j.at("min_db"));
  r.max = number_from(j.at("max_db"));
  r.diverged = j.at("diverged").get<int>();
  for (const auto& h : j.at("history"))
    r.history.push_back({h.at("epoch").get<int>(), number_from(h.at("mean_db")), number_from(h.at("std_db")),
                         number_from(h.at("mean_nonlinear_db"))});
  r.best_model = j.at("best_model");
  return r;
}

}  // namespace

Json to_json(const SweepReport& r) {
  Json entries = Json::array();
  for (const auto& e : r.entries) {
    Json je{{"spec", e.spec},
            {"complexity", to_json(e.complexity)},
            {"hp", e.hp ? Json{{"lr", e.hp->lr}, {"batch_size", e.hp->batch_size}} : Json(nullptr)},
            {"result", e.error.empty() ? to_json(e.result) : Json(nullptr)},
            {"error", e.error}};
    entries.push_back(std::move(je));
  }
  return Json{{"seed", r.seed}, {"entries", entries}};
}

SweepReport sweep_report_from_json(const Json& j) {
  SweepReport r;
  try {
    r.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& je : j.at("entries")) {
      SweepEntry e;
      e.spec = je.at("spec").get<std::string>();
      e.complexity = complexity_from_json(je.at("complexity"));
      if (!je.at("hp").is_null())
        e.hp = HyperParams{je.at("hp").at("lr").get<double>(), je.at("hp").at("batch_size").get<int>()};
      e.error = je.at("error").get<std::string>();
      if (!je.at("result").is_null()) e.result = final_eval_from_json(je.at("result"));
      r.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed sweep report: ") + e.what());
  }
  return r;
}

std::string sweep_csv(const SweepReport& r) {
  std::ostringstream os;
  os << "spec,flops,params,mean_db,std_db,lr,batch_size,diverged,error\n";
  for (const auto& e : r.entries) {
    const bool ok = e.error.empty();
    os << '"' << e.spec << "\"," << e.complexity.flops << ',' << e.complexity.params << ','
       << (ok ? fmt(e.result.mean) : "nan") << ',' << (ok ? fmt(e.result.std) : "nan") << ','
       << (e.hp ? fmt(e.hp->lr) : "") << ',' << (e.hp ? std::to_string(e.hp->batch_size) : "") << ','
       << (ok ? e.result.diverged : 0) << ",\"";
    for (char c : e.error) os << (c == '"' ? '\'' : c == '\n' ? ' ' : c);
    os << "\"\n";
  }
  return os.str();
}

std::string history_csv(const std::vector<EpochSummary>& history) {
  std::ostringstream os;
  os << "epoch,mean_db,std_db,mean_nonlinear_db\n";
  for (const auto& h : history)
    os << h.epoch << ',' << fmt(h.mean_db) << ',' << fmt(h.std_db) << ',' << fmt(h.mean_nonlinear_db) << '\n';
  return os.str();
}

}  // namespace fdsic
