// SPDX-License-Identifier: Apache-2.0
#include "cli.hpp"

#include "fdsic/complexity.hpp"
#include "fdsic/dataset_io.hpp"
#include "fdsic/harness.hpp"
#include "fdsic/poly.hpp"
#include "fdsic/serialize.hpp"
#include "fdsic/trainer.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>

namespace fs = std::filesystem;

namespace fdsic::cli {

namespace {

constexpr int kConfigVersion = 1;
constexpr const char* kToolVersion = "0.1.0";
constexpr const char* kFlopNote =
    "convention: complex multiply = 8 real ops (3 mul + 5 add), complex add = 2, one op per activation use, "
    "polynomial basis functions free";

struct Config {
  OfdmConfig ofdm;
  ImpairmentConfig impairments = ImpairmentConfig::defaults();
  double train_fraction = 0.9;
  TrainConfig train;
  HyperParamSpace search;
  SweepConfig sweep = SweepConfig::full();
};

Config default_config(bool desk) {
  Config c;
  if (desk) {
    c.sweep = SweepConfig::desk();
    c.search = c.sweep.search;
  }
  return c;
}

Json to_json(const Config& c) {
  Json train = fdsic::to_json(c.train);
  train.erase("seed");
  Json sweep = fdsic::to_json(c.sweep);
  sweep.erase("search");
  return Json{{"version", kConfigVersion},
              {"dataset",
               {{"ofdm", fdsic::to_json(c.ofdm)},
                {"impairments", fdsic::to_json(c.impairments)},
                {"train_fraction", c.train_fraction}}},
              {"train", train},
              {"search", fdsic::to_json(c.search)},
              {"sweep", sweep}};
}

Config config_from_json(const Json& j, const Config& base) {
  require_known_keys(j, {"version", "dataset", "train", "search", "sweep"}, "config");
  if (!j.contains("version") || !j.at("version").is_number_integer() || j.at("version").get<int>() != kConfigVersion)
    throw ConfigError("config.version: must be " + std::to_string(kConfigVersion));
  Config c = base;
  if (j.contains("dataset")) {
    const Json& d = j.at("dataset");
    require_known_keys(d, {"ofdm", "impairments", "train_fraction"}, "config.dataset");
    if (d.contains("ofdm")) c.ofdm = ofdm_config_from_json(d.at("ofdm"), base.ofdm);
    if (d.contains("impairments")) c.impairments = impairment_config_from_json(d.at("impairments"), base.impairments);
    if (d.contains("train_fraction")) {
      if (!d.at("train_fraction").is_number()) throw ConfigError("config.dataset.train_fraction: expected a number");
      c.train_fraction = d.at("train_fraction").get<double>();
      if (!(c.train_fraction > 0.0 && c.train_fraction < 1.0))
        throw ConfigError("config.dataset.train_fraction: must lie in (0, 1)");
    }
  }
  if (j.contains("train")) {
    if (j.at("train").is_object() && j.at("train").contains("seed"))
      throw ConfigError("config.train.seed: unknown key (use --seed)");
    c.train = train_config_from_json(j.at("train"), base.train);
  }
  if (j.contains("search")) c.search = hyperparam_space_from_json(j.at("search"), base.search);
  if (j.contains("sweep")) {
    if (j.at("sweep").is_object() && j.at("sweep").contains("search"))
      throw ConfigError("config.sweep.search: unknown key (use the top-level search section)");
    c.sweep = sweep_config_from_json(j.at("sweep"), base.sweep);
  }
  c.sweep.search = c.search;
  return c;
}

// Output directory that removes what it created unless the command completes.
class OutputDir {
 public:
  explicit OutputDir(const std::string& dir) : dir_(dir) {
    std::error_code ec;
    if (!fs::exists(dir_)) {
      created_dir_ = true;
      fs::create_directories(dir_, ec);
      if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
    } else if (!fs::is_directory(dir_)) {
      throw IoError(dir + " is not a directory");
    }
  }
  OutputDir(const OutputDir&) = delete;
  OutputDir& operator=(const OutputDir&) = delete;

  ~OutputDir() {
    if (committed_) return;
    std::error_code ec;
    if (created_dir_) {
      fs::remove_all(dir_, ec);
    } else {
      for (const auto& rel : artifacts_) fs::remove(dir_ / rel, ec);
      for (const auto& d : subdirs_) fs::remove(dir_ / d, ec);
      fs::remove(dir_ / "manifest.json", ec);
    }
  }

  /// Registers an artifact and returns its full path.
  std::string artifact(const std::string& rel) {
    const fs::path parent = fs::path(rel).parent_path();
    if (!parent.empty() && !fs::exists(dir_ / parent)) {
      std::error_code ec;
      fs::create_directories(dir_ / parent, ec);
      if (ec) throw IoError("cannot create " + (dir_ / parent).string());
      subdirs_.push_back(parent.string());
    }
    artifacts_.push_back(rel);
    return (dir_ / rel).string();
  }

  void write_text(const std::string& rel, const std::string& text) {
    const std::string p = artifact(rel);
    std::ofstream f(p, std::ios::binary);
    if (!f || !(f << text)) throw IoError("cannot write " + p);
  }

  void write_json(const std::string& rel, const Json& j) { write_json_file(artifact(rel), j); }

  void commit(const Json& manifest_without_artifacts) {
    Json m = manifest_without_artifacts;
    m["artifacts"] = artifacts_;
    write_json_file((dir_ / "manifest.json").string(), m);
    committed_ = true;
  }

 private:
  fs::path dir_;
  bool created_dir_ = false;
  bool committed_ = false;
  std::vector<std::string> artifacts_;
  std::vector<std::string> subdirs_;
};

struct Context {
  Config cfg;
  std::uint64_t seed = 1;
  int jobs = 1;
  std::ostream& out;
  std::ostream& err;
  std::optional<OutputDir> dir;
};

Dataset load_data(const Context& ctx, const std::string& path) {
  if (!path.empty()) return read_dataset(path).data;
  return synthesize_dataset(ctx.cfg.ofdm, ctx.cfg.impairments, ctx.seed, ctx.cfg.train_fraction);
}

std::string fmt_db(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << v;
  return os.str();
}

std::string file_stem_for(const std::string& spec) {
  std::string s;
  for (char c : spec) s += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
  return s;
}

void write_sweep_outputs(OutputDir& dir, const SweepReport& report) {
  dir.write_text("sweep.csv", sweep_csv(report));
  for (const auto& e : report.entries)
    if (e.error.empty() && !e.result.history.empty())
      dir.write_text("histories/" + file_stem_for(e.spec) + ".csv", history_csv(e.result.history));
}

NetSpec require_net(const std::string& text) {
  const CancellerSpec spec = parse_spec(text);
  if (!std::holds_alternative<NetSpec>(spec)) throw ConfigError("--spec: expected a neural canceller spec");
  return std::get<NetSpec>(spec);
}

Json args_for_manifest(const std::vector<std::string>& args) {
  Json kept = Json::array();
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a == "--out" || a == "--config") {
      ++i;
      continue;
    }
    if (a.rfind("--out=", 0) == 0 || a.rfind("--config=", 0) == 0) continue;
    kept.push_back(a);
  }
  return kept;
}

int run_impl(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
             const std::optional<Json>& config_override) {
  CLI::App app{"Full-duplex self-interference cancellation workbench", "fdsic"};
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  std::string config_path;
  std::string out_dir;
  int jobs = 1;
  bool print_default = false;
  bool desk = false;
  app.add_option("--seed", seed, "Master seed")->capture_default_str();
  app.add_option("--config", config_path, "Versioned JSON config; unknown keys are rejected");
  app.add_option("--out", out_dir, "Output directory for artifacts and the run manifest");
  app.add_option("--jobs", jobs, "Parallel runs for search and sweep (results do not depend on it)")
      ->check(CLI::PositiveNumber);
  app.add_flag("--desk", desk, "Use the reduced desk-scale sweep and search defaults");
  app.add_flag("--print-default-config", print_default, "Print the default config and exit");
  app.fallthrough();

  std::string data_path;
  std::string spec_text;
  std::string in_path;
  std::string manifest_path;
  std::string rnn_flops = "per-step";
  int P = 5;
  int L = 13;
  bool no_linear = false;
  bool as_json = false;
  std::optional<double> lr;
  std::optional<int> batch;
  std::optional<int> epochs;

  auto* gen = app.add_subcommand("generate", "Write a synthetic dataset (CSV + sidecar JSON)");
  auto* fit_poly_cmd = app.add_subcommand("fit-poly", "Fit a memory-polynomial canceller by least squares");
  fit_poly_cmd->add_option("--data", data_path, "Dataset CSV (default: synthesize from config)");
  fit_poly_cmd->add_option("--P", P, "Highest odd nonlinearity order")->capture_default_str();
  fit_poly_cmd->add_option("--L", L, "Memory length")->capture_default_str();
  auto* fit_lin_cmd = app.add_subcommand("fit-linear", "Fit the linear canceller");
  fit_lin_cmd->add_option("--data", data_path, "Dataset CSV (default: synthesize from config)");
  fit_lin_cmd->add_option("--L", L, "Memory length")->capture_default_str();
  auto* train_cmd = app.add_subcommand("train", "Train one neural canceller");
  train_cmd->add_option("--spec", spec_text, "e.g. cvnn:7,act=crelu,L=13")->required();
  train_cmd->add_option("--data", data_path, "Dataset CSV (default: synthesize from config)");
  train_cmd->add_option("--lr", lr, "Learning rate override");
  train_cmd->add_option("--batch", batch, "Batch size override");
  train_cmd->add_option("--epochs", epochs, "Epoch budget override");
  train_cmd->add_flag("--no-linear", no_linear, "Regress raw y without the linear stage");
  auto* search_cmd = app.add_subcommand("search", "Hyperparameter search with k-fold cross-validation");
  search_cmd->add_option("--spec", spec_text, "Neural canceller spec")->required();
  search_cmd->add_option("--data", data_path, "Dataset CSV (default: synthesize from config)");
  auto* sweep_cmd = app.add_subcommand("sweep", "Search, train and report every spec of the sweep config");
  sweep_cmd->add_option("--data", data_path, "Dataset CSV (default: synthesize from config)");
  auto* cx_cmd = app.add_subcommand("complexity", "FLOP and parameter counts for a spec");
  cx_cmd->add_option("--spec", spec_text, "e.g. poly:P=5,L=13")->required();
  cx_cmd->add_option("--rnn-flops", rnn_flops, "Recurrent layer charging: per-step or unrolled")
      ->check(CLI::IsMember({"per-step", "unrolled"}))
      ->capture_default_str();
  cx_cmd->add_flag("--json", as_json, "Emit JSON instead of a table");
  auto* report_cmd = app.add_subcommand("report", "Re-render sweep CSVs from a stored sweep.json");
  report_cmd->add_option("--in", in_path, "sweep.json")->required();
  auto* rerun_cmd = app.add_subcommand("rerun", "Repeat a run from its manifest");
  rerun_cmd->add_option("--manifest", manifest_path, "manifest.json")->required();

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  // CLI11 wants reversed argv-style input
  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    if (std::find(args.begin(), args.end(), "--print-default-config") != args.end()) {
      const bool d = std::find(args.begin(), args.end(), "--desk") != args.end();
      out << to_json(default_config(d)).dump(2) << '\n';
      return kExitOk;
    }
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  (void)print_default;

  if (rerun_cmd->parsed()) {
    const Json manifest = read_json_file(manifest_path);
    if (!manifest.contains("argv") || !manifest.contains("config"))
      throw IoError(manifest_path + ": not a run manifest");
    std::vector<std::string> again = manifest.at("argv").get<std::vector<std::string>>();
    if (!out_dir.empty()) {
      again.push_back("--out");
      again.push_back(out_dir);
    }
    return run_impl(again, out, err, manifest.at("config"));
  }

  Config base = default_config(desk);
  Config cfg = base;
  if (config_override)
    cfg = config_from_json(*config_override, base);
  else if (!config_path.empty())
    cfg = config_from_json(read_json_file(config_path), base);
  cfg.sweep.search = cfg.search;

  Context ctx{cfg, seed, jobs, out, err, std::nullopt};
  const auto t0 = std::chrono::steady_clock::now();
  std::string command;
  for (auto* sub : app.get_subcommands()) command = sub->get_name();
  if (!out_dir.empty()) ctx.dir.emplace(out_dir);
  RunControl ctl;
  ctl.jobs = jobs;
  ctl.log = [&err](const std::string& s) { err << s << '\n'; };

  if (gen->parsed()) {
    if (!ctx.dir) throw ConfigError("--out: required by generate");
    DatasetFile file;
    file.data = load_data(ctx, "");
    file.generator = Json{{"ofdm", fdsic::to_json(cfg.ofdm)},
                          {"impairments", fdsic::to_json(cfg.impairments)},
                          {"train_fraction", cfg.train_fraction},
                          {"seed", seed}};
    const std::string csv = ctx.dir->artifact("dataset.csv");
    ctx.dir->artifact("dataset.json");
    write_dataset(csv, file);
    out << "samples=" << file.data.size() << " train=" << file.data.train_range.size()
        << " test=" << file.data.test_range.size() << '\n';
  } else if (fit_poly_cmd->parsed()) {
    const Dataset data = load_data(ctx, data_path);
    LsSolution diag;
    const PolyModel model = fit_poly(data.x, data.y, data.train_range, P, L, &diag);
    const auto train_idx = range_indices(data.train_range);
    const auto test_idx = range_indices(data.test_range);
    const double train_db =
        evaluate_prediction(data.y, train_idx, poly_predict(model, data.x.samples, data.train_range));
    const double test_db = evaluate_prediction(data.y, test_idx, poly_predict(model, data.x.samples, data.test_range));
    const ComplexityReport cx = complexity_report(PolySpec{P, L});
    out << "spec=" << cx.spec_id << " train_db=" << fmt_db(train_db) << " test_db=" << fmt_db(test_db)
        << " params=" << cx.params << " flops=" << cx.flops << (diag.ill_conditioned ? " (ill-conditioned)" : "")
        << '\n';
    if (ctx.dir) {
      ctx.dir->write_json("poly_model.json", fdsic::to_json(model));
      ctx.dir->write_json("metrics.json", {{"train_db", train_db}, {"test_db", test_db}, {"rank", diag.rank},
                                           {"condition_estimate", diag.condition_estimate},
                                           {"complexity", fdsic::to_json(cx)}});
    }
  } else if (fit_lin_cmd->parsed()) {
    const Dataset data = load_data(ctx, data_path);
    const LinearCanceller lin = fit_linear(data.x, data.y, data.train_range, L);
    const auto test_idx = range_indices(data.test_range);
    const double test_db = evaluate_prediction(data.y, test_idx, linear_predict(lin, data.x.samples, data.test_range));
    out << "L=" << L << " test_db=" << fmt_db(test_db) << '\n';
    if (ctx.dir) {
      ctx.dir->write_json("linear.json", fdsic::to_json(lin));
      ctx.dir->write_json("metrics.json", {{"test_db", test_db}});
    }
  } else if (train_cmd->parsed()) {
    const NetSpec spec = require_net(spec_text);
    const Dataset data = load_data(ctx, data_path);
    TrainConfig tc = cfg.train;
    if (lr) tc.lr = *lr;
    if (batch) tc.batch_size = *batch;
    if (epochs) tc.epochs = *epochs;
    tc.seed = seed;
    const LinearCanceller lin = no_linear ? LinearCanceller::zeros(spec.L)
                                          : fit_linear(data.x, data.y, data.train_range, spec.L);
    const TrainResult r = train(spec, data, lin, tc, TrainOptions{.linear_stage = !no_linear});
    const double lin_db = evaluate_prediction(data.y, range_indices(data.test_range),
                                              linear_predict(fit_linear(data.x, data.y, data.train_range, spec.L),
                                                             data.x.samples, data.test_range));
    out << "spec=" << spec_id(spec) << " linear_db=" << fmt_db(lin_db)
        << " total_db=" << fmt_db(r.history.back().eval_total_db) << " best_epoch=" << r.best_epoch
        << " best_db=" << fmt_db(r.best_eval_db) << '\n';
    if (ctx.dir) {
      ctx.dir->write_json("model.json", fdsic::to_json(r.model));
      std::vector<EpochSummary> hist;
      for (const auto& h : r.history) hist.push_back({h.epoch, h.eval_total_db, 0.0, h.eval_nonlinear_db});
      ctx.dir->write_text("history.csv", history_csv(hist));
    }
  } else if (search_cmd->parsed()) {
    const NetSpec spec = require_net(spec_text);
    const Dataset data = load_data(ctx, data_path);
    const SearchResult r = hyperparam_search(spec, data, cfg.search, seed, ctl);
    out << "spec=" << spec_id(spec) << " lr=" << r.best.lr << " batch=" << r.best.batch_size << '\n';
    if (ctx.dir) ctx.dir->write_json("search.json", fdsic::to_json(r));
  } else if (sweep_cmd->parsed()) {
    if (!ctx.dir) throw ConfigError("--out: required by sweep");
    const Dataset data = load_data(ctx, data_path);
    const SweepReport report = run_sweep(cfg.sweep, data, seed, ctl);
    ctx.dir->write_json("sweep.json", fdsic::to_json(report));
    write_sweep_outputs(*ctx.dir, report);
    out << sweep_csv(report);
  } else if (cx_cmd->parsed()) {
    const CancellerSpec spec = parse_spec(spec_text);
    const ComplexityReport cx =
        complexity_report(spec, rnn_flops == "unrolled" ? RecurrentFlops::Unrolled : RecurrentFlops::PerStep);
    if (as_json)
      out << fdsic::to_json(cx).dump(2) << '\n';
    else
      out << to_text_table(cx) << "params=" << cx.params << " flops=" << cx.flops << '\n' << kFlopNote << '\n';
    if (ctx.dir) ctx.dir->write_json("complexity.json", fdsic::to_json(cx));
  } else if (report_cmd->parsed()) {
    if (!ctx.dir) throw ConfigError("--out: required by report");
    const SweepReport report = sweep_report_from_json(read_json_file(in_path));
    write_sweep_outputs(*ctx.dir, report);
    out << sweep_csv(report);
  }

  if (ctx.dir) {
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ctx.dir->commit(Json{{"tool", "fdsic"},
                         {"tool_version", kToolVersion},
                         {"command", command},
                         {"argv", args_for_manifest(args)},
                         {"config", to_json(cfg)},
                         {"seed", seed},
                         {"wall_clock_seconds", secs}});
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return run_impl(args, out, err, std::nullopt);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    err << "invalid argument: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace fdsic::cli
