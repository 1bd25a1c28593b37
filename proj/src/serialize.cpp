// SPDX-License-Identifier: Apache-2.0
#include "fdsic/serialize.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace fdsic {

namespace {

template <typename Scalar>
Json scalar_to_json(Scalar s) {
  if constexpr (is_complex_v<Scalar>)
    return complex_to_json(s);
  else
    return s;
}

template <typename Scalar>
Scalar scalar_from_json(const Json& j) {
  if constexpr (is_complex_v<Scalar>) {
    return complex_from_json(j);
  } else {
    if (!j.is_number()) throw ConfigError("expected a number, got " + j.dump());
    return j.get<double>();
  }
}

template <typename Derived>
Json vector_to_json(const Eigen::MatrixBase<Derived>& v) {
  Json arr = Json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(scalar_to_json(v(i)));
  return arr;
}

template <typename Scalar>
Vector<Scalar> vector_from_json(const Json& j, std::string_view what) {
  if (!j.is_array()) throw ConfigError(std::string(what) + ": expected an array");
  Vector<Scalar> v(static_cast<Index>(j.size()));
  for (Index i = 0; i < v.size(); ++i) v(i) = scalar_from_json<Scalar>(j[static_cast<std::size_t>(i)]);
  return v;
}

// row-major nested arrays
template <typename Derived>
Json matrix_to_json(const Eigen::MatrixBase<Derived>& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) rows.push_back(vector_to_json(m.row(i)));
  return rows;
}

template <typename Scalar>
Matrix<Scalar> matrix_from_json(const Json& j, Index rows, Index cols, std::string_view what) {
  if (!j.is_array() || static_cast<Index>(j.size()) != rows)
    throw ConfigError(std::string(what) + ": expected " + std::to_string(rows) + " rows");
  Matrix<Scalar> m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const Vector<Scalar> row = vector_from_json<Scalar>(j[static_cast<std::size_t>(i)], what);
    if (row.size() != cols) throw ConfigError(std::string(what) + ": expected " + std::to_string(cols) + " columns");
    m.row(i) = row.transpose();
  }
  return m;
}

template <typename Scalar>
void assign_vector(Vector<Scalar>& dst, const Json& j, std::string_view what) {
  Vector<Scalar> v = vector_from_json<Scalar>(j, what);
  if (v.size() != dst.size()) throw ConfigError(std::string(what) + ": expected length " + std::to_string(dst.size()));
  dst = std::move(v);
}

const Json& field(const Json& j, const char* key, std::string_view context) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(std::string(context) + "." + key + ": missing");
  return j.at(key);
}

template <typename T>
T get_as(const Json& j, const char* key, std::string_view context) {
  try {
    return field(j, key, context).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string(context) + "." + key + ": wrong type");
  }
}

template <typename T>
void maybe_get(const Json& j, const char* key, std::string_view context, T& out) {
  if (j.contains(key)) out = get_as<T>(j, key, context);
}

template <typename Scalar>
Json dense_to_json(const DenseNetwork<Scalar>& net) {
  Json layers = Json::array();
  for (const auto& l : net.layers) {
    Json jl{{"activation", std::string(to_string(l.activation))},
            {"weights", matrix_to_json(l.weights)},
            {"biases", vector_to_json(l.biases)}};
    if (l.modrelu_bias.size() > 0) jl["modrelu_bias"] = vector_to_json(l.modrelu_bias);
    layers.push_back(std::move(jl));
  }
  return Json{{"layers", layers}};
}

template <typename Scalar>
DenseNetwork<Scalar> dense_from_json(const Json& j, const NetSpec& spec) {
  require_known_keys(j, {"layers"}, "params");
  DenseNetwork<Scalar> net = DenseNetwork<Scalar>::zeros(spec);
  const Json& layers = field(j, "layers", "params");
  if (!layers.is_array() || layers.size() != net.layers.size())
    throw ConfigError("params.layers: expected " + std::to_string(net.layers.size()) + " layers");
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    auto& l = net.layers[k];
    const Json& jl = layers[k];
    const std::string ctx = "params.layers[" + std::to_string(k) + "]";
    require_known_keys(jl, {"activation", "weights", "biases", "modrelu_bias"}, ctx);
    if (parse_activation(get_as<std::string>(jl, "activation", ctx)) != l.activation)
      throw ConfigError(ctx + ".activation: does not match the network spec");
    l.weights = matrix_from_json<Scalar>(field(jl, "weights", ctx), l.width(), l.fan_in(), ctx + ".weights");
    assign_vector(l.biases, field(jl, "biases", ctx), ctx + ".biases");
    if (l.modrelu_bias.size() > 0) assign_vector(l.modrelu_bias, field(jl, "modrelu_bias", ctx), ctx + ".modrelu_bias");
    else if (jl.contains("modrelu_bias")) throw ConfigError(ctx + ".modrelu_bias: unexpected");
  }
  return net;
}

Json rnn_to_json(const RnnNetwork& net) {
  Json layers = Json::array();
  for (const auto& l : net.layers)
    layers.push_back({{"input_weights", matrix_to_json(l.input_weights)},
                      {"recurrent_weights", matrix_to_json(l.recurrent_weights)},
                      {"biases", vector_to_json(l.biases)}});
  return Json{{"layers", layers},
              {"output_weights", matrix_to_json(net.output_weights)},
              {"output_biases", vector_to_json(net.output_biases)}};
}

RnnNetwork rnn_from_json(const Json& j, const NetSpec& spec) {
  require_known_keys(j, {"layers", "output_weights", "output_biases"}, "params");
  RnnNetwork net = RnnNetwork::zeros(spec);
  const Json& layers = field(j, "layers", "params");
  if (!layers.is_array() || layers.size() != net.layers.size())
    throw ConfigError("params.layers: expected " + std::to_string(net.layers.size()) + " layers");
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    auto& l = net.layers[k];
    const Json& jl = layers[k];
    const std::string ctx = "params.layers[" + std::to_string(k) + "]";
    require_known_keys(jl, {"input_weights", "recurrent_weights", "biases"}, ctx);
    l.input_weights = matrix_from_json<double>(field(jl, "input_weights", ctx), l.input_weights.rows(),
                                               l.input_weights.cols(), ctx + ".input_weights");
    l.recurrent_weights = matrix_from_json<double>(field(jl, "recurrent_weights", ctx), l.recurrent_weights.rows(),
                                                   l.recurrent_weights.cols(), ctx + ".recurrent_weights");
    assign_vector(l.biases, field(jl, "biases", ctx), ctx + ".biases");
  }
  net.output_weights = matrix_from_json<double>(field(j, "output_weights", "params"), net.output_weights.rows(),
                                                net.output_weights.cols(), "params.output_weights");
  assign_vector(net.output_biases, field(j, "output_biases", "params"), "params.output_biases");
  return net;
}

Index count_numbers(const Json& j) {
  if (j.is_number()) return 1;
  Index n = 0;
  if (j.is_array() || j.is_object())
    for (const auto& child : j) n += count_numbers(child);
  return n;
}

}  // namespace

void require_known_keys(const Json& obj, std::initializer_list<std::string_view> allowed, std::string_view context) {
  if (!obj.is_object()) throw ConfigError(std::string(context) + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (auto a : allowed) known = known || a == key;
    if (!known) throw ConfigError(std::string(context) + "." + key + ": unknown key");
  }
}

Json complex_to_json(Complex c) { return Json::array({c.real(), c.imag()}); }

Complex complex_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ConfigError("expected a [re, im] pair, got " + j.dump());
  return {j[0].get<double>(), j[1].get<double>()};
}

Json to_json(const PolyModel& model) {
  model.validate();
  return Json{{"P", model.P},
              {"L", model.L},
              {"basis_order", kBasisOrderTag},
              {"coefficients", vector_to_json(model.coeffs)}};
}

PolyModel poly_model_from_json(const Json& j) {
  require_known_keys(j, {"P", "L", "basis_order", "coefficients"}, "poly");
  if (get_as<std::string>(j, "basis_order", "poly") != kBasisOrderTag)
    throw ConfigError("poly.basis_order: unsupported ordering");
  PolyModel m;
  m.P = get_as<int>(j, "P", "poly");
  m.L = get_as<int>(j, "L", "poly");
  m.coeffs = vector_from_json<Complex>(field(j, "coefficients", "poly"), "poly.coefficients");
  try {
    m.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("poly: ") + e.what());
  }
  return m;
}

Json to_json(const LinearCanceller& lin) { return Json{{"taps", vector_to_json(lin.taps)}}; }

LinearCanceller linear_from_json(const Json& j) {
  require_known_keys(j, {"taps"}, "linear");
  LinearCanceller lin{vector_from_json<Complex>(field(j, "taps", "linear"), "linear.taps")};
  if (lin.taps.size() < 1) throw ConfigError("linear.taps: must be non-empty");
  return lin;
}

Json to_json(const OfdmConfig& cfg) {
  return Json{{"n_carriers", cfg.n_carriers},
              {"occupied_carriers", cfg.occupied_carriers},
              {"cp_len", cfg.cp_len},
              {"n_frames", cfg.n_frames},
              {"sample_rate_hz", cfg.sample_rate_hz}};
}

OfdmConfig ofdm_config_from_json(const Json& j, const OfdmConfig& base) {
  require_known_keys(j, {"n_carriers", "occupied_carriers", "cp_len", "n_frames", "sample_rate_hz"}, "ofdm");
  OfdmConfig cfg = base;
  maybe_get(j, "n_carriers", "ofdm", cfg.n_carriers);
  maybe_get(j, "occupied_carriers", "ofdm", cfg.occupied_carriers);
  maybe_get(j, "cp_len", "ofdm", cfg.cp_len);
  maybe_get(j, "n_frames", "ofdm", cfg.n_frames);
  maybe_get(j, "sample_rate_hz", "ofdm", cfg.sample_rate_hz);
  cfg.validate();
  return cfg;
}

Json to_json(const ImpairmentConfig& imp) {
  Json pa = Json::object();
  for (const auto& [p, a] : imp.pa_coeffs) pa[std::to_string(p)] = complex_to_json(a);
  Json noise = std::isfinite(imp.noise_power_db) ? Json(imp.noise_power_db) : Json(nullptr);
  return Json{{"k1", complex_to_json(imp.k1)},
              {"k2", complex_to_json(imp.k2)},
              {"pa_coeffs", pa},
              {"si_channel_taps", vector_to_json(imp.si_channel_taps)},
              {"noise_power_db", noise}};
}

ImpairmentConfig impairment_config_from_json(const Json& j, const ImpairmentConfig& base) {
  require_known_keys(j, {"k1", "k2", "pa_coeffs", "si_channel_taps", "noise_power_db"}, "impairments");
  ImpairmentConfig imp = base;
  if (j.contains("k1")) imp.k1 = complex_from_json(j.at("k1"));
  if (j.contains("k2")) imp.k2 = complex_from_json(j.at("k2"));
  if (j.contains("pa_coeffs")) {
    const Json& pa = j.at("pa_coeffs");
    if (!pa.is_object()) throw ConfigError("impairments.pa_coeffs: expected an object keyed by order");
    imp.pa_coeffs.clear();
    for (const auto& [key, value] : pa.items()) {
      int p = 0;
      std::istringstream is(key);
      if (!(is >> p) || !is.eof()) throw ConfigError("impairments.pa_coeffs." + key + ": order must be an integer");
      imp.pa_coeffs[p] = complex_from_json(value);
    }
  }
  if (j.contains("si_channel_taps"))
    imp.si_channel_taps = vector_from_json<Complex>(j.at("si_channel_taps"), "impairments.si_channel_taps");
  if (j.contains("noise_power_db")) {
    const Json& nz = j.at("noise_power_db");
    if (nz.is_null())
      imp.noise_power_db = -std::numeric_limits<double>::infinity();
    else if (nz.is_number())
      imp.noise_power_db = nz.get<double>();
    else
      throw ConfigError("impairments.noise_power_db: expected a number or null");
  }
  imp.validate();
  return imp;
}

Json to_json(const TrainConfig& cfg) {
  return Json{{"lr", cfg.lr}, {"batch_size", cfg.batch_size}, {"epochs", cfg.epochs}, {"seed", cfg.seed}};
}

TrainConfig train_config_from_json(const Json& j, const TrainConfig& base) {
  require_known_keys(j, {"lr", "batch_size", "epochs", "seed"}, "train");
  TrainConfig cfg = base;
  maybe_get(j, "lr", "train", cfg.lr);
  maybe_get(j, "batch_size", "train", cfg.batch_size);
  maybe_get(j, "epochs", "train", cfg.epochs);
  maybe_get(j, "seed", "train", cfg.seed);
  cfg.validate();
  return cfg;
}

Json to_json(const NetworkParams& params) {
  return std::visit(
      [](const auto& net) -> Json {
        using Net = std::decay_t<decltype(net)>;
        if constexpr (std::is_same_v<Net, RnnNetwork>)
          return rnn_to_json(net);
        else
          return dense_to_json(net);
      },
      params);
}

NetworkParams network_params_from_json(const Json& j, const NetSpec& spec) {
  switch (spec.kind) {
    case NetKind::FFNN: return dense_from_json<double>(j, spec);
    case NetKind::CVNN: return dense_from_json<Complex>(j, spec);
    case NetKind::RNN: return rnn_from_json(j, spec);
  }
  throw std::logic_error("network_params_from_json: unknown kind");
}

Json to_json(const TrainedCanceller& model) {
  Json metrics = Json::object();
  for (const auto& [k, v] : model.metrics) metrics[k] = std::isfinite(v) ? Json(v) : Json(nullptr);
  return Json{{"spec", spec_id(model.spec)},
              {"linear", to_json(model.linear)},
              {"params", to_json(model.params)},
              {"target_scale", model.target_scale},
              {"train", to_json(model.config)},
              {"metrics", metrics}};
}

TrainedCanceller trained_canceller_from_json(const Json& j) {
  require_known_keys(j, {"spec", "linear", "params", "target_scale", "train", "metrics"}, "model");
  TrainedCanceller m;
  const CancellerSpec spec = parse_spec(get_as<std::string>(j, "spec", "model"));
  if (!std::holds_alternative<NetSpec>(spec)) throw ConfigError("model.spec: not a neural canceller");
  m.spec = std::get<NetSpec>(spec);
  m.linear = linear_from_json(field(j, "linear", "model"));
  if (m.linear.L() != m.spec.L) throw ConfigError("model.linear.taps: length differs from the network spec L");
  m.params = network_params_from_json(field(j, "params", "model"), m.spec);
  m.target_scale = get_as<double>(j, "target_scale", "model");
  m.config = train_config_from_json(field(j, "train", "model"));
  if (j.contains("metrics")) {
    for (const auto& [k, v] : j.at("metrics").items())
      m.metrics[k] = v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
  }
  return m;
}

Index stored_scalar_count(const Json& model) {
  if (model.contains("coefficients")) return count_numbers(model.at("coefficients"));
  return count_numbers(model.at("linear")) + count_numbers(model.at("params"));
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError("malformed JSON in " + path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace fdsic
