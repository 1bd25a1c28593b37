// SPDX-License-Identifier: Apache-2.0
//
// JSON encoding of models and configurations. Doubles are written with
// round-trip precision, so decode(encode(m)) reproduces m bit for bit.
// Complex numbers are [re, im] pairs. Decoders reject unknown keys.
#pragma once

#include "fdsic/poly.hpp"
#include "fdsic/signal.hpp"
#include "fdsic/trainer.hpp"

#include <json.hpp>

#include <initializer_list>
#include <string>
#include <string_view>

namespace fdsic {

using Json = nlohmann::json;

/// Throws ConfigError naming `context.key` for the first key not in `allowed`.
void require_known_keys(const Json& obj, std::initializer_list<std::string_view> allowed, std::string_view context);

Json complex_to_json(Complex c);
Complex complex_from_json(const Json& j);

Json to_json(const PolyModel& model);
PolyModel poly_model_from_json(const Json& j);

Json to_json(const LinearCanceller& lin);
LinearCanceller linear_from_json(const Json& j);

Json to_json(const OfdmConfig& cfg);
OfdmConfig ofdm_config_from_json(const Json& j, const OfdmConfig& base = {});

/// noise_power_db = -inf is written as null.
Json to_json(const ImpairmentConfig& imp);
ImpairmentConfig impairment_config_from_json(const Json& j, const ImpairmentConfig& base = ImpairmentConfig::defaults());

Json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const Json& j, const TrainConfig& base = {});

Json to_json(const NetworkParams& params);
NetworkParams network_params_from_json(const Json& j, const NetSpec& spec);

Json to_json(const TrainedCanceller& model);
TrainedCanceller trained_canceller_from_json(const Json& j);

/// Number of scalar reals stored in a serialized model's parameter arrays.
Index stored_scalar_count(const Json& model);

Json read_json_file(const std::string& path);
/// Pretty-printed, trailing newline. Throws IoError.
void write_json_file(const std::string& path, const Json& j);

}  // namespace fdsic
