// SPDX-License-Identifier: Apache-2.0
#include "fdsic/complexity.hpp"

#include "fdsic/poly.hpp"

#include <iomanip>
#include <sstream>

namespace fdsic {

namespace {

constexpr std::int64_t kComplexMul = 8;
constexpr std::int64_t kComplexAdd = 2;

// fan-in products, fan_in - 1 accumulations and one bias add per neuron
StageCost real_dense(const std::string& name, std::int64_t units, std::int64_t fan_in, bool activation) {
  return {name, 2 * units * fan_in + (activation ? units : 0), units * (fan_in + 1)};
}

StageCost complex_dense(const std::string& name, std::int64_t units, std::int64_t fan_in, bool activation,
                        bool modrelu) {
  const std::int64_t per_neuron = kComplexMul * fan_in + kComplexAdd * fan_in;
  return {name, units * per_neuron + (activation ? units : 0), 2 * units * (fan_in + 1) + (modrelu ? units : 0)};
}

StageCost recurrent(const std::string& name, std::int64_t units, std::int64_t fan_in, std::int64_t steps,
                    RecurrentFlops mode) {
  const std::int64_t per_step = 2 * units * (fan_in + units) + units;
  return {name, per_step * (mode == RecurrentFlops::Unrolled ? steps : 1), units * (fan_in + units + 1)};
}

std::vector<StageCost> breakdown(const CancellerSpec& spec, RecurrentFlops mode) {
  std::vector<StageCost> stages;
  if (const auto* poly = std::get_if<PolySpec>(&spec)) {
    poly->validate();
    const std::int64_t m = static_cast<std::int64_t>(poly->L) * basis_count(poly->P);
    stages.push_back({"polynomial", kComplexMul * m + kComplexAdd * (m - 1), 2 * m});
    return stages;
  }

  const auto& net = std::get<NetSpec>(spec);
  net.validate();
  stages.push_back(linear_canceller_cost(net.L));
  std::int64_t fan_in = net.kind == NetKind::RNN ? 2 : net.input_arity();
  for (std::size_t i = 0; i < net.hidden.size(); ++i) {
    const auto& layer = net.hidden[i];
    const std::string name = "hidden" + std::to_string(i + 1);
    switch (net.kind) {
      case NetKind::FFNN: stages.push_back(real_dense(name, layer.width, fan_in, true)); break;
      case NetKind::CVNN:
        stages.push_back(complex_dense(name, layer.width, fan_in, true, layer.activation == Activation::ModReLU));
        break;
      case NetKind::RNN: stages.push_back(recurrent(name, layer.width, fan_in, net.L, mode)); break;
    }
    fan_in = layer.width;
  }
  if (net.kind == NetKind::CVNN)
    stages.push_back(complex_dense("output", 1, fan_in, false, false));
  else
    stages.push_back(real_dense("output", 2, fan_in, false));
  stages.push_back({"combine", kComplexAdd, 0});
  return stages;
}

}  // namespace

StageCost linear_canceller_cost(int L) {
  if (L < 1) throw ConfigError("L must be >= 1");
  return {"linear", kComplexMul * L + kComplexAdd * (L - 1), 2 * static_cast<std::int64_t>(L)};
}

ComplexityReport complexity_report(const CancellerSpec& spec, RecurrentFlops rnn) {
  ComplexityReport report;
  report.spec_id = spec_id(spec);
  report.breakdown = breakdown(spec, rnn);
  for (const auto& s : report.breakdown) {
    report.flops += s.flops;
    report.params += s.params;
  }
  return report;
}

std::int64_t count_params(const CancellerSpec& spec) { return complexity_report(spec).params; }

std::int64_t count_flops(const CancellerSpec& spec, RecurrentFlops rnn) { return complexity_report(spec, rnn).flops; }

double percent_change(std::int64_t value, std::int64_t baseline) {
  return 100.0 * (static_cast<double>(value) - static_cast<double>(baseline)) / static_cast<double>(baseline);
}

nlohmann::json to_json(const ComplexityReport& report) {
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& s : report.breakdown) stages.push_back({{"stage", s.stage}, {"flops", s.flops}, {"params", s.params}});
  return {{"spec", report.spec_id}, {"flops", report.flops}, {"params", report.params}, {"breakdown", stages}};
}

std::string to_text_table(const ComplexityReport& report) {
  std::ostringstream os;
  os << report.spec_id << '\n';
  os << std::left << std::setw(12) << "stage" << std::right << std::setw(10) << "flops" << std::setw(10) << "params"
     << '\n';
  for (const auto& s : report.breakdown)
    os << std::left << std::setw(12) << s.stage << std::right << std::setw(10) << s.flops << std::setw(10) << s.params
       << '\n';
  os << std::left << std::setw(12) << "total" << std::right << std::setw(10) << report.flops << std::setw(10)
     << report.params << '\n';
  return os.str();
}

}  // namespace fdsic
