// SPDX-License-Identifier: Apache-2.0
#include "fdsic/dataset_io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <vector>

namespace fdsic {

namespace {

constexpr const char* kHeader = "n,x_re,x_im,y_re,y_im";

double parse_double(const std::string& tok, const std::string& path, std::size_t line) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (tok.empty() || end != tok.c_str() + tok.size() || errno == ERANGE)
    throw IoError(path + ":" + std::to_string(line) + ": bad number '" + tok + "'");
  return v;
}

Json range_to_json(IndexRange r) { return Json::array({r.begin, r.end}); }

IndexRange range_from_json(const Json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer())
    throw IoError(what + ": expected [begin, end]");
  return {j[0].get<Index>(), j[1].get<Index>()};
}

}  // namespace

std::string sidecar_path(const std::string& csv_path) {
  return std::filesystem::path(csv_path).replace_extension(".json").string();
}

void write_dataset(const std::string& csv_path, const DatasetFile& file) {
  const Dataset& d = file.data;
  d.validate();
  std::FILE* f = std::fopen(csv_path.c_str(), "wb");
  if (f == nullptr) throw IoError("cannot write " + csv_path);
  bool ok = std::fprintf(f, "%s\n", kHeader) > 0;
  for (Index n = 0; ok && n < d.size(); ++n) {
    const Complex x = d.x.samples(n);
    const Complex y = d.y.samples(n);
    ok = std::fprintf(f, "%lld,%.17g,%.17g,%.17g,%.17g\n", static_cast<long long>(n), x.real(), x.imag(), y.real(),
                      y.imag()) > 0;
  }
  ok = (std::fclose(f) == 0) && ok;
  if (!ok) throw IoError("write failed: " + csv_path);

  Json meta{{"sample_rate_hz", d.x.sample_rate_hz},
            {"n_samples", d.size()},
            {"train_range", range_to_json(d.train_range)},
            {"test_range", range_to_json(d.test_range)},
            {"generator", file.generator}};
  write_json_file(sidecar_path(csv_path), meta);
}

DatasetFile read_dataset(const std::string& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw IoError("cannot open " + csv_path);
  std::string line;
  if (!std::getline(in, line)) throw IoError(csv_path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader) throw IoError(csv_path + ": header must be '" + std::string(kHeader) + "'");

  std::vector<Complex> xs;
  std::vector<Complex> ys;
  std::size_t lineno = 1;
  std::vector<std::string> tok;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    tok.clear();
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      tok.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (tok.size() != 5) throw IoError(csv_path + ":" + std::to_string(lineno) + ": expected 5 fields");
    const double n = parse_double(tok[0], csv_path, lineno);
    if (n != static_cast<double>(xs.size()))
      throw IoError(csv_path + ":" + std::to_string(lineno) + ": sample index out of sequence");
    xs.emplace_back(parse_double(tok[1], csv_path, lineno), parse_double(tok[2], csv_path, lineno));
    ys.emplace_back(parse_double(tok[3], csv_path, lineno), parse_double(tok[4], csv_path, lineno));
  }
  if (xs.size() < 2) throw IoError(csv_path + ": need at least two samples");

  DatasetFile file;
  Dataset& d = file.data;
  d.x.samples = Eigen::Map<const CVector>(xs.data(), static_cast<Index>(xs.size()));
  d.y.samples = Eigen::Map<const CVector>(ys.data(), static_cast<Index>(ys.size()));

  const std::string meta_path = sidecar_path(csv_path);
  if (std::filesystem::exists(meta_path)) {
    const Json meta = read_json_file(meta_path);
    try {
      require_known_keys(meta, {"sample_rate_hz", "n_samples", "train_range", "test_range", "generator"}, "sidecar");
    } catch (const ConfigError& e) {
      throw IoError(meta_path + ": " + e.what());
    }
    if (meta.contains("sample_rate_hz")) d.x.sample_rate_hz = d.y.sample_rate_hz = meta.at("sample_rate_hz").get<double>();
    if (meta.contains("n_samples") && meta.at("n_samples").get<Index>() != d.size())
      throw IoError(meta_path + ": n_samples does not match " + csv_path);
    if (meta.contains("train_range") != meta.contains("test_range"))
      throw IoError(meta_path + ": train_range and test_range must be given together");
    if (meta.contains("train_range")) {
      d.train_range = range_from_json(meta.at("train_range"), meta_path + ": train_range");
      d.test_range = range_from_json(meta.at("test_range"), meta_path + ": test_range");
    } else {
      std::tie(d.train_range, d.test_range) = split_ranges(d.size(), 0.9);
    }
    if (meta.contains("generator")) file.generator = meta.at("generator");
  } else {
    std::tie(d.train_range, d.test_range) = split_ranges(d.size(), 0.9);
  }
  try {
    d.validate();
  } catch (const std::invalid_argument& e) {
    throw IoError(csv_path + ": " + e.what());
  }
  return file;
}

}  // namespace fdsic
