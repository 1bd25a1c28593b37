// SPDX-License-Identifier: Apache-2.0
//
// Dataset files: CSV with header `n,x_re,x_im,y_re,y_im` (one row per sample,
// %.17g) plus an optional sidecar JSON with the same basename holding the
// sample rate, split boundary and generator metadata. Any CSV of this shape
// loads, so externally captured data can replace the synthetic set.
#pragma once

#include "fdsic/serialize.hpp"
#include "fdsic/signal.hpp"

#include <string>

namespace fdsic {

struct DatasetFile {
  Dataset data;
  /// Generator configs and seed; null when the dataset was not synthesized here.
  Json generator;
};

/// `foo/bar.csv` -> `foo/bar.json`.
std::string sidecar_path(const std::string& csv_path);

/// Writes the CSV and its sidecar. Throws IoError.
void write_dataset(const std::string& csv_path, const DatasetFile& file);

/// Without a sidecar the split is 90/10 and the sample rate 20 MHz. Throws IoError on malformed input.
DatasetFile read_dataset(const std::string& csv_path);

}  // namespace fdsic
