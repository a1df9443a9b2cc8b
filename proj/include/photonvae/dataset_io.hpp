// Copyright 2026 The photonvae Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "photonvae/detector_model.hpp"
#include "photonvae/distributions.hpp"
#include "photonvae/errors.hpp"
#include "photonvae/sampling.hpp"

namespace photonvae {

inline constexpr const char* kDatasetCsvHeader =
    "p0,p1,p2,p3,p4,p5,p6,nbar_obs,label,bin_size,eta,n_detectors,nbar_the,"
    "source_kind,mix_ratio";

/// Nine significant digits, shortest %g form.
inline std::string format_real(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", value);
  return buf;
}

inline void write_dataset_csv(std::ostream& out, const Dataset& ds) {
  out << kDatasetCsvHeader << '\n';
  for (const auto& s : ds.rows) {
    for (double p : s.obs.p_obs) out << format_real(p) << ',';
    out << format_real(s.obs.n_bar_obs) << ',' << s.obs.label << ','
        << s.obs.bin_size << ',' << format_real(s.detector.efficiency) << ','
        << s.detector.n_detectors << ',' << format_real(s.nbar_the()) << ','
        << to_string(s.source.kind) << ',' << format_real(s.source.mix_ratio)
        << '\n';
  }
}

inline Dataset read_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kDatasetCsvHeader)
    throw ConfigError("dataset CSV: missing or unexpected header");
  Dataset ds;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 15)
      throw ConfigError("dataset CSV line " + std::to_string(line_no) +
                        ": expected 15 fields");
    try {
      Sample s;
      for (std::size_t n = 0; n < s.obs.p_obs.size(); ++n)
        s.obs.p_obs[n] = std::stod(fields[n]);
      s.obs.n_bar_obs = std::stod(fields[7]);
      s.obs.label = std::stoi(fields[8]);
      s.obs.bin_size = std::stoi(fields[9]);
      s.detector.efficiency = std::stod(fields[10]);
      s.detector.n_detectors = std::stoi(fields[11]);
      s.source.mean_param = std::stod(fields[12]);
      s.source.kind = parse_source_kind(fields[13]);
      s.source.mix_ratio = std::stod(fields[14]);
      ds.rows.push_back(s);
    } catch (const std::logic_error& e) {
      throw ConfigError("dataset CSV line " + std::to_string(line_no) + ": " +
                        e.what());
    }
  }
  return ds;
}

inline void save_dataset_csv(const std::string& path, const Dataset& ds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  write_dataset_csv(out, ds);
}

inline Dataset load_dataset_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read dataset " + path);
  return read_dataset_csv(in);
}

inline void to_json(nlohmann::json& j, const SourceSpec& s) {
  j = {{"kind", to_string(s.kind)},
       {"mean_param", s.mean_param},
       {"mix_ratio", s.mix_ratio}};
}

inline void from_json(const nlohmann::json& j, SourceSpec& s) {
  s = SourceSpec::make(parse_source_kind(j.at("kind").get<std::string>()),
                       j.at("mean_param").get<double>(),
                       j.value("mix_ratio", 1.0));
}

inline void to_json(nlohmann::json& j, const DetectorConfig& d) {
  j = {{"n_detectors", d.n_detectors}, {"efficiency", d.efficiency}};
}

inline void from_json(const nlohmann::json& j, DetectorConfig& d) {
  d.n_detectors = j.value("n_detectors", 4);
  d.efficiency = j.value("efficiency", 1.0);
}

inline void to_json(nlohmann::json& j, const ClassSource& c) {
  j = c.source;
  j["label"] = c.label;
}

inline void from_json(const nlohmann::json& j, ClassSource& c) {
  c.source = j.get<SourceSpec>();
  c.label = j.at("label").get<int>();
}

inline void to_json(nlohmann::json& j, const DatasetMeta& m) {
  j = {{"classes", m.classes},
       {"detector", m.detector},
       {"bin_size", m.bin_size},
       {"bins_per_class", m.bins_per_class},
       {"seed", m.seed}};
}

inline void from_json(const nlohmann::json& j, DatasetMeta& m) {
  m.classes = j.at("classes").get<std::vector<ClassSource>>();
  m.detector = j.value("detector", DetectorConfig{});
  m.bin_size = j.value("bin_size", 100);
  m.bins_per_class = j.value("bins_per_class", 2000);
  m.seed = j.value("seed", std::uint64_t{0});
}

/// Sidecar describing how a dataset file was produced. `parts` holds one meta
/// per generation run concatenated into the file.
inline nlohmann::json dataset_sidecar(const std::vector<DatasetMeta>& parts,
                                      std::size_t rows) {
  return {{"format", "photonvae-dataset"},
          {"version", 1},
          {"rows", rows},
          {"parts", parts}};
}

}  // namespace photonvae
