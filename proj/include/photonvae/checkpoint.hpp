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

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "photonvae/errors.hpp"
#include "photonvae/vae.hpp"

namespace photonvae {

inline constexpr int kCheckpointVersion = 1;
inline constexpr const char* kCheckpointFormat = "photonvae-checkpoint";

static_assert(std::endian::native == std::endian::little,
              "checkpoint blocks are written in host order, which must be little-endian");

inline void to_json(nlohmann::json& j, const NetworkSpec& s) {
  j = {{"input_dim", s.input_dim},
       {"latent_dim", s.latent_dim},
       {"encoder_widths", s.encoder_widths},
       {"decoder_widths", s.decoder_widths},
       {"classifier_widths", s.classifier_widths},
       {"num_classes", s.num_classes},
       {"dropout_rate", s.dropout_rate},
       {"leaky_slope", s.leaky_slope},
       {"bn_momentum", s.bn_momentum},
       {"bn_epsilon", s.bn_epsilon},
       {"classify_from_mean", s.classify_from_mean}};
}

inline void from_json(const nlohmann::json& j, NetworkSpec& s) {
  NetworkSpec d;
  s.input_dim = j.value("input_dim", d.input_dim);
  s.latent_dim = j.value("latent_dim", d.latent_dim);
  s.encoder_widths = j.value("encoder_widths", d.encoder_widths);
  s.decoder_widths = j.value("decoder_widths", d.decoder_widths);
  s.classifier_widths = j.value("classifier_widths", d.classifier_widths);
  s.num_classes = j.value("num_classes", d.num_classes);
  s.dropout_rate = j.value("dropout_rate", d.dropout_rate);
  s.leaky_slope = j.value("leaky_slope", d.leaky_slope);
  s.bn_momentum = j.value("bn_momentum", d.bn_momentum);
  s.bn_epsilon = j.value("bn_epsilon", d.bn_epsilon);
  s.classify_from_mean = j.value("classify_from_mean", d.classify_from_mean);
}

struct Checkpoint {
  VaeModel model;
  nlohmann::json training;  // hyperparameters, seed, epoch count
};

/// Writes a one-line JSON header followed by the parameter block and then the
/// buffer block, both as little-endian float64 in VaeModel layout order.
inline void save_checkpoint(const std::string& path, const VaeModel& model,
                            const nlohmann::json& training) {
  nlohmann::json layout = nlohmann::json::array();
  for (const auto& b : model.parameter_blocks())
    layout.push_back({{"name", b.name}, {"offset", b.offset}, {"size", b.size}});
  const nlohmann::json header = {{"format", kCheckpointFormat},
                                 {"version", kCheckpointVersion},
                                 {"network", model.spec()},
                                 {"training", training},
                                 {"parameter_count", model.parameters().size()},
                                 {"buffer_count", model.buffers().size()},
                                 {"layout", layout}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint " + path);
  out << header.dump() << '\n';
  const auto params = model.parameters();
  const auto buffers = model.buffers();
  out.write(reinterpret_cast<const char*>(params.data()),
            static_cast<std::streamsize>(params.size_bytes()));
  out.write(reinterpret_cast<const char*>(buffers.data()),
            static_cast<std::streamsize>(buffers.size_bytes()));
  if (!out) throw CheckpointError("failed writing checkpoint " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path);
  std::string line;
  if (!std::getline(in, line)) throw CheckpointError("empty checkpoint " + path);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception&) {
    throw CheckpointError("checkpoint header is not JSON: " + path);
  }
  if (header.value("format", std::string{}) != kCheckpointFormat)
    throw CheckpointError("not a photonvae checkpoint: " + path);
  if (header.value("version", -1) != kCheckpointVersion)
    throw CheckpointError("unsupported checkpoint version " +
                          header.value("version", nlohmann::json(-1)).dump());
  NetworkSpec spec;
  try {
    spec = header.at("network").get<NetworkSpec>();
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("bad network spec in checkpoint: ") + e.what());
  }
  const auto n_params = header.value("parameter_count", std::size_t{0});
  const auto n_buffers = header.value("buffer_count", std::size_t{0});
  std::vector<double> params(n_params);
  std::vector<double> buffers(n_buffers);
  in.read(reinterpret_cast<char*>(params.data()),
          static_cast<std::streamsize>(n_params * sizeof(double)));
  in.read(reinterpret_cast<char*>(buffers.data()),
          static_cast<std::streamsize>(n_buffers * sizeof(double)));
  if (!in) throw CheckpointError("truncated checkpoint " + path);
  return {VaeModel(spec, std::move(params), std::move(buffers)),
          header.value("training", nlohmann::json::object())};
}

}  // namespace photonvae
