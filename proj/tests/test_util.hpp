// Copyright 2026 The ican Authors.
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

#include <filesystem>
#include <string>

#include "ican/model.hpp"

namespace ican::testing {

/// Small dimensions so whole-network checks stay fast. spatial_scale 1:
/// boxes are given directly in feature-cell units.
inline ModelConfig micro_config() {
  ModelConfig cfg;
  cfg.in_channels = 3;
  cfg.inst_dim = 6;
  cfg.embed_dim = 8;
  cfg.roi_out = 3;
  cfg.raster = 8;
  cfg.hidden_dim = 8;
  cfg.pair_conv1 = 3;
  cfg.pair_conv2 = 4;
  cfg.spatial_scale = 1.0;
  return cfg;
}

inline ActionVocabulary micro_vocab() {
  return ActionVocabulary({{"lift", true, 1},
                           {"push", true, 1},
                           {"hold", true, 2},
                           {"wave", false, -1}});
}

inline Model micro_model(std::uint64_t seed = 42,
                         ModelConfig cfg = micro_config()) {
  return Model::init(cfg, micro_vocab(), seed);
}

/// Unique scratch path under the system temp directory.
inline std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace ican::testing
