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

#include <string>

#include "ican/attention.hpp"

namespace ican {

/// Network dimensions and context wiring. The defaults follow the reference
/// architecture (512-d attention bottleneck, 7x7 ROI grid, 64x64 spatial
/// raster); tests shrink them.
struct ModelConfig {
  int in_channels = 8;      // channels of ingested feature maps
  int inst_dim = 1024;      // instance appearance feature length
  int embed_dim = 512;      // attention embedding bottleneck
  int roi_out = 7;          // ROI pooling grid
  int raster = 64;          // pairwise binary-map size S
  int hidden_dim = 512;     // hidden width of all scoring heads
  int pair_conv1 = 16;      // pairwise CNN stage widths
  int pair_conv2 = 32;
  double spatial_scale = 0.125;  // feature-map cells per image pixel
  ContextMode context = ContextMode::kInstanceCentric;
  bool human_context = true;   // attention toggles per stream
  bool object_context = true;
  bool share_attention = false;

  ContextMode stream_mode(InstanceRole role) const {
    bool enabled = role == InstanceRole::kHuman ? human_context : object_context;
    return enabled ? context : ContextMode::kNone;
  }
  int context_dim(InstanceRole role) const {
    return stream_mode(role) == ContextMode::kNone ? 0 : in_channels;
  }
  int feat_dim(InstanceRole role) const { return inst_dim + context_dim(role); }
  /// Spatial side of the pairwise CNN output (raster through two 2x pools).
  int pair_grid() const { return (raster / 2) / 2; }
  int pair_flat_dim() const { return pair_conv2 * pair_grid() * pair_grid(); }
};

struct TrainConfig {
  double lr = 0.001;
  double momentum = 0.9;
  double weight_decay = 0.0001;
  int batch = 8;
  int neg_ratio = 3;   // negative pairs per positive in a batch
  int log_every = 50;
  bool train_early = false;  // also fit the early-fusion head
};

struct Config {
  ModelConfig model;
  TrainConfig train;
};

/// Parses a flat key=value file ('#' starts a comment). Unknown keys are
/// rejected.
Config parse_config_file(const std::string& path);
Config parse_config_text(const std::string& text);
std::string config_to_text(const Config& cfg);

}  // namespace ican
