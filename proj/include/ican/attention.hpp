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

#include "ican/bbox.hpp"
#include "ican/tensor.hpp"

namespace ican {

/// How the contextual half of an instance feature is produced.
enum class ContextMode { kNone, kWholeImage, kBottomUp, kInstanceCentric };

/// Parses the CLI spelling: none | global | bottom_up | ican.
ContextMode parse_context_mode(const std::string& s);
std::string context_mode_name(ContextMode m);

enum class InstanceRole { kHuman, kObject };

struct InstanceFeature {
  Tensor values;  // [inst_dim]
  InstanceRole role = InstanceRole::kHuman;
};

/// Non-negative spatial weights over feature-map cells, summing to 1.
struct AttentionMap {
  Tensor weights;  // [H x W]
};

struct ContextFeature {
  Tensor values;  // [channels]
};

/// Weights of one instance-centric attention block: the instance head
/// (residual block over the pooled region, then global average pooling) and
/// the embeddings that score feature-map cells against the instance.
struct IcanBranch {
  // Instance head.
  Tensor inst_conv1_w, inst_conv1_b;  // 3x3, C -> D
  Tensor inst_conv2_w, inst_conv2_b;  // 3x3, D -> D
  Tensor inst_proj_w, inst_proj_b;    // 1x1 shortcut projection, C -> D
  // Embeddings for the attention logits.
  Tensor att_fmap_w;                  // 1x1, C -> E
  Tensor att_inst_w, att_inst_b;      // FC, D -> E
  // Instance-independent baseline attention.
  Tensor bu_fmap_w;                   // 1x1, C -> E
  Tensor bu_score_w;                  // FC, E -> 1
};

/// ROI pooling, a two-conv residual block, then global average pooling.
InstanceFeature extract_instance_feature(const Tensor& fmap, const BBox& box,
                                         const IcanBranch& branch,
                                         InstanceRole role, int roi_out,
                                         double spatial_scale);

/// Embeds the map (1x1 conv) and the instance feature (FC) into a shared
/// space, takes per-cell dot products and softmaxes over all cells.
AttentionMap attention_map(const Tensor& fmap, const InstanceFeature& inst,
                           const IcanBranch& branch);

/// Attention from the image alone, identical for every instance.
AttentionMap bottom_up_attention_map(const Tensor& fmap, const IcanBranch& branch);

/// Attention-weighted average of the feature map: out[c] = sum att*fmap[c].
ContextFeature context_feature(const Tensor& fmap, const AttentionMap& att);

/// Full block output: the instance feature, concatenated with the context
/// feature selected by `mode` (omitted for kNone).
Tensor ican_forward(const Tensor& fmap, const BBox& box, const IcanBranch& branch,
                    InstanceRole role, ContextMode mode, int roi_out,
                    double spatial_scale);

}  // namespace ican
