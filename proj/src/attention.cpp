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

#include "ican/attention.hpp"

#include <stdexcept>

namespace ican {

ContextMode parse_context_mode(const std::string& s) {
  if (s == "none") return ContextMode::kNone;
  if (s == "global") return ContextMode::kWholeImage;
  if (s == "bottom_up") return ContextMode::kBottomUp;
  if (s == "ican") return ContextMode::kInstanceCentric;
  throw std::invalid_argument(
      "unknown context mode '" + s + "' (expected none|global|bottom_up|ican)");
}

std::string context_mode_name(ContextMode m) {
  switch (m) {
    case ContextMode::kNone: return "none";
    case ContextMode::kWholeImage: return "global";
    case ContextMode::kBottomUp: return "bottom_up";
    case ContextMode::kInstanceCentric: return "ican";
  }
  throw std::invalid_argument("unknown context mode");
}

InstanceFeature extract_instance_feature(const Tensor& fmap, const BBox& box,
                                         const IcanBranch& branch,
                                         InstanceRole role, int roi_out,
                                         double spatial_scale) {
  Tensor pooled = roi_pool(fmap, box, roi_out, spatial_scale);
  Tensor h = relu(conv2d(pooled, branch.inst_conv1_w, branch.inst_conv1_b, 1, 1));
  h = conv2d(h, branch.inst_conv2_w, branch.inst_conv2_b, 1, 1);
  Tensor shortcut = conv2d(pooled, branch.inst_proj_w, branch.inst_proj_b, 1, 0);
  Tensor out = global_avg_pool(relu(add(h, shortcut)));
  return InstanceFeature{out, role};
}

namespace {

AttentionMap softmax_over_cells(const Tensor& logits, int h, int w) {
  Tensor att = reshape(softmax(logits), {h, w});
  return AttentionMap{att};
}

}  // namespace

AttentionMap attention_map(const Tensor& fmap, const InstanceFeature& inst,
                           const IcanBranch& branch) {
  const int h = fmap.dim(1), w = fmap.dim(2);
  Tensor fmap_embed = conv2d(fmap, branch.att_fmap_w, 1, 0);  // [E x H x W]
  Tensor cells = reshape(fmap_embed, {fmap_embed.dim(0), h * w});
  Tensor inst_embed = add(matvec(branch.att_inst_w, inst.values), branch.att_inst_b);
  Tensor logits = matvec_t(cells, inst_embed);  // dot product per cell
  return softmax_over_cells(logits, h, w);
}

AttentionMap bottom_up_attention_map(const Tensor& fmap, const IcanBranch& branch) {
  const int h = fmap.dim(1), w = fmap.dim(2);
  Tensor fmap_embed = conv2d(fmap, branch.bu_fmap_w, 1, 0);
  Tensor cells = reshape(fmap_embed, {fmap_embed.dim(0), h * w});
  Tensor logits = matvec_t(cells, branch.bu_score_w);
  return softmax_over_cells(logits, h, w);
}

ContextFeature context_feature(const Tensor& fmap, const AttentionMap& att) {
  if (fmap.rank() != 3 || att.weights.rank() != 2 ||
      att.weights.dim(0) != fmap.dim(1) || att.weights.dim(1) != fmap.dim(2)) {
    throw std::invalid_argument("context_feature: attention grid does not match feature map");
  }
  const int c = fmap.dim(0);
  const int cells = fmap.dim(1) * fmap.dim(2);
  Tensor flat_map = reshape(fmap, {c, cells});
  Tensor flat_att = reshape(att.weights, {cells});
  return ContextFeature{matvec(flat_map, flat_att)};
}

Tensor ican_forward(const Tensor& fmap, const BBox& box, const IcanBranch& branch,
                    InstanceRole role, ContextMode mode, int roi_out,
                    double spatial_scale) {
  InstanceFeature inst =
      extract_instance_feature(fmap, box, branch, role, roi_out, spatial_scale);
  switch (mode) {
    case ContextMode::kNone:
      return inst.values;
    case ContextMode::kWholeImage:
      return concat({inst.values, global_avg_pool(fmap)});
    case ContextMode::kBottomUp: {
      ContextFeature ctx = context_feature(fmap, bottom_up_attention_map(fmap, branch));
      return concat({inst.values, ctx.values});
    }
    case ContextMode::kInstanceCentric: {
      ContextFeature ctx = context_feature(fmap, attention_map(fmap, inst, branch));
      return concat({inst.values, ctx.values});
    }
  }
  throw std::invalid_argument("ican_forward: unknown context mode");
}

}  // namespace ican
