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

#include "ican/streams.hpp"

#include <set>
#include <stdexcept>

namespace ican {

ActionVocabulary::ActionVocabulary(std::vector<ActionInfo> actions)
    : actions_(std::move(actions)) {
  if (actions_.empty()) {
    throw std::invalid_argument("ActionVocabulary: at least one action required");
  }
  std::set<std::string> seen;
  for (int i = 0; i < size(); ++i) {
    const ActionInfo& a = actions_[static_cast<std::size_t>(i)];
    if (a.name.empty()) {
      throw std::invalid_argument("ActionVocabulary: empty action name");
    }
    if (!seen.insert(a.name).second) {
      throw std::invalid_argument("ActionVocabulary: duplicate action name '" +
                                  a.name + "'");
    }
    if (a.object_involved) {
      involved_.push_back(i);
    } else {
      objectless_.push_back(i);
    }
  }
}

int ActionVocabulary::index_of(const std::string& name) const {
  for (int i = 0; i < size(); ++i) {
    if (actions_[static_cast<std::size_t>(i)].name == name) return i;
  }
  return -1;
}

Tensor stream_logits(const Tensor& feat, const StreamHead& head) {
  if (feat.rank() != 1 || head.fc1_w.dim(1) != feat.dim(0)) {
    throw std::invalid_argument(
        "stream: feature length " +
        std::to_string(feat.rank() == 1 ? feat.dim(0) : -1) +
        " does not match loaded weights expecting " +
        std::to_string(head.fc1_w.dim(1)));
  }
  Tensor h = relu(add(matvec(head.fc1_w, feat), head.fc1_b));
  return add(matvec(head.fc2_w, h), head.fc2_b);
}

Tensor stream_score_tensor(const Tensor& feat, const StreamHead& head) {
  return sigmoid(stream_logits(feat, head));
}

namespace {

ActionScores to_scores(const Tensor& t, StreamTag tag) {
  ActionScores s;
  s.values.assign(t.data().begin(), t.data().end());
  s.tag = tag;
  return s;
}

}  // namespace

ActionScores human_stream_scores(const Tensor& feat, const StreamHead& head) {
  return to_scores(stream_score_tensor(feat, head), StreamTag::kHuman);
}

ActionScores object_stream_scores(const Tensor& feat, const StreamHead& head) {
  return to_scores(stream_score_tensor(feat, head), StreamTag::kObject);
}

Tensor pairwise_binary_map(const BBox& b_h, const BBox& b_o, int raster) {
  if (raster < 1) {
    throw std::invalid_argument("pairwise_binary_map: raster must be >= 1");
  }
  const BBox ref = union_box(b_h, b_o);
  const double cell_w = ref.width() / raster;
  const double cell_h = ref.height() / raster;
  Tensor map = Tensor::zeros({2, raster, raster});
  double* d = map.mutable_data().data();
  const std::size_t plane = static_cast<std::size_t>(raster) * raster;
  for (int i = 0; i < raster; ++i) {
    double cy = ref.y1 + (i + 0.5) * cell_h;
    for (int j = 0; j < raster; ++j) {
      double cx = ref.x1 + (j + 0.5) * cell_w;
      std::size_t at = static_cast<std::size_t>(i) * raster + j;
      if (box_contains(b_h, cx, cy)) d[at] = 1.0;
      if (box_contains(b_o, cx, cy)) d[plane + at] = 1.0;
    }
  }
  return map;
}

Tensor pairwise_feature(const Tensor& bmap, const PairwiseNet& net) {
  Tensor h = max_pool2d(relu(conv2d(bmap, net.conv1_w, net.conv1_b, 1, 1)), 2, 2);
  h = max_pool2d(relu(conv2d(h, net.conv2_w, net.conv2_b, 1, 1)), 2, 2);
  return reshape(h, {static_cast<int>(h.size())});
}

Tensor pairwise_logits(const Tensor& bmap, const Tensor& human_inst,
                       const PairwiseNet& net) {
  Tensor feat = concat({pairwise_feature(bmap, net), human_inst});
  return stream_logits(feat, net.head);
}

ActionScores pairwise_stream_scores(const Tensor& bmap, const Tensor& human_inst,
                                    const PairwiseNet& net) {
  return to_scores(sigmoid(pairwise_logits(bmap, human_inst, net)),
                   StreamTag::kPairwise);
}

Tensor early_fusion_logits(const Tensor& h_feat, const Tensor& o_feat,
                           const Tensor& sp_feat, const StreamHead& head) {
  return stream_logits(concat({h_feat, o_feat, sp_feat}), head);
}

ActionScores early_fusion_scores(const Tensor& h_feat, const Tensor& o_feat,
                                 const Tensor& sp_feat, const StreamHead& head) {
  return to_scores(sigmoid(early_fusion_logits(h_feat, o_feat, sp_feat, head)),
                   StreamTag::kFusedEarly);
}

}  // namespace ican
