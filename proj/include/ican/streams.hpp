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
#include <vector>

#include "ican/bbox.hpp"
#include "ican/tensor.hpp"

namespace ican {

struct ActionInfo {
  std::string name;
  bool object_involved = true;
  int target_category = -1;  // -1 for actions without an object
};

/// Ordered action vocabulary. Names must be unique and non-empty; at least
/// one action is required.
class ActionVocabulary {
 public:
  ActionVocabulary() = default;
  explicit ActionVocabulary(std::vector<ActionInfo> actions);

  int size() const { return static_cast<int>(actions_.size()); }
  const ActionInfo& action(int i) const { return actions_[static_cast<std::size_t>(i)]; }
  const std::vector<ActionInfo>& actions() const { return actions_; }

  /// Index of the named action, or -1.
  int index_of(const std::string& name) const;

  const std::vector<int>& object_involved_indices() const { return involved_; }
  const std::vector<int>& objectless_indices() const { return objectless_; }

 private:
  std::vector<ActionInfo> actions_;
  std::vector<int> involved_;
  std::vector<int> objectless_;
};

enum class StreamTag { kHuman, kObject, kPairwise, kFusedEarly };

/// Per-action scores from one stream, each in [0, 1].
struct ActionScores {
  std::vector<double> values;
  StreamTag tag = StreamTag::kHuman;
};

/// Two fully connected layers: fc2(relu(fc1(x))).
struct StreamHead {
  Tensor fc1_w, fc1_b;
  Tensor fc2_w, fc2_b;
};

Tensor stream_logits(const Tensor& feat, const StreamHead& head);
Tensor stream_score_tensor(const Tensor& feat, const StreamHead& head);

ActionScores human_stream_scores(const Tensor& feat, const StreamHead& head);
ActionScores object_stream_scores(const Tensor& feat, const StreamHead& head);

/// Rasterizes the human and object boxes into a two-channel S x S indicator
/// image over their union box: channel 0 marks cells whose centers fall in
/// the human box, channel 1 the object box.
Tensor pairwise_binary_map(const BBox& b_h, const BBox& b_o, int raster);

/// Spatial-layout CNN: two conv+relu+pool stages, then flatten; the
/// flattened feature is concatenated with the human appearance feature
/// before the scoring head.
struct PairwiseNet {
  Tensor conv1_w, conv1_b;
  Tensor conv2_w, conv2_b;
  StreamHead head;
};

Tensor pairwise_feature(const Tensor& bmap, const PairwiseNet& net);
Tensor pairwise_logits(const Tensor& bmap, const Tensor& human_inst,
                       const PairwiseNet& net);
ActionScores pairwise_stream_scores(const Tensor& bmap, const Tensor& human_inst,
                                    const PairwiseNet& net);

Tensor early_fusion_logits(const Tensor& h_feat, const Tensor& o_feat,
                           const Tensor& sp_feat, const StreamHead& head);
ActionScores early_fusion_scores(const Tensor& h_feat, const Tensor& o_feat,
                                 const Tensor& sp_feat, const StreamHead& head);

}  // namespace ican
