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

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ican/bbox.hpp"
#include "ican/streams.hpp"

namespace ican {

struct GtTriplet {
  BBox human_box;
  int action = 0;
  std::optional<BBox> object_box;  // absent for actions without objects
};

struct GtImage {
  std::string image_id;
  std::vector<GtTriplet> triplets;
  std::set<int> categories_present;
};

struct GroundTruth {
  ActionVocabulary vocab;
  std::vector<GtImage> images;

  int image_index(const std::string& id) const;
  long gt_count(int action) const;
};

struct PredTriplet {
  std::string image_id;
  BBox human_box;
  std::optional<BBox> object_box;
  int action = 0;
  double score = 0.0;
};

enum class EvalSetting { kDefault, kKnownObject };
EvalSetting parse_eval_setting(const std::string& s);
std::string eval_setting_name(EvalSetting s);

/// Intersection over union; 0 for disjoint boxes.
double iou(const BBox& a, const BBox& b);

/// Greedy matching in score order for one action: a prediction is a true
/// positive iff an unmatched ground-truth triplet of that action, in the
/// same image, has human IoU >= 0.5 and (for actions with objects) object
/// IoU >= 0.5. Among eligible candidates the one maximizing
/// min(iou_h, iou_o) wins, ties by ground-truth index. Predictions of other
/// actions are ignored. Throws if the list is not sorted by descending score.
std::vector<char> match_triplets(const std::vector<PredTriplet>& preds,
                                 const GroundTruth& gt, int action);

/// Area under the all-points-interpolated precision envelope. Empty when
/// num_gt == 0 (class excluded from the mean). Throws if the flags contain
/// more true positives than num_gt.
std::optional<double> average_precision(const std::vector<char>& flags,
                                        long num_gt);

struct ActionEval {
  std::string name;
  long num_gt = 0;
  long tp = 0;
  long fp = 0;
  std::optional<double> ap;  // empty when num_gt == 0
};

struct EvalResult {
  EvalSetting setting = EvalSetting::kDefault;
  std::vector<ActionEval> per_action;
  double map = 0.0;  // mean over classes with >= 1 ground-truth triplet
};

/// Role mean average precision. Default ranks each action's predictions
/// across all images; known-object first discards predictions on images
/// whose ground-truth category set lacks the action's target category.
EvalResult role_map(const std::vector<PredTriplet>& preds, const GroundTruth& gt,
                    EvalSetting setting);

/// Reference matcher for tests: searches all one-to-one prediction-to-GT
/// assignments consistent with the IoU gates and maximizes the true-positive
/// count at every prefix of the ranking. Requires <= 12 predictions per
/// action.
EvalResult oracle_role_map(const std::vector<PredTriplet>& preds,
                           const GroundTruth& gt, EvalSetting setting);

/// Text report: per-action AP to four decimals plus TP/FP counts and the
/// role mAP. With rare_threshold >= 0, also means over classes with fewer
/// (rare) / at least (non-rare) that many ground-truth instances.
std::string eval_report(const EvalResult& result, int rare_threshold = -1);

}  // namespace ican
