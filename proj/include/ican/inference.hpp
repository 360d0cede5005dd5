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

#include <cstdint>
#include <optional>
#include <vector>

#include "ican/bbox.hpp"
#include "ican/model.hpp"

namespace ican {

/// One detector output: a localized instance with confidence in [0, 1].
struct Detection {
  BBox box;
  int category = 0;
  double score = 1.0;
  bool is_person = false;
};

/// A scored <human, verb, object> hypothesis. `object_index` is -1 and
/// `object` empty for actions that involve no object.
struct HoiTriplet {
  int human_index = -1;
  int object_index = -1;
  Detection human;
  std::optional<Detection> object;
  int action = 0;
  double score = 0.0;
};

/// Index lists into the input detections: humans are persons scoring
/// strictly above 0.8, objects are all detections strictly above 0.4
/// (persons can appear in both).
struct FilteredDetections {
  std::vector<int> humans;
  std::vector<int> objects;
};

FilteredDetections filter_detections(const std::vector<Detection>& dets);

/// Network-evaluation counters for the complexity accounting.
struct EvalCounters {
  long instance_evals = 0;    // per-instance branch + scoring head runs
  long pairwise_evals = 0;    // spatial CNN runs (one per pair)
  long fusions = 0;           // late per-pair score combinations
  long early_head_evals = 0;  // early-fusion head runs (one per pair)
};

/// S[a] = s_h * s_o * (s_h[a] + s_o[a]) * s_sp[a] for every action.
std::vector<double> fuse_scores(double s_h, double s_o, const ActionScores& sa_h,
                                const ActionScores& sa_o, const ActionScores& sa_sp);

/// Triplets for actions without objects: one per human per such action,
/// scored s_h * s_h[a].
std::vector<HoiTriplet> score_human_only(int human_index, const Detection& human,
                                         const ActionScores& sa_h,
                                         const ActionVocabulary& vocab);

enum class FusionMode { kLate, kEarly };

FusionMode parse_fusion_mode(const std::string& s);

struct InferenceResult {
  std::vector<HoiTriplet> triplets;  // sorted by score desc, deterministic ties
  EvalCounters counters;
};

/// Cascade scoring: per-instance stream scores are computed once (O(n))
/// and combined per pair (O(n^2) cheap fusions), plus human-only triplets.
InferenceResult infer_late(const Tensor& fmap, const std::vector<Detection>& dets,
                           const Model& model);

/// Early fusion: a learned head scores every human-object pair.
InferenceResult infer_early(const Tensor& fmap, const std::vector<Detection>& dets,
                            const Model& model);

/// Same pipelines on caller-provided role lists (used by the benchmark,
/// where humans and objects are generated as disjoint sets).
InferenceResult infer_prefiltered(const Tensor& fmap,
                                  const std::vector<Detection>& dets,
                                  const FilteredDetections& filtered,
                                  const Model& model, FusionMode mode);

struct BenchRow {
  int n_humans = 0;
  int n_objects = 0;
  FusionMode mode = FusionMode::kLate;
  double wall_ms = 0.0;        // best of 3
  long working_set_bytes = 0;  // parameters + cached features estimate
  long instance_evals = 0;
  long pair_evals = 0;  // fusions (late) or head evaluations (early)
};

/// Deterministic synthetic scenes (seeded) with n humans and n objects per
/// row; measures both fusion modes.
std::vector<BenchRow> bench(const std::vector<int>& sizes, const Model& model,
                            std::uint64_t seed);

std::string bench_table(const std::vector<BenchRow>& rows);

}  // namespace ican
