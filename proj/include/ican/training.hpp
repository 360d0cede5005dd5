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
#include <ostream>
#include <span>
#include <vector>

#include "ican/data_io.hpp"
#include "ican/model.hpp"

namespace ican {

/// One training pair: a human box, an optional object box and the binary
/// action labels. Object-involved labels describe this pair; objectless
/// labels describe the human.
struct TrainSample {
  int image_index = 0;
  BBox human_box;
  std::optional<BBox> object_box;
  std::vector<double> labels;
};

struct TrainingSet {
  std::vector<Tensor> feature_maps;
  std::vector<TrainSample> positives;  // at least one object-involved label
  std::vector<TrainSample> negatives;
};

/// Pairs detections with ground-truth triplets (IoU >= 0.5 on both boxes)
/// to produce labeled samples; every human-object detection pair becomes a
/// sample, those without any matching annotation as negatives. Objectless
/// labels are attached to every pair involving that human.
TrainingSet build_training_set(const std::vector<std::string>& image_ids,
                               const std::vector<Tensor>& fmaps,
                               const std::vector<ImageDetections>& dets,
                               const GroundTruth& gt);

/// Mean over actions of -[y ln s + (1 - y) ln(1 - s)] for binary labels.
double bce_loss(const ActionScores& scores, std::span<const double> labels);

/// One classical SGD update: v <- momentum*v + (g + weight_decay*w),
/// w <- w - lr*v.
void sgd_step(std::span<double> weights, std::span<const double> grads,
              std::span<double> velocity, double lr, double momentum,
              double weight_decay);

/// Per-parameter velocity state over a fixed parameter list.
class SgdOptimizer {
 public:
  SgdOptimizer(NamedTensors params, double lr, double momentum,
               double weight_decay);
  void step();
  long iteration() const { return iteration_; }

 private:
  NamedTensors params_;
  std::vector<std::vector<double>> velocity_;
  double lr_, momentum_, weight_decay_;
  long iteration_ = 0;
};

struct TrainReport {
  std::vector<std::pair<long, double>> loss_curve;  // (iteration, batch loss)
  double final_loss = 0.0;
};

/// Minibatch training of all streams: per sample, the human stream fits the
/// full label vector, object and pairwise streams fit the object-involved
/// subset, losses summed with weight 1 each. Batches mix positives and
/// negatives at the configured ratio. Deterministic given the seed. Throws
/// with the offending stream named if a loss turns non-finite.
TrainReport train(Model& model, const TrainingSet& data, const TrainConfig& cfg,
                  long iterations, std::uint64_t seed,
                  std::ostream* log = nullptr);

}  // namespace ican
