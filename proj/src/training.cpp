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

#include "ican/training.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include "ican/evaluation.hpp"
#include "ican/rng.hpp"

namespace ican {

TrainingSet build_training_set(const std::vector<std::string>& image_ids,
                               const std::vector<Tensor>& fmaps,
                               const std::vector<ImageDetections>& dets,
                               const GroundTruth& gt) {
  if (image_ids.size() != fmaps.size()) {
    throw std::invalid_argument("training set: image ids and feature maps disagree");
  }
  std::map<std::string, const ImageDetections*> dets_by_id;
  for (const ImageDetections& d : dets) dets_by_id[d.image_id] = &d;

  TrainingSet set;
  set.feature_maps = fmaps;
  const int a_total = gt.vocab.size();
  for (int img = 0; img < static_cast<int>(image_ids.size()); ++img) {
    const std::string& id = image_ids[static_cast<std::size_t>(img)];
    int gt_index = gt.image_index(id);
    if (gt_index < 0) {
      throw std::invalid_argument("training set: image '" + id + "' has no annotations");
    }
    auto it = dets_by_id.find(id);
    if (it == dets_by_id.end()) {
      throw std::invalid_argument("training set: image '" + id + "' has no detections");
    }
    const GtImage& gt_img = gt.images[static_cast<std::size_t>(gt_index)];
    const FilteredDetections filtered = filter_detections(it->second->detections);

    for (int hi : filtered.humans) {
      const Detection& human = it->second->detections[static_cast<std::size_t>(hi)];
      // Objectless labels belong to the human and ride on every pair.
      std::vector<double> solo_labels(static_cast<std::size_t>(a_total), 0.0);
      for (const GtTriplet& t : gt_img.triplets) {
        if (gt.vocab.action(t.action).object_involved) continue;
        if (iou(human.box, t.human_box) >= 0.5) {
          solo_labels[static_cast<std::size_t>(t.action)] = 1.0;
        }
      }
      for (int oi : filtered.objects) {
        if (oi == hi) continue;
        const Detection& object = it->second->detections[static_cast<std::size_t>(oi)];
        TrainSample sample;
        sample.image_index = img;
        sample.human_box = human.box;
        sample.object_box = object.box;
        sample.labels = solo_labels;
        bool positive = false;
        for (const GtTriplet& t : gt_img.triplets) {
          if (!gt.vocab.action(t.action).object_involved) continue;
          if (iou(human.box, t.human_box) >= 0.5 && t.object_box &&
              iou(object.box, *t.object_box) >= 0.5) {
            sample.labels[static_cast<std::size_t>(t.action)] = 1.0;
            positive = true;
          }
        }
        (positive ? set.positives : set.negatives).push_back(std::move(sample));
      }
    }
  }
  return set;
}

double bce_loss(const ActionScores& scores, std::span<const double> labels) {
  if (scores.values.size() != labels.size()) {
    throw std::invalid_argument("bce_loss: got " + std::to_string(scores.values.size()) +
                                " scores vs " + std::to_string(labels.size()) + " labels");
  }
  if (scores.values.empty()) throw std::invalid_argument("bce_loss: empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    double s = scores.values[i];
    acc += labels[i] > 0.5 ? -std::log(s) : -std::log1p(-s);
  }
  return acc / static_cast<double>(labels.size());
}

void sgd_step(std::span<double> weights, std::span<const double> grads,
              std::span<double> velocity, double lr, double momentum,
              double weight_decay) {
  if (weights.size() != grads.size() || weights.size() != velocity.size()) {
    throw std::invalid_argument("sgd_step: buffer sizes disagree");
  }
  for (std::size_t i = 0; i < weights.size(); ++i) {
    velocity[i] = momentum * velocity[i] + (grads[i] + weight_decay * weights[i]);
    weights[i] -= lr * velocity[i];
  }
}

SgdOptimizer::SgdOptimizer(NamedTensors params, double lr, double momentum,
                           double weight_decay)
    : params_(std::move(params)), lr_(lr), momentum_(momentum),
      weight_decay_(weight_decay) {
  velocity_.reserve(params_.size());
  for (const auto& [name, t] : params_) {
    velocity_.emplace_back(t.size(), 0.0);
  }
}

void SgdOptimizer::step() {
  for (std::size_t p = 0; p < params_.size(); ++p) {
    Tensor t = params_[p].second;
    sgd_step(t.mutable_data(), t.grad(), velocity_[p], lr_, momentum_, weight_decay_);
  }
  ++iteration_;
}

namespace {

struct SampleLoss {
  Tensor total;
  double human = 0.0, object = 0.0, pairwise = 0.0, early = 0.0;
};

void check_finite(double v, const char* stream, long iteration) {
  if (!std::isfinite(v)) {
    throw std::runtime_error("training diverged: non-finite loss in the " +
                             std::string(stream) + " stream at iteration " +
                             std::to_string(iteration));
  }
}

SampleLoss sample_loss(const Model& model, const TrainingSet& data,
                       const TrainSample& sample, bool train_early,
                       long iteration) {
  const Tensor& fmap = data.feature_maps[static_cast<std::size_t>(sample.image_index)];
  const ModelConfig& cfg = model.cfg;
  SampleLoss out;

  InstanceFeature h_inst = extract_instance_feature(
      fmap, sample.human_box, model.human, InstanceRole::kHuman, cfg.roi_out,
      cfg.spatial_scale);
  Tensor h_feat = h_inst.values;
  switch (cfg.stream_mode(InstanceRole::kHuman)) {
    case ContextMode::kNone:
      break;
    case ContextMode::kWholeImage:
      h_feat = concat({h_inst.values, global_avg_pool(fmap)});
      break;
    case ContextMode::kBottomUp:
      h_feat = concat({h_inst.values,
                       context_feature(fmap, bottom_up_attention_map(fmap, model.human)).values});
      break;
    case ContextMode::kInstanceCentric:
      h_feat = concat({h_inst.values,
                       context_feature(fmap, attention_map(fmap, h_inst, model.human)).values});
      break;
  }
  Tensor h_logits = stream_logits(h_feat, model.human_head);
  Tensor loss = bce_with_logits(h_logits, sample.labels);
  out.human = loss.value();
  check_finite(out.human, "human", iteration);

  if (sample.object_box) {
    const std::vector<int>& involved = model.vocab.object_involved_indices();
    InstanceFeature o_inst = extract_instance_feature(
        fmap, *sample.object_box, model.object, InstanceRole::kObject, cfg.roi_out,
        cfg.spatial_scale);
    Tensor o_feat = o_inst.values;
    switch (cfg.stream_mode(InstanceRole::kObject)) {
      case ContextMode::kNone:
        break;
      case ContextMode::kWholeImage:
        o_feat = concat({o_inst.values, global_avg_pool(fmap)});
        break;
      case ContextMode::kBottomUp:
        o_feat = concat({o_inst.values,
                         context_feature(fmap, bottom_up_attention_map(fmap, model.object)).values});
        break;
      case ContextMode::kInstanceCentric:
        o_feat = concat({o_inst.values,
                         context_feature(fmap, attention_map(fmap, o_inst, model.object)).values});
        break;
    }
    Tensor o_logits = stream_logits(o_feat, model.object_head);
    Tensor o_loss = bce_with_logits_masked(o_logits, sample.labels, involved);
    out.object = o_loss.value();
    check_finite(out.object, "object", iteration);
    loss = add(loss, o_loss);

    Tensor bmap = pairwise_binary_map(sample.human_box, *sample.object_box, cfg.raster);
    Tensor sp_feat = pairwise_feature(bmap, model.pairwise);
    Tensor sp_logits = stream_logits(concat({sp_feat, h_inst.values}), model.pairwise.head);
    Tensor sp_loss = bce_with_logits_masked(sp_logits, sample.labels, involved);
    out.pairwise = sp_loss.value();
    check_finite(out.pairwise, "pairwise", iteration);
    loss = add(loss, sp_loss);

    if (train_early) {
      Tensor e_logits = stream_logits(concat({h_feat, o_feat, sp_feat}), model.early_head);
      Tensor e_loss = bce_with_logits_masked(e_logits, sample.labels, involved);
      out.early = e_loss.value();
      check_finite(out.early, "early-fusion", iteration);
      loss = add(loss, e_loss);
    }
  }
  out.total = loss;
  return out;
}

}  // namespace

TrainReport train(Model& model, const TrainingSet& data, const TrainConfig& cfg,
                  long iterations, std::uint64_t seed, std::ostream* log) {
  if (data.positives.empty()) {
    throw std::invalid_argument("train: empty dataset (no positive samples)");
  }
  for (const TrainSample& s : data.positives) {
    if (s.labels.size() != static_cast<std::size_t>(model.vocab.size())) {
      throw std::invalid_argument("train: sample label length does not match vocabulary");
    }
  }
  model.set_requires_grad(true);
  NamedTensors params = model.named_parameters();
  SgdOptimizer opt(params, cfg.lr, cfg.momentum, cfg.weight_decay);
  Rng rng(seed);

  int n_pos = std::max(1, cfg.batch / (1 + cfg.neg_ratio));
  if (data.negatives.empty()) n_pos = cfg.batch;

  TrainReport report;
  for (long iter = 0; iter < iterations; ++iter) {
    model.zero_grads();
    double batch_loss = 0.0;
    for (int b = 0; b < cfg.batch; ++b) {
      const TrainSample& sample =
          b < n_pos
              ? data.positives[static_cast<std::size_t>(
                    rng.uniform_int(static_cast<int>(data.positives.size())))]
              : data.negatives[static_cast<std::size_t>(
                    rng.uniform_int(static_cast<int>(data.negatives.size())))];
      Tape tape;
      SampleLoss loss = sample_loss(model, data, sample, cfg.train_early, iter);
      batch_loss += loss.total.value();
      tape.backward(loss.total);
    }
    batch_loss /= cfg.batch;
    const double inv_batch = 1.0 / cfg.batch;
    for (auto& [name, t] : params) {
      Tensor tensor = t;
      tensor.node()->ensure_grad();
      for (double& g : tensor.node()->grad) g *= inv_batch;
    }
    opt.step();
    if ((iter + 1) % cfg.log_every == 0 || iter + 1 == iterations) {
      report.loss_curve.emplace_back(iter + 1, batch_loss);
      if (log) {
        (*log) << "iter " << (iter + 1) << " loss " << batch_loss << "\n";
      }
    }
    report.final_loss = batch_loss;
  }
  return report;
}

}  // namespace ican
