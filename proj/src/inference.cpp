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

#include "ican/inference.hpp"

#include <algorithm>
#include <chrono>
#include <sstream>
#include <stdexcept>

#include "ican/rng.hpp"

namespace ican {

FilteredDetections filter_detections(const std::vector<Detection>& dets) {
  FilteredDetections out;
  for (int i = 0; i < static_cast<int>(dets.size()); ++i) {
    const Detection& d = dets[static_cast<std::size_t>(i)];
    if (d.is_person && d.score > 0.8) out.humans.push_back(i);
    if (d.score > 0.4) out.objects.push_back(i);
  }
  return out;
}

std::vector<double> fuse_scores(double s_h, double s_o, const ActionScores& sa_h,
                                const ActionScores& sa_o, const ActionScores& sa_sp) {
  const std::size_t a = sa_h.values.size();
  if (sa_o.values.size() != a || sa_sp.values.size() != a) {
    throw std::invalid_argument("fuse_scores: action vectors disagree in length");
  }
  std::vector<double> fused(a);
  for (std::size_t i = 0; i < a; ++i) {
    fused[i] = s_h * s_o * (sa_h.values[i] + sa_o.values[i]) * sa_sp.values[i];
  }
  return fused;
}

std::vector<HoiTriplet> score_human_only(int human_index, const Detection& human,
                                         const ActionScores& sa_h,
                                         const ActionVocabulary& vocab) {
  std::vector<HoiTriplet> out;
  for (int a : vocab.objectless_indices()) {
    HoiTriplet t;
    t.human_index = human_index;
    t.human = human;
    t.action = a;
    t.score = human.score * sa_h.values[static_cast<std::size_t>(a)];
    out.push_back(std::move(t));
  }
  return out;
}

FusionMode parse_fusion_mode(const std::string& s) {
  if (s == "late") return FusionMode::kLate;
  if (s == "early") return FusionMode::kEarly;
  throw std::invalid_argument("unknown fusion mode '" + s + "' (expected late|early)");
}

namespace {

void sort_triplets(std::vector<HoiTriplet>& ts) {
  std::sort(ts.begin(), ts.end(), [](const HoiTriplet& a, const HoiTriplet& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.human_index != b.human_index) return a.human_index < b.human_index;
    if (a.object_index != b.object_index) return a.object_index < b.object_index;
    return a.action < b.action;
  });
}

}  // namespace

InferenceResult infer_prefiltered(const Tensor& fmap,
                                  const std::vector<Detection>& dets,
                                  const FilteredDetections& filtered,
                                  const Model& model, FusionMode mode) {
  if (fmap.rank() != 3 || fmap.dim(0) != model.cfg.in_channels) {
    throw std::invalid_argument(
        "infer: feature map has " + std::to_string(fmap.rank() == 3 ? fmap.dim(0) : -1) +
        " channels, model expects " + std::to_string(model.cfg.in_channels));
  }
  InferenceResult result;
  const ActionVocabulary& vocab = model.vocab;

  // Step 1: per-instance features and stream scores, computed once.
  struct InstanceEval {
    Tensor feature;       // ican_forward output
    Tensor inst_appear;   // appearance half, feeds the pairwise stream
    ActionScores scores;
  };
  std::vector<InstanceEval> humans_eval;
  humans_eval.reserve(filtered.humans.size());
  for (int hi : filtered.humans) {
    const Detection& d = dets[static_cast<std::size_t>(hi)];
    InstanceEval ev;
    ev.feature = model.role_feature(fmap, d.box, InstanceRole::kHuman);
    Tensor appear = ev.feature;
    if (model.cfg.context_dim(InstanceRole::kHuman) > 0) {
      appear = Tensor::from_data(
          {model.cfg.inst_dim},
          {ev.feature.data().begin(), ev.feature.data().begin() + model.cfg.inst_dim});
    }
    ev.inst_appear = appear;
    ev.scores = human_stream_scores(ev.feature, model.human_head);
    ++result.counters.instance_evals;
    humans_eval.push_back(std::move(ev));
  }
  std::vector<InstanceEval> objects_eval;
  objects_eval.reserve(filtered.objects.size());
  for (int oi : filtered.objects) {
    const Detection& d = dets[static_cast<std::size_t>(oi)];
    InstanceEval ev;
    ev.feature = model.role_feature(fmap, d.box, InstanceRole::kObject);
    ev.scores = object_stream_scores(ev.feature, model.object_head);
    ++result.counters.instance_evals;
    objects_eval.push_back(std::move(ev));
  }

  // Human-only actions ride on the cached human scores.
  for (std::size_t h = 0; h < humans_eval.size(); ++h) {
    const Detection& human = dets[static_cast<std::size_t>(filtered.humans[h])];
    auto solo = score_human_only(static_cast<int>(h), human, humans_eval[h].scores, vocab);
    result.triplets.insert(result.triplets.end(), solo.begin(), solo.end());
  }

  // Step 2: per-pair spatial stream plus score combination.
  for (std::size_t h = 0; h < humans_eval.size(); ++h) {
    const int det_h = filtered.humans[h];
    const Detection& human = dets[static_cast<std::size_t>(det_h)];
    for (std::size_t o = 0; o < objects_eval.size(); ++o) {
      const int det_o = filtered.objects[o];
      if (det_o == det_h) continue;  // a detection never pairs with itself
      const Detection& object = dets[static_cast<std::size_t>(det_o)];
      Tensor bmap = pairwise_binary_map(human.box, object.box, model.cfg.raster);
      Tensor sp_feat = pairwise_feature(bmap, model.pairwise);
      Tensor sp_in = concat({sp_feat, humans_eval[h].inst_appear});
      ActionScores sa_sp{{}, StreamTag::kPairwise};
      {
        Tensor s = sigmoid(stream_logits(sp_in, model.pairwise.head));
        sa_sp.values.assign(s.data().begin(), s.data().end());
      }
      ++result.counters.pairwise_evals;

      std::vector<double> fused;
      if (mode == FusionMode::kLate) {
        fused = fuse_scores(human.score, object.score, humans_eval[h].scores,
                            objects_eval[o].scores, sa_sp);
        ++result.counters.fusions;
      } else {
        ActionScores sa_early = early_fusion_scores(
            humans_eval[h].feature, objects_eval[o].feature, sp_feat, model.early_head);
        ++result.counters.early_head_evals;
        fused.resize(sa_early.values.size());
        for (std::size_t a = 0; a < fused.size(); ++a) {
          fused[a] = human.score * object.score * sa_early.values[a] * sa_sp.values[a];
        }
      }
      for (int a : vocab.object_involved_indices()) {
        HoiTriplet t;
        t.human_index = static_cast<int>(h);
        t.object_index = static_cast<int>(o);
        t.human = human;
        t.object = object;
        t.action = a;
        t.score = fused[static_cast<std::size_t>(a)];
        result.triplets.push_back(std::move(t));
      }
    }
  }
  sort_triplets(result.triplets);
  return result;
}

InferenceResult infer_late(const Tensor& fmap, const std::vector<Detection>& dets,
                           const Model& model) {
  return infer_prefiltered(fmap, dets, filter_detections(dets), model,
                           FusionMode::kLate);
}

InferenceResult infer_early(const Tensor& fmap, const std::vector<Detection>& dets,
                            const Model& model) {
  return infer_prefiltered(fmap, dets, filter_detections(dets), model,
                           FusionMode::kEarly);
}

namespace {

struct BenchScene {
  Tensor fmap;
  std::vector<Detection> dets;
  FilteredDetections filtered;
};

BenchScene make_bench_scene(int n_humans, int n_objects, const ModelConfig& cfg,
                            std::uint64_t seed) {
  Rng rng(seed);
  BenchScene scene;
  const int h = 12, w = 12;
  scene.fmap = Tensor::zeros({cfg.in_channels, h, w});
  for (double& v : scene.fmap.mutable_data()) v = rng.normal(0.0, 0.5);
  const double img_w = w / cfg.spatial_scale;
  const double img_h = h / cfg.spatial_scale;
  auto random_box = [&rng, img_w, img_h] {
    double bw = rng.uniform(0.2, 0.45) * img_w;
    double bh = rng.uniform(0.2, 0.45) * img_h;
    double x1 = rng.uniform(0.0, img_w - bw);
    double y1 = rng.uniform(0.0, img_h - bh);
    return BBox(x1, y1, x1 + bw, y1 + bh);
  };
  // Humans and objects are emitted as disjoint role lists so the counter
  // identities are exactly n+m and n*m.
  for (int i = 0; i < n_humans; ++i) {
    scene.dets.push_back({random_box(), 0, 0.9, true});
    scene.filtered.humans.push_back(static_cast<int>(scene.dets.size()) - 1);
  }
  for (int i = 0; i < n_objects; ++i) {
    scene.dets.push_back({random_box(), 1 + rng.uniform_int(3), 0.9, false});
    scene.filtered.objects.push_back(static_cast<int>(scene.dets.size()) - 1);
  }
  return scene;
}

}  // namespace

std::vector<BenchRow> bench(const std::vector<int>& sizes, const Model& model,
                            std::uint64_t seed) {
  std::vector<BenchRow> rows;
  for (int n : sizes) {
    BenchScene scene = make_bench_scene(n, n, model.cfg, seed + static_cast<std::uint64_t>(n));
    for (FusionMode mode : {FusionMode::kLate, FusionMode::kEarly}) {
      BenchRow row;
      row.n_humans = n;
      row.n_objects = n;
      row.mode = mode;
      double best = 1e300;
      InferenceResult res;
      for (int rep = 0; rep < 3; ++rep) {
        auto t0 = std::chrono::steady_clock::now();
        res = infer_prefiltered(scene.fmap, scene.dets, scene.filtered, model, mode);
        auto t1 = std::chrono::steady_clock::now();
        best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
      }
      row.wall_ms = best;
      row.instance_evals = res.counters.instance_evals;
      row.pair_evals = mode == FusionMode::kLate ? res.counters.fusions
                                                 : res.counters.early_head_evals;
      // Working set: parameters plus the per-instance feature cache.
      long cached = 0;
      cached += static_cast<long>(n) * model.cfg.feat_dim(InstanceRole::kHuman);
      cached += static_cast<long>(n) * model.cfg.feat_dim(InstanceRole::kObject);
      cached += static_cast<long>(n) * 2 * model.vocab.size();
      row.working_set_bytes = 8 * (model.parameter_count() + cached);
      rows.push_back(row);
    }
  }
  return rows;
}

std::string bench_table(const std::vector<BenchRow>& rows) {
  std::ostringstream os;
  os << "    n     mode   wall_ms   instance_evals   pair_evals   working_set\n";
  for (const BenchRow& r : rows) {
    char line[160];
    std::snprintf(line, sizeof(line), "%5d %8s %9.3f %16ld %12ld %13ld\n",
                  r.n_humans, r.mode == FusionMode::kLate ? "late" : "early",
                  r.wall_ms, r.instance_evals, r.pair_evals, r.working_set_bytes);
    os << line;
  }
  return os.str();
}

}  // namespace ican
