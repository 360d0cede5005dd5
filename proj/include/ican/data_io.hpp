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
#include <string>
#include <vector>

#include "ican/evaluation.hpp"
#include "ican/inference.hpp"
#include "ican/tensor.hpp"

namespace ican {

// ---- Feature-map files ----
// Binary layout: magic "FMAP01", u32 C,H,W (little-endian), f64 values
// row-major, then u32 image-id length and the id bytes. Round-trips
// bit-exactly.

void save_feature_map(const std::string& path, const Tensor& fmap,
                      const std::string& image_id);

struct LoadedFeatureMap {
  Tensor fmap;
  std::string image_id;
};
LoadedFeatureMap load_feature_map(const std::string& path);

/// Loads one .fmap file, or every *.fmap in a directory.
std::vector<LoadedFeatureMap> load_feature_maps(const std::string& path);

// ---- Detections (JSONL, one image per line) ----
// {"image_id": ..., "detections": [{"box": [x1,y1,x2,y2], "category": int,
//  "score": float, "is_person": bool}, ...]}

struct ImageDetections {
  std::string image_id;
  std::vector<Detection> detections;
};

std::vector<ImageDetections> load_detections(const std::string& path);
void save_detections(const std::string& path,
                     const std::vector<ImageDetections>& images);

// ---- Ground truth (JSON) ----
// A vocabulary block (action names, object_involved flags, target category
// per action, the object category ids) plus per-image triplet lists and the
// set of object categories present.

GroundTruth load_ground_truth(const std::string& path);
void save_ground_truth(const std::string& path, const GroundTruth& gt);

// ---- Predictions (JSONL, one triplet per line) ----
// {"image_id": ..., "human_box": [...], "object_box": [...] | null,
//  "action": name, "score": decimal string, 9 significant digits}

void save_predictions(const std::string& path,
                      const std::vector<PredTriplet>& preds,
                      const ActionVocabulary& vocab);
std::vector<PredTriplet> load_predictions(const std::string& path,
                                          const ActionVocabulary& vocab);

/// Score formatting used in prediction files.
std::string format_score(double v);

/// Inference output as evaluation-ready predictions for one image.
std::vector<PredTriplet> to_predictions(const std::vector<HoiTriplet>& triplets,
                                        const std::string& image_id);

// ---- Attention dumps ----

/// 8-bit binary PGM; weights rescaled to [0, 255] by max-normalization.
void write_attention_pgm(const std::string& path, const Tensor& weights);
/// Raw weights, one CSV row per grid row.
void write_attention_csv(const std::string& path, const Tensor& weights);

// ---- Synthetic dataset generator ----

/// The generator plants person and object boxes on a feature grid. Each
/// object carries a random identity direction (two dedicated channels)
/// inside its box, and a halo ring just outside the box carrying the same
/// identity plus the object's category channel. The category is therefore
/// never visible inside a box: reading it requires fetching this instance's
/// halo, and the binding between instance and halo survives only under
/// instance-conditioned attention (image-wide averages mix all halos).
/// A pair interacts iff the box centers are within interact_radius; objects
/// are placed so every person-object distance stays clear of the radius by
/// `margin_px` and interacting pairs keep a horizontal offset, making the
/// predicate and the layout bucket unambiguous. The action is a
/// deterministic function of (object category, horizontal layout bucket).
/// Persons flip a seeded coin for one objectless action, marked in its own
/// channel. Channel layout: 0 person, 1..K categories (halo only), K+1
/// objectless marker, K+2 and K+3 identity.
struct SynthSpec {
  std::uint64_t seed = 1;
  int images = 400;
  int actions = 6;  // the last one involves no object
  int categories = 4;
  int channels = 8;
  int grid_h = 16;
  int grid_w = 16;
  double cell_px = 8.0;  // image pixels per feature-map cell
  int min_persons = 1, max_persons = 4;
  int min_objects = 1, max_objects = 5;
  int layout_buckets = 2;  // 1 disables the spatial part of the rule
  double interact_radius = 52.0;  // pixels between box centers
  double margin_px = 14.0;        // no pair lands within radius +- margin
  double dx_margin_px = 16.0;     // near pairs keep a readable horizontal offset
  double interact_prob = 0.75;    // chance an object is planted near a person
  double person_amp = 1.0;
  double identity_amp = 0.5;      // in-box identity strength
  double halo_amp = 1.5;          // halo category and identity strength
  double solo_amp = 1.5;
  double noise_sigma = 0.05;
  double jitter_px = 1.0;
  double solo_prob = 0.5;
};

struct SynthOutput {
  std::vector<std::string> image_ids;
  std::vector<Tensor> feature_maps;
  std::vector<ImageDetections> detections;
  GroundTruth gt;
};

SynthOutput synth_generate(const SynthSpec& spec);

/// The planted action for an interacting pair (category in [1, categories],
/// bucket in [0, layout_buckets)).
int synth_rule_action(const SynthSpec& spec, int category, int bucket);

/// Writes features/<id>.fmap, detections.jsonl and ground_truth.json.
void write_synth(const SynthOutput& out, const std::string& dir);

}  // namespace ican
