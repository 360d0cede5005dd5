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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

#include "ican/data_io.hpp"
#include "ican/rng.hpp"

namespace ican {

namespace {

const char* kVerbPool[] = {"lift", "push", "hold", "drag", "carry", "inspect",
                           "ride", "kick", "pull", "spin", "tap", "poke",
                           "toss", "catch", "point", "wear"};

void validate_spec(const SynthSpec& spec) {
  if (spec.images < 1) throw std::invalid_argument("synth: images must be >= 1");
  if (spec.actions < 2) throw std::invalid_argument("synth: at least 2 actions required");
  if (spec.categories < 1) throw std::invalid_argument("synth: at least 1 category required");
  if (spec.actions - 1 < spec.categories) {
    throw std::invalid_argument("synth: need at least one object action per category (" +
                                std::to_string(spec.actions - 1) + " actions for " +
                                std::to_string(spec.categories) + " categories)");
  }
  if (spec.channels < spec.categories + 4) {
    throw std::invalid_argument("synth: need at least categories + 4 channels, got " +
                                std::to_string(spec.channels));
  }
  if (spec.layout_buckets < 1 || spec.layout_buckets > 2) {
    throw std::invalid_argument("synth: layout_buckets must be 1 or 2");
  }
  if (spec.grid_h < 8 || spec.grid_w < 8) {
    throw std::invalid_argument("synth: grid too small for requested box counts (need >= 8x8 cells)");
  }
  if (spec.min_persons < 1 || spec.max_persons < spec.min_persons ||
      spec.min_objects < 1 || spec.max_objects < spec.min_objects) {
    throw std::invalid_argument("synth: invalid instance count range");
  }
}

ActionVocabulary build_vocab(const SynthSpec& spec) {
  std::vector<ActionInfo> actions;
  const int object_actions = spec.actions - 1;
  for (int a = 0; a < object_actions; ++a) {
    ActionInfo info;
    info.name = a < 16 ? kVerbPool[a] : "act" + std::to_string(a);
    info.object_involved = true;
    info.target_category = 1 + (a % spec.categories);
    actions.push_back(std::move(info));
  }
  actions.push_back(ActionInfo{"wave", false, -1});
  return ActionVocabulary(std::move(actions));
}

// Matches the projection used by ROI pooling.
int project(double v, double inv_cell) {
  return static_cast<int>(std::ceil(v * inv_cell - 0.5));
}

struct Painter {
  Tensor& fmap;
  int channels, h, w;
  double inv_cell;

  void add_interior(const BBox& b, int channel, double amp) {
    int x1 = std::clamp(project(b.x1, inv_cell), 0, w);
    int y1 = std::clamp(project(b.y1, inv_cell), 0, h);
    int x2 = std::clamp(project(b.x2, inv_cell), 0, w);
    int y2 = std::clamp(project(b.y2, inv_cell), 0, h);
    for (int i = y1; i < y2; ++i) {
      for (int j = x1; j < x2; ++j) {
        fmap.mutable_data()[(static_cast<std::size_t>(channel) * h + i) * w + j] += amp;
      }
    }
  }

  // One-cell ring just outside the projected box.
  void add_halo(const BBox& b, int channel, double amp) {
    int x1 = project(b.x1, inv_cell), y1 = project(b.y1, inv_cell);
    int x2 = project(b.x2, inv_cell), y2 = project(b.y2, inv_cell);
    for (int i = y1 - 1; i <= y2; ++i) {
      for (int j = x1 - 1; j <= x2; ++j) {
        if (i < 0 || i >= h || j < 0 || j >= w) continue;
        bool inside = i >= y1 && i < y2 && j >= x1 && j < x2;
        if (inside) continue;
        fmap.mutable_data()[(static_cast<std::size_t>(channel) * h + i) * w + j] += amp;
      }
    }
  }
};

}  // namespace

int synth_rule_action(const SynthSpec& spec, int category, int bucket) {
  if (category < 1 || category > spec.categories) {
    throw std::invalid_argument("synth rule: category out of range");
  }
  const int object_actions = spec.actions - 1;
  int count = 0;
  for (int a = category - 1; a < object_actions; a += spec.categories) ++count;
  int pick = std::min(bucket, count - 1);
  return (category - 1) + pick * spec.categories;
}

SynthOutput synth_generate(const SynthSpec& spec) {
  validate_spec(spec);
  Rng rng(spec.seed);
  SynthOutput out;
  out.gt.vocab = build_vocab(spec);

  const double img_w = spec.grid_w * spec.cell_px;
  const double img_h = spec.grid_h * spec.cell_px;
  const double inv_cell = 1.0 / spec.cell_px;
  const int solo_channel = spec.categories + 1;
  const int id_cos_channel = spec.categories + 2;
  const int id_sin_channel = spec.categories + 3;
  const double two_pi = 2.0 * 3.14159265358979323846;

  auto random_box = [&rng, &spec, img_w, img_h] {
    double bw = rng.uniform(3.0, 6.0) * spec.cell_px;
    double bh = rng.uniform(3.0, 6.0) * spec.cell_px;
    double x1 = rng.uniform(0.0, img_w - bw);
    double y1 = rng.uniform(0.0, img_h - bh);
    return BBox(x1, y1, x1 + bw, y1 + bh);
  };
  auto jittered = [&rng, &spec, img_w, img_h](const BBox& b) {
    double j = spec.jitter_px;
    double x1 = std::clamp(b.x1 + rng.uniform(-j, j), 0.0, img_w);
    double y1 = std::clamp(b.y1 + rng.uniform(-j, j), 0.0, img_h);
    double x2 = std::clamp(b.x2 + rng.uniform(-j, j), 0.0, img_w);
    double y2 = std::clamp(b.y2 + rng.uniform(-j, j), 0.0, img_h);
    if (x2 <= x1) x2 = x1 + 1.0;
    if (y2 <= y1) y2 = y1 + 1.0;
    return BBox(x1, y1, x2, y2);
  };

  for (int n = 0; n < spec.images; ++n) {
    char id[32];
    std::snprintf(id, sizeof(id), "img%05d", n);
    out.image_ids.emplace_back(id);

    Tensor fmap = Tensor::zeros({spec.channels, spec.grid_h, spec.grid_w});
    for (double& v : fmap.mutable_data()) v = rng.normal(0.0, spec.noise_sigma);
    Painter painter{fmap, spec.channels, spec.grid_h, spec.grid_w, inv_cell};

    const int n_persons = spec.min_persons + rng.uniform_int(spec.max_persons - spec.min_persons + 1);
    const int n_objects = spec.min_objects + rng.uniform_int(spec.max_objects - spec.min_objects + 1);

    struct Person {
      BBox box;
      bool solo;
    };
    struct Object {
      BBox box;
      int category;
    };
    std::vector<Person> persons;
    std::vector<Object> objects;
    for (int p = 0; p < n_persons; ++p) {
      Person person{random_box(), rng.uniform() < spec.solo_prob};
      painter.add_interior(person.box, 0, spec.person_amp);
      if (person.solo) painter.add_interior(person.box, solo_channel, spec.solo_amp);
      persons.push_back(person);
    }

    // Objects are planted either near one person (interacting) or far from
    // all of them; every person-object distance is kept outside the band
    // radius +- margin, so the predicate has a clean margin.
    const double near = spec.interact_radius - spec.margin_px;
    const double far = spec.interact_radius + spec.margin_px;
    auto margin_ok = [&persons, near, far, &spec](const BBox& box) {
      for (const Person& p : persons) {
        double dx = box.center_x() - p.box.center_x();
        double dy = box.center_y() - p.box.center_y();
        double d = std::sqrt(dx * dx + dy * dy);
        if (d > near && d < far) return false;
        // Interacting pairs keep the layout bucket readable.
        if (d <= near && std::abs(dx) < spec.dx_margin_px) return false;
      }
      return true;
    };
    // Identity directions are spread around the circle so instances in one
    // image stay distinguishable.
    const double id_phase = rng.uniform(0.0, two_pi);
    int id_slot = 0;
    for (int o = 0; o < n_objects; ++o) {
      const bool want_near = rng.uniform() < spec.interact_prob;
      const int owner = rng.uniform_int(static_cast<int>(persons.size()));
      bool placed = false;
      BBox box(0, 0, 1, 1);
      for (int attempt = 0; attempt < 80 && !placed; ++attempt) {
        box = random_box();
        double bw = box.width(), bh = box.height();
        if (want_near) {
          // Build a compliant offset directly: horizontal part clears the
          // bucket margin, total distance stays inside the near disc.
          double max_dx = near * 0.95;
          double dx = rng.uniform(spec.dx_margin_px, max_dx);
          if (rng.uniform() < 0.5) dx = -dx;
          double dy_cap = std::sqrt(std::max(near * near * 0.9025 - dx * dx, 0.0));
          double dy = rng.uniform(-dy_cap, dy_cap);
          double cx = persons[static_cast<std::size_t>(owner)].box.center_x() + dx;
          double cy = persons[static_cast<std::size_t>(owner)].box.center_y() + dy;
          double x1 = std::clamp(cx - bw / 2, 0.0, img_w - bw);
          double y1 = std::clamp(cy - bh / 2, 0.0, img_h - bh);
          box = BBox(x1, y1, x1 + bw, y1 + bh);
        }
        placed = margin_ok(box);
      }
      if (!placed) continue;
      double theta = id_phase +
                     two_pi * (id_slot + rng.uniform(0.0, 0.4)) / spec.max_objects;
      ++id_slot;
      double id_cos = std::cos(theta), id_sin = std::sin(theta);
      Object object{box, 1 + rng.uniform_int(spec.categories)};
      painter.add_interior(object.box, id_cos_channel, spec.identity_amp * id_cos);
      painter.add_interior(object.box, id_sin_channel, spec.identity_amp * id_sin);
      painter.add_halo(object.box, object.category, spec.halo_amp);
      painter.add_halo(object.box, id_cos_channel, spec.halo_amp * id_cos);
      painter.add_halo(object.box, id_sin_channel, spec.halo_amp * id_sin);
      objects.push_back(object);
    }

    GtImage gt_img;
    gt_img.image_id = id;
    if (!persons.empty()) gt_img.categories_present.insert(0);
    for (const Object& o : objects) gt_img.categories_present.insert(o.category);
    for (const Person& p : persons) {
      for (const Object& o : objects) {
        double dx = o.box.center_x() - p.box.center_x();
        double dy = o.box.center_y() - p.box.center_y();
        if (std::sqrt(dx * dx + dy * dy) > spec.interact_radius) continue;
        int bucket = spec.layout_buckets == 2 && dx >= 0.0 ? 1 : 0;
        GtTriplet t;
        t.human_box = p.box;
        t.object_box = o.box;
        t.action = synth_rule_action(spec, o.category, bucket);
        gt_img.triplets.push_back(std::move(t));
      }
      if (p.solo) {
        GtTriplet t;
        t.human_box = p.box;
        t.action = spec.actions - 1;
        gt_img.triplets.push_back(std::move(t));
      }
    }
    out.gt.images.push_back(std::move(gt_img));

    // Detector confidences stay in a narrow band (quality-correlated in real
    // detectors); an occasional sub-threshold spurious box exercises the
    // score filtering.
    ImageDetections dets;
    dets.image_id = id;
    for (const Person& p : persons) {
      dets.detections.push_back({jittered(p.box), 0, rng.uniform(0.85, 0.98), true});
    }
    for (const Object& o : objects) {
      dets.detections.push_back({jittered(o.box), o.category, rng.uniform(0.8, 0.98), false});
    }
    if (rng.uniform() < 0.15) {
      dets.detections.push_back({random_box(), 1 + rng.uniform_int(spec.categories),
                                 rng.uniform(0.05, 0.35), false});
    }
    out.detections.push_back(std::move(dets));
    out.feature_maps.push_back(std::move(fmap));
  }
  return out;
}

void write_synth(const SynthOutput& out, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "features");
  for (std::size_t i = 0; i < out.image_ids.size(); ++i) {
    save_feature_map((fs::path(dir) / "features" / (out.image_ids[i] + ".fmap")).string(),
                     out.feature_maps[i], out.image_ids[i]);
  }
  save_detections((fs::path(dir) / "detections.jsonl").string(), out.detections);
  save_ground_truth((fs::path(dir) / "ground_truth.json").string(), out.gt);
}

}  // namespace ican
