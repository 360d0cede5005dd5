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

#include "ican/evaluation.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace ican {

int GroundTruth::image_index(const std::string& id) const {
  for (int i = 0; i < static_cast<int>(images.size()); ++i) {
    if (images[static_cast<std::size_t>(i)].image_id == id) return i;
  }
  return -1;
}

long GroundTruth::gt_count(int action) const {
  long n = 0;
  for (const GtImage& img : images) {
    for (const GtTriplet& t : img.triplets) {
      if (t.action == action) ++n;
    }
  }
  return n;
}

EvalSetting parse_eval_setting(const std::string& s) {
  if (s == "default") return EvalSetting::kDefault;
  if (s == "known_object") return EvalSetting::kKnownObject;
  throw std::invalid_argument("unknown evaluation setting '" + s +
                              "' (expected default|known_object)");
}

std::string eval_setting_name(EvalSetting s) {
  return s == EvalSetting::kDefault ? "default" : "known_object";
}

double iou(const BBox& a, const BBox& b) {
  double ix = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  double iy = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  double inter = ix * iy;
  return inter / (a.area() + b.area() - inter);
}

namespace {

void check_sorted(const std::vector<PredTriplet>& preds) {
  for (std::size_t i = 1; i < preds.size(); ++i) {
    if (preds[i].score > preds[i - 1].score) {
      throw std::invalid_argument(
          "match_triplets: predictions must be sorted by descending score");
    }
  }
}

struct GtRef {
  int image = 0;
  int index = 0;  // position within image.triplets
};

// Per-action ground-truth list in (image, triplet) order.
std::vector<GtRef> collect_gt(const GroundTruth& gt, int action) {
  std::vector<GtRef> refs;
  for (int i = 0; i < static_cast<int>(gt.images.size()); ++i) {
    const GtImage& img = gt.images[static_cast<std::size_t>(i)];
    for (int j = 0; j < static_cast<int>(img.triplets.size()); ++j) {
      if (img.triplets[static_cast<std::size_t>(j)].action == action) {
        refs.push_back({i, j});
      }
    }
  }
  return refs;
}

// Eligible GT ids for one prediction, with the matching quality
// min(iou_h, iou_o) used to rank candidates.
std::vector<std::pair<int, double>> eligible_gts(const PredTriplet& pred,
                                                 const GroundTruth& gt,
                                                 const std::vector<GtRef>& refs,
                                                 bool involved, int image) {
  std::vector<std::pair<int, double>> out;
  for (int g = 0; g < static_cast<int>(refs.size()); ++g) {
    const GtRef& ref = refs[static_cast<std::size_t>(g)];
    if (ref.image != image) continue;
    const GtTriplet& t =
        gt.images[static_cast<std::size_t>(ref.image)].triplets[static_cast<std::size_t>(ref.index)];
    double iou_h = iou(pred.human_box, t.human_box);
    if (iou_h < 0.5) continue;
    double quality = iou_h;
    if (involved) {
      if (!pred.object_box || !t.object_box) continue;
      double iou_o = iou(*pred.object_box, *t.object_box);
      if (iou_o < 0.5) continue;
      quality = std::min(iou_h, iou_o);
    }
    out.emplace_back(g, quality);
  }
  return out;
}

}  // namespace

std::vector<char> match_triplets(const std::vector<PredTriplet>& preds,
                                 const GroundTruth& gt, int action) {
  check_sorted(preds);
  if (action < 0 || action >= gt.vocab.size()) {
    throw std::invalid_argument("match_triplets: action index out of range");
  }
  const bool involved = gt.vocab.action(action).object_involved;
  const std::vector<GtRef> refs = collect_gt(gt, action);
  std::vector<char> used(refs.size(), 0);
  std::vector<char> flags;
  for (const PredTriplet& pred : preds) {
    if (pred.action != action) continue;
    int image = gt.image_index(pred.image_id);
    if (image < 0) {
      throw std::invalid_argument("match_triplets: prediction references unknown image '" +
                                  pred.image_id + "'");
    }
    auto candidates = eligible_gts(pred, gt, refs, involved, image);
    int best = -1;
    double best_quality = -1.0;
    for (const auto& [g, quality] : candidates) {
      if (used[static_cast<std::size_t>(g)]) continue;
      if (quality > best_quality) {
        best_quality = quality;
        best = g;
      }
    }
    if (best >= 0) {
      used[static_cast<std::size_t>(best)] = 1;
      flags.push_back(1);
    } else {
      flags.push_back(0);
    }
  }
  return flags;
}

std::optional<double> average_precision(const std::vector<char>& flags,
                                        long num_gt) {
  if (num_gt < 0) throw std::invalid_argument("average_precision: num_gt < 0");
  long tp_total = 0;
  for (char f : flags) tp_total += f ? 1 : 0;
  if (tp_total > num_gt) {
    throw std::invalid_argument("average_precision: " + std::to_string(tp_total) +
                                " true positives exceed " + std::to_string(num_gt) +
                                " ground-truth instances");
  }
  if (num_gt == 0) return std::nullopt;
  const std::size_t k = flags.size();
  std::vector<double> precision(k);
  long tp = 0;
  for (std::size_t i = 0; i < k; ++i) {
    tp += flags[i] ? 1 : 0;
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
  }
  // Precision envelope: max over this and all later ranks.
  for (std::size_t i = k; i-- > 1;) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    if (flags[i]) acc += precision[i];
  }
  return acc / static_cast<double>(num_gt);
}

namespace {

struct GroupedPreds {
  std::vector<std::vector<PredTriplet>> by_action;  // each sorted by score desc
};

GroupedPreds group_and_rank(const std::vector<PredTriplet>& preds,
                            const GroundTruth& gt, EvalSetting setting) {
  GroupedPreds grouped;
  grouped.by_action.resize(static_cast<std::size_t>(gt.vocab.size()));
  for (const PredTriplet& p : preds) {
    if (p.action < 0 || p.action >= gt.vocab.size()) {
      throw std::invalid_argument("role_map: prediction action index out of range");
    }
    int image = gt.image_index(p.image_id);
    if (image < 0) {
      throw std::invalid_argument("role_map: prediction references unknown image '" +
                                  p.image_id + "'");
    }
    const ActionInfo& info = gt.vocab.action(p.action);
    if (setting == EvalSetting::kKnownObject && info.object_involved) {
      const auto& present = gt.images[static_cast<std::size_t>(image)].categories_present;
      if (present.find(info.target_category) == present.end()) continue;
    }
    grouped.by_action[static_cast<std::size_t>(p.action)].push_back(p);
  }
  for (auto& list : grouped.by_action) {
    std::stable_sort(list.begin(), list.end(),
                     [](const PredTriplet& a, const PredTriplet& b) {
                       return a.score > b.score;
                     });
  }
  return grouped;
}

EvalResult summarize(const GroundTruth& gt, EvalSetting setting,
                     const std::vector<std::vector<char>>& flags_per_action) {
  EvalResult result;
  result.setting = setting;
  double ap_sum = 0.0;
  int ap_count = 0;
  for (int a = 0; a < gt.vocab.size(); ++a) {
    ActionEval ev;
    ev.name = gt.vocab.action(a).name;
    ev.num_gt = gt.gt_count(a);
    const auto& flags = flags_per_action[static_cast<std::size_t>(a)];
    for (char f : flags) {
      if (f) ++ev.tp;
      else ++ev.fp;
    }
    ev.ap = average_precision(flags, ev.num_gt);
    if (ev.ap) {
      ap_sum += *ev.ap;
      ++ap_count;
    }
    result.per_action.push_back(std::move(ev));
  }
  result.map = ap_count > 0 ? ap_sum / ap_count : 0.0;
  return result;
}

}  // namespace

EvalResult role_map(const std::vector<PredTriplet>& preds, const GroundTruth& gt,
                    EvalSetting setting) {
  GroupedPreds grouped = group_and_rank(preds, gt, setting);
  std::vector<std::vector<char>> flags(static_cast<std::size_t>(gt.vocab.size()));
  for (int a = 0; a < gt.vocab.size(); ++a) {
    flags[static_cast<std::size_t>(a)] =
        match_triplets(grouped.by_action[static_cast<std::size_t>(a)], gt, a);
  }
  return summarize(gt, setting, flags);
}

EvalResult oracle_role_map(const std::vector<PredTriplet>& preds,
                           const GroundTruth& gt, EvalSetting setting) {
  GroupedPreds grouped = group_and_rank(preds, gt, setting);
  std::vector<std::vector<char>> flags(static_cast<std::size_t>(gt.vocab.size()));
  for (int a = 0; a < gt.vocab.size(); ++a) {
    const auto& ranked = grouped.by_action[static_cast<std::size_t>(a)];
    if (ranked.size() > 12) {
      throw std::invalid_argument("oracle_role_map: instance too large (" +
                                  std::to_string(ranked.size()) +
                                  " predictions for one action)");
    }
    const bool involved = gt.vocab.action(a).object_involved;
    const std::vector<GtRef> refs = collect_gt(gt, a);
    if (refs.size() > 63) {
      throw std::invalid_argument("oracle_role_map: instance too large");
    }
    // All assignment states (masks of consumed GTs) that realize the maximal
    // true-positive count at every prefix processed so far.
    std::vector<std::uint64_t> frontier = {0};
    std::vector<char>& out = flags[static_cast<std::size_t>(a)];
    for (const PredTriplet& pred : ranked) {
      int image = gt.image_index(pred.image_id);
      auto candidates = eligible_gts(pred, gt, refs, involved, image);
      std::vector<std::uint64_t> gained;
      for (std::uint64_t mask : frontier) {
        for (const auto& [g, quality] : candidates) {
          (void)quality;
          std::uint64_t bit = 1ULL << g;
          if (!(mask & bit)) gained.push_back(mask | bit);
        }
      }
      if (!gained.empty()) {
        std::sort(gained.begin(), gained.end());
        gained.erase(std::unique(gained.begin(), gained.end()), gained.end());
        frontier = std::move(gained);
        out.push_back(1);
      } else {
        out.push_back(0);  // frontier unchanged, prediction cannot add a match
      }
    }
  }
  return summarize(gt, setting, flags);
}

std::string eval_report(const EvalResult& result, int rare_threshold) {
  std::ostringstream os;
  os << "setting: " << eval_setting_name(result.setting) << "\n";
  os << "action                           AP      gt      tp      fp  missed\n";
  for (const ActionEval& ev : result.per_action) {
    char line[160];
    if (ev.ap) {
      std::snprintf(line, sizeof(line), "%-24s %9.4f %7ld %7ld %7ld %7ld\n",
                    ev.name.c_str(), *ev.ap, ev.num_gt, ev.tp, ev.fp,
                    ev.num_gt - ev.tp);
    } else {
      std::snprintf(line, sizeof(line), "%-24s %9s %7ld %7ld %7ld %7s\n",
                    ev.name.c_str(), "n/a", ev.num_gt, ev.tp, ev.fp, "n/a");
    }
    os << line;
  }
  char mean_line[64];
  std::snprintf(mean_line, sizeof(mean_line), "role mAP: %.4f\n", result.map);
  os << mean_line;
  if (rare_threshold >= 0) {
    double rare_sum = 0.0, common_sum = 0.0;
    int rare_n = 0, common_n = 0;
    for (const ActionEval& ev : result.per_action) {
      if (!ev.ap) continue;
      if (ev.num_gt < rare_threshold) {
        rare_sum += *ev.ap;
        ++rare_n;
      } else {
        common_sum += *ev.ap;
        ++common_n;
      }
    }
    char split[128];
    std::snprintf(split, sizeof(split),
                  "rare (<%d gt) mAP: %.4f over %d classes; non-rare mAP: %.4f over %d classes\n",
                  rare_threshold, rare_n ? rare_sum / rare_n : 0.0, rare_n,
                  common_n ? common_sum / common_n : 0.0, common_n);
    os << split;
  }
  return os.str();
}

}  // namespace ican
