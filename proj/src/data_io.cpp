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

#include "ican/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace ican {

namespace {

using nlohmann::json;

constexpr char kFmapMagic[6] = {'F', 'M', 'A', 'P', '0', '1'};

void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& is, const std::string& path) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (is.gcount() != 4) throw std::runtime_error("feature map: truncated file " + path);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

BBox box_from_json(const json& arr, const std::string& where) {
  if (!arr.is_array() || arr.size() != 4) {
    throw std::runtime_error(where + ": box must be [x1, y1, x2, y2]");
  }
  try {
    return BBox(arr[0].get<double>(), arr[1].get<double>(), arr[2].get<double>(),
                arr[3].get<double>());
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(where + ": " + e.what());
  }
}

json box_to_json(const BBox& b) { return json::array({b.x1, b.y1, b.x2, b.y2}); }

}  // namespace

// ---- Feature maps ----

void save_feature_map(const std::string& path, const Tensor& fmap,
                      const std::string& image_id) {
  if (fmap.rank() != 3) {
    throw std::invalid_argument("feature map: expected [C x H x W]");
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("feature map: cannot open " + path + " for writing");
  os.write(kFmapMagic, 6);
  write_u32(os, static_cast<std::uint32_t>(fmap.dim(0)));
  write_u32(os, static_cast<std::uint32_t>(fmap.dim(1)));
  write_u32(os, static_cast<std::uint32_t>(fmap.dim(2)));
  for (double v : fmap.data()) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
  }
  write_u32(os, static_cast<std::uint32_t>(image_id.size()));
  os.write(image_id.data(), static_cast<std::streamsize>(image_id.size()));
  if (!os) throw std::runtime_error("feature map: write failed for " + path);
}

LoadedFeatureMap load_feature_map(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("feature map: cannot open " + path);
  char magic[6];
  is.read(magic, 6);
  if (is.gcount() != 6 || std::memcmp(magic, kFmapMagic, 6) != 0) {
    throw std::runtime_error("feature map: unknown magic in " + path);
  }
  int c = static_cast<int>(read_u32(is, path));
  int h = static_cast<int>(read_u32(is, path));
  int w = static_cast<int>(read_u32(is, path));
  if (c < 1 || h < 1 || w < 1) {
    throw std::runtime_error("feature map: bad dimensions in " + path);
  }
  std::size_t count = static_cast<std::size_t>(c) * h * w;
  std::vector<double> data(count);
  for (std::size_t i = 0; i < count; ++i) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (is.gcount() != 8) throw std::runtime_error("feature map: truncated file " + path);
    std::uint64_t bits = 0;
    for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(b[k]) << (8 * k);
    std::memcpy(&data[i], &bits, 8);
  }
  std::uint32_t id_len = read_u32(is, path);
  std::string id(id_len, '\0');
  is.read(id.data(), id_len);
  if (is.gcount() != static_cast<std::streamsize>(id_len)) {
    throw std::runtime_error("feature map: truncated file " + path);
  }
  return {Tensor::from_data({c, h, w}, std::move(data)), std::move(id)};
}

std::vector<LoadedFeatureMap> load_feature_maps(const std::string& path) {
  namespace fs = std::filesystem;
  std::vector<LoadedFeatureMap> out;
  if (fs::is_directory(path)) {
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.path().extension() == ".fmap") files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());
    for (const std::string& f : files) out.push_back(load_feature_map(f));
  } else {
    out.push_back(load_feature_map(path));
  }
  return out;
}

// ---- Detections ----

std::vector<ImageDetections> load_detections(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("detections: cannot open " + path);
  std::vector<ImageDetections> out;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw std::runtime_error("detections: malformed JSON on line " +
                               std::to_string(line_no) + ": " + e.what());
    }
    if (!j.contains("image_id") || !j["image_id"].is_string() ||
        !j.contains("detections") || !j["detections"].is_array()) {
      throw std::runtime_error("detections: line " + std::to_string(line_no) +
                               " needs image_id and detections fields");
    }
    ImageDetections img;
    img.image_id = j["image_id"].get<std::string>();
    for (const json& dj : j["detections"]) {
      if (!dj.contains("box") || !dj.contains("category") || !dj.contains("score") ||
          !dj.contains("is_person")) {
        throw std::runtime_error("detections: incomplete detection in image '" +
                                 img.image_id + "'");
      }
      Detection d;
      d.box = box_from_json(dj["box"], "detections: image '" + img.image_id + "'");
      d.category = dj["category"].get<int>();
      d.score = dj["score"].get<double>();
      d.is_person = dj["is_person"].get<bool>();
      if (!(d.score >= 0.0 && d.score <= 1.0)) {
        throw std::runtime_error("detections: score " + std::to_string(d.score) +
                                 " outside [0, 1] in image '" + img.image_id + "'");
      }
      img.detections.push_back(d);
    }
    out.push_back(std::move(img));
  }
  return out;
}

void save_detections(const std::string& path,
                     const std::vector<ImageDetections>& images) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("detections: cannot open " + path + " for writing");
  for (const ImageDetections& img : images) {
    json dets = json::array();
    for (const Detection& d : img.detections) {
      dets.push_back(json{{"box", box_to_json(d.box)},
                          {"category", d.category},
                          {"score", d.score},
                          {"is_person", d.is_person}});
    }
    json j{{"image_id", img.image_id}, {"detections", dets}};
    os << j.dump() << "\n";
  }
}

// ---- Ground truth ----

GroundTruth load_ground_truth(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("ground truth: cannot open " + path);
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw std::runtime_error("ground truth: malformed JSON in " + path + ": " + e.what());
  }
  if (!j.contains("vocabulary") || !j.contains("images")) {
    throw std::runtime_error("ground truth: needs vocabulary and images blocks");
  }
  const json& vj = j["vocabulary"];
  if (!vj.contains("actions") || !vj["actions"].is_array() ||
      !vj.contains("object_categories") || !vj["object_categories"].is_array()) {
    throw std::runtime_error("ground truth: vocabulary needs actions and object_categories");
  }
  std::set<int> categories;
  for (const json& cj : vj["object_categories"]) categories.insert(cj.get<int>());
  std::vector<ActionInfo> actions;
  for (const json& aj : vj["actions"]) {
    ActionInfo info;
    info.name = aj.at("name").get<std::string>();
    info.object_involved = aj.at("object_involved").get<bool>();
    if (info.object_involved) {
      if (!aj.contains("target_category")) {
        throw std::runtime_error("ground truth: action '" + info.name +
                                 "' involves an object but names no target_category");
      }
      info.target_category = aj["target_category"].get<int>();
      if (categories.find(info.target_category) == categories.end()) {
        throw std::runtime_error("ground truth: action '" + info.name +
                                 "' references unknown object category " +
                                 std::to_string(info.target_category));
      }
    }
    actions.push_back(std::move(info));
  }
  GroundTruth gt;
  try {
    gt.vocab = ActionVocabulary(std::move(actions));
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("ground truth: ") + e.what());
  }
  std::set<std::string> seen_ids;
  for (const json& ij : j["images"]) {
    GtImage img;
    img.image_id = ij.at("image_id").get<std::string>();
    if (!seen_ids.insert(img.image_id).second) {
      throw std::runtime_error("ground truth: duplicate image id '" + img.image_id + "'");
    }
    if (ij.contains("categories_present")) {
      for (const json& cj : ij["categories_present"]) {
        int c = cj.get<int>();
        if (categories.find(c) == categories.end()) {
          throw std::runtime_error("ground truth: image '" + img.image_id +
                                   "' lists unknown category " + std::to_string(c));
        }
        img.categories_present.insert(c);
      }
    }
    for (const json& tj : ij.at("triplets")) {
      GtTriplet t;
      std::string where = "ground truth: image '" + img.image_id + "'";
      t.human_box = box_from_json(tj.at("human_box"), where);
      std::string action_name = tj.at("action").get<std::string>();
      t.action = gt.vocab.index_of(action_name);
      if (t.action < 0) {
        throw std::runtime_error(where + ": unknown action '" + action_name + "'");
      }
      bool involved = gt.vocab.action(t.action).object_involved;
      bool has_object = tj.contains("object_box") && !tj["object_box"].is_null();
      if (involved && !has_object) {
        throw std::runtime_error(where + ": action '" + action_name +
                                 "' requires an object box");
      }
      if (!involved && has_object) {
        throw std::runtime_error(where + ": action '" + action_name +
                                 "' involves no object but a box was given");
      }
      if (has_object) t.object_box = box_from_json(tj["object_box"], where);
      img.triplets.push_back(std::move(t));
    }
    gt.images.push_back(std::move(img));
  }
  return gt;
}

void save_ground_truth(const std::string& path, const GroundTruth& gt) {
  json actions = json::array();
  std::set<int> categories;
  for (const ActionInfo& a : gt.vocab.actions()) {
    json aj{{"name", a.name}, {"object_involved", a.object_involved}};
    if (a.object_involved) {
      aj["target_category"] = a.target_category;
      categories.insert(a.target_category);
    }
    actions.push_back(std::move(aj));
  }
  for (const GtImage& img : gt.images) {
    for (int c : img.categories_present) categories.insert(c);
  }
  json images = json::array();
  for (const GtImage& img : gt.images) {
    json triplets = json::array();
    for (const GtTriplet& t : img.triplets) {
      json tj{{"human_box", box_to_json(t.human_box)},
              {"action", gt.vocab.action(t.action).name}};
      if (t.object_box) tj["object_box"] = box_to_json(*t.object_box);
      triplets.push_back(std::move(tj));
    }
    images.push_back(json{{"image_id", img.image_id},
                          {"categories_present", img.categories_present},
                          {"triplets", std::move(triplets)}});
  }
  json out{{"vocabulary",
            json{{"actions", std::move(actions)},
                 {"object_categories", std::move(categories)}}},
           {"images", std::move(images)}};
  std::ofstream os(path);
  if (!os) throw std::runtime_error("ground truth: cannot open " + path + " for writing");
  os << out.dump(2) << "\n";
}

// ---- Predictions ----

std::string format_score(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void save_predictions(const std::string& path,
                      const std::vector<PredTriplet>& preds,
                      const ActionVocabulary& vocab) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("predictions: cannot open " + path + " for writing");
  for (const PredTriplet& p : preds) {
    json j{{"image_id", p.image_id},
           {"human_box", box_to_json(p.human_box)},
           {"object_box", p.object_box ? box_to_json(*p.object_box) : json()},
           {"action", vocab.action(p.action).name},
           {"score", format_score(p.score)}};
    os << j.dump() << "\n";
  }
}

std::vector<PredTriplet> load_predictions(const std::string& path,
                                          const ActionVocabulary& vocab) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("predictions: cannot open " + path);
  std::vector<PredTriplet> out;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw std::runtime_error("predictions: malformed JSON on line " +
                               std::to_string(line_no) + ": " + e.what());
    }
    PredTriplet p;
    std::string where = "predictions: line " + std::to_string(line_no);
    p.image_id = j.at("image_id").get<std::string>();
    p.human_box = box_from_json(j.at("human_box"), where);
    std::string action_name = j.at("action").get<std::string>();
    p.action = vocab.index_of(action_name);
    if (p.action < 0) {
      throw std::runtime_error(where + ": unknown action '" + action_name + "'");
    }
    bool involved = vocab.action(p.action).object_involved;
    bool has_object = j.contains("object_box") && !j["object_box"].is_null();
    if (involved != has_object) {
      throw std::runtime_error(where + ": object box and action '" + action_name +
                               "' disagree");
    }
    if (has_object) p.object_box = box_from_json(j["object_box"], where);
    const json& sj = j.at("score");
    p.score = sj.is_string() ? std::stod(sj.get<std::string>()) : sj.get<double>();
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<PredTriplet> to_predictions(const std::vector<HoiTriplet>& triplets,
                                        const std::string& image_id) {
  std::vector<PredTriplet> out;
  out.reserve(triplets.size());
  for (const HoiTriplet& t : triplets) {
    PredTriplet p;
    p.image_id = image_id;
    p.human_box = t.human.box;
    if (t.object) p.object_box = t.object->box;
    p.action = t.action;
    p.score = t.score;
    out.push_back(std::move(p));
  }
  return out;
}

// ---- Attention dumps ----

void write_attention_pgm(const std::string& path, const Tensor& weights) {
  if (weights.rank() != 2) {
    throw std::invalid_argument("attention dump: expected an [H x W] map");
  }
  const int h = weights.dim(0), w = weights.dim(1);
  double mx = 0.0;
  for (double v : weights.data()) mx = std::max(mx, v);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("attention dump: cannot open " + path);
  os << "P5\n" << w << " " << h << "\n255\n";
  for (double v : weights.data()) {
    double scaled = mx > 0.0 ? v / mx * 255.0 : 0.0;
    os.put(static_cast<char>(static_cast<unsigned char>(std::lround(scaled))));
  }
}

void write_attention_csv(const std::string& path, const Tensor& weights) {
  if (weights.rank() != 2) {
    throw std::invalid_argument("attention dump: expected an [H x W] map");
  }
  const int h = weights.dim(0), w = weights.dim(1);
  std::ofstream os(path);
  if (!os) throw std::runtime_error("attention dump: cannot open " + path);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.17g", weights.data()[static_cast<std::size_t>(i) * w + j]);
      os << buf << (j + 1 < w ? "," : "");
    }
    os << "\n";
  }
}

}  // namespace ican
