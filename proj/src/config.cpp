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

#include "ican/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ican {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  throw std::invalid_argument("config: key '" + key + "' expects 0/1, got '" + v + "'");
}

int parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    int out = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key '" + key + "' expects an integer, got '" + v + "'");
  }
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double out = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key '" + key + "' expects a number, got '" + v + "'");
  }
}

}  // namespace

Config parse_config_text(const std::string& text) {
  Config cfg;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config: line " + std::to_string(line_no) +
                                  " is not key=value: '" + line + "'");
    }
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key == "in_channels") cfg.model.in_channels = parse_int(key, val);
    else if (key == "inst_dim") cfg.model.inst_dim = parse_int(key, val);
    else if (key == "embed_dim") cfg.model.embed_dim = parse_int(key, val);
    else if (key == "roi_out") cfg.model.roi_out = parse_int(key, val);
    else if (key == "raster") cfg.model.raster = parse_int(key, val);
    else if (key == "hidden_dim") cfg.model.hidden_dim = parse_int(key, val);
    else if (key == "pair_conv1") cfg.model.pair_conv1 = parse_int(key, val);
    else if (key == "pair_conv2") cfg.model.pair_conv2 = parse_int(key, val);
    else if (key == "spatial_scale") cfg.model.spatial_scale = parse_double(key, val);
    else if (key == "context") cfg.model.context = parse_context_mode(val);
    else if (key == "human_context") cfg.model.human_context = parse_bool(key, val);
    else if (key == "object_context") cfg.model.object_context = parse_bool(key, val);
    else if (key == "share_attention") cfg.model.share_attention = parse_bool(key, val);
    else if (key == "lr") cfg.train.lr = parse_double(key, val);
    else if (key == "momentum") cfg.train.momentum = parse_double(key, val);
    else if (key == "weight_decay") cfg.train.weight_decay = parse_double(key, val);
    else if (key == "batch") cfg.train.batch = parse_int(key, val);
    else if (key == "neg_ratio") cfg.train.neg_ratio = parse_int(key, val);
    else if (key == "log_every") cfg.train.log_every = parse_int(key, val);
    else if (key == "train_early") cfg.train.train_early = parse_bool(key, val);
    else {
      throw std::invalid_argument("config: unknown key '" + key + "' on line " +
                                  std::to_string(line_no));
    }
  }
  if (cfg.model.raster < 4) throw std::invalid_argument("config: raster must be >= 4");
  if (cfg.model.in_channels < 1 || cfg.model.inst_dim < 1 ||
      cfg.model.embed_dim < 1 || cfg.model.roi_out < 1 ||
      cfg.model.hidden_dim < 1 || cfg.model.pair_conv1 < 1 ||
      cfg.model.pair_conv2 < 1) {
    throw std::invalid_argument("config: dimensions must be positive");
  }
  if (cfg.model.spatial_scale <= 0.0) {
    throw std::invalid_argument("config: spatial_scale must be positive");
  }
  if (cfg.train.batch < 1) throw std::invalid_argument("config: batch must be >= 1");
  if (cfg.train.neg_ratio < 0) throw std::invalid_argument("config: neg_ratio must be >= 0");
  return cfg;
}

Config parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_config_text(buf.str());
}

std::string config_to_text(const Config& cfg) {
  std::ostringstream os;
  os << "in_channels = " << cfg.model.in_channels << "\n"
     << "inst_dim = " << cfg.model.inst_dim << "\n"
     << "embed_dim = " << cfg.model.embed_dim << "\n"
     << "roi_out = " << cfg.model.roi_out << "\n"
     << "raster = " << cfg.model.raster << "\n"
     << "hidden_dim = " << cfg.model.hidden_dim << "\n"
     << "pair_conv1 = " << cfg.model.pair_conv1 << "\n"
     << "pair_conv2 = " << cfg.model.pair_conv2 << "\n"
     << "spatial_scale = " << cfg.model.spatial_scale << "\n"
     << "context = " << context_mode_name(cfg.model.context) << "\n"
     << "human_context = " << (cfg.model.human_context ? 1 : 0) << "\n"
     << "object_context = " << (cfg.model.object_context ? 1 : 0) << "\n"
     << "share_attention = " << (cfg.model.share_attention ? 1 : 0) << "\n"
     << "lr = " << cfg.train.lr << "\n"
     << "momentum = " << cfg.train.momentum << "\n"
     << "weight_decay = " << cfg.train.weight_decay << "\n"
     << "batch = " << cfg.train.batch << "\n"
     << "neg_ratio = " << cfg.train.neg_ratio << "\n"
     << "log_every = " << cfg.train.log_every << "\n"
     << "train_early = " << (cfg.train.train_early ? 1 : 0) << "\n";
  return os.str();
}

}  // namespace ican
