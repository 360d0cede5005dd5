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

#include "ican/model.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include "ican/rng.hpp"

namespace ican {

namespace {

Tensor init_weight(Shape shape, int fan_in, std::uint64_t seed,
                   const std::string& name, double scale = 1.0) {
  Rng rng(seed ^ fnv1a(name));
  Tensor t = Tensor::zeros(std::move(shape));
  const double bound = scale / std::sqrt(static_cast<double>(fan_in));
  for (double& v : t.mutable_data()) v = rng.uniform(-bound, bound);
  return t;
}

IcanBranch init_branch(const ModelConfig& cfg, std::uint64_t seed,
                       const std::string& prefix) {
  const int c = cfg.in_channels, d = cfg.inst_dim, e = cfg.embed_dim;
  IcanBranch b;
  b.inst_conv1_w = init_weight({d, c, 3, 3}, c * 9, seed, prefix + ".inst.conv1.weight");
  b.inst_conv1_b = Tensor::zeros({d});
  b.inst_conv2_w = init_weight({d, d, 3, 3}, d * 9, seed, prefix + ".inst.conv2.weight");
  b.inst_conv2_b = Tensor::zeros({d});
  b.inst_proj_w = init_weight({d, c, 1, 1}, c, seed, prefix + ".inst.proj.weight");
  b.inst_proj_b = Tensor::zeros({d});
  // Embeddings start small so the first attention maps are near uniform
  // (the context starts as a whole-image average and sharpens from there).
  b.att_fmap_w = init_weight({e, c, 1, 1}, c, seed, prefix + ".att.fmap_embed.weight");
  b.att_inst_w = init_weight({e, d}, d, seed, prefix + ".att.inst_embed.weight", 0.1);
  b.att_inst_b = Tensor::zeros({e});
  b.bu_fmap_w = init_weight({e, c, 1, 1}, c, seed, prefix + ".att.bottom_up.weight");
  b.bu_score_w = init_weight({e}, e, seed, prefix + ".att.bottom_up_score.weight", 0.1);
  return b;
}

StreamHead init_head(int in_dim, int hidden, int out_dim, std::uint64_t seed,
                     const std::string& prefix) {
  StreamHead h;
  h.fc1_w = init_weight({hidden, in_dim}, in_dim, seed, prefix + ".fc1.weight");
  h.fc1_b = Tensor::zeros({hidden});
  h.fc2_w = init_weight({out_dim, hidden}, hidden, seed, prefix + ".fc2.weight");
  h.fc2_b = Tensor::zeros({out_dim});
  return h;
}

void append_branch(NamedTensors& out, const std::string& prefix, const IcanBranch& b) {
  out.emplace_back(prefix + ".inst.conv1.weight", b.inst_conv1_w);
  out.emplace_back(prefix + ".inst.conv1.bias", b.inst_conv1_b);
  out.emplace_back(prefix + ".inst.conv2.weight", b.inst_conv2_w);
  out.emplace_back(prefix + ".inst.conv2.bias", b.inst_conv2_b);
  out.emplace_back(prefix + ".inst.proj.weight", b.inst_proj_w);
  out.emplace_back(prefix + ".inst.proj.bias", b.inst_proj_b);
  out.emplace_back(prefix + ".att.fmap_embed.weight", b.att_fmap_w);
  out.emplace_back(prefix + ".att.inst_embed.weight", b.att_inst_w);
  out.emplace_back(prefix + ".att.inst_embed.bias", b.att_inst_b);
  out.emplace_back(prefix + ".att.bottom_up.weight", b.bu_fmap_w);
  out.emplace_back(prefix + ".att.bottom_up_score.weight", b.bu_score_w);
}

void append_head(NamedTensors& out, const std::string& prefix, const StreamHead& h) {
  out.emplace_back(prefix + ".fc1.weight", h.fc1_w);
  out.emplace_back(prefix + ".fc1.bias", h.fc1_b);
  out.emplace_back(prefix + ".fc2.weight", h.fc2_w);
  out.emplace_back(prefix + ".fc2.bias", h.fc2_b);
}

}  // namespace

Model Model::init(const ModelConfig& cfg, const ActionVocabulary& vocab,
                  std::uint64_t seed) {
  if (vocab.size() < 1) throw std::invalid_argument("Model: empty vocabulary");
  Model m;
  m.cfg = cfg;
  m.vocab = vocab;
  const int a = vocab.size();
  m.human = init_branch(cfg, seed, "human");
  m.object = cfg.share_attention ? m.human : init_branch(cfg, seed, "object");
  m.human_head = init_head(cfg.feat_dim(InstanceRole::kHuman), cfg.hidden_dim, a,
                           seed, "stream.human");
  m.object_head = init_head(cfg.feat_dim(InstanceRole::kObject), cfg.hidden_dim, a,
                            seed, "stream.object");
  m.pairwise.conv1_w = init_weight({cfg.pair_conv1, 2, 3, 3}, 2 * 9, seed,
                                   "stream.pair.conv1.weight");
  m.pairwise.conv1_b = Tensor::zeros({cfg.pair_conv1});
  m.pairwise.conv2_w = init_weight({cfg.pair_conv2, cfg.pair_conv1, 3, 3},
                                   cfg.pair_conv1 * 9, seed, "stream.pair.conv2.weight");
  m.pairwise.conv2_b = Tensor::zeros({cfg.pair_conv2});
  m.pairwise.head = init_head(cfg.pair_flat_dim() + cfg.inst_dim, cfg.hidden_dim,
                              a, seed, "stream.pair");
  m.early_head = init_head(cfg.feat_dim(InstanceRole::kHuman) +
                               cfg.feat_dim(InstanceRole::kObject) +
                               cfg.pair_flat_dim(),
                           cfg.hidden_dim, a, seed, "stream.early");
  return m;
}

Tensor Model::role_feature(const Tensor& fmap, const BBox& box,
                           InstanceRole role) const {
  return ican_forward(fmap, box, branch(role), role, cfg.stream_mode(role),
                      cfg.roi_out, cfg.spatial_scale);
}

NamedTensors Model::named_parameters() const {
  NamedTensors out;
  append_branch(out, "human", human);
  if (!cfg.share_attention) append_branch(out, "object", object);
  append_head(out, "stream.human", human_head);
  append_head(out, "stream.object", object_head);
  out.emplace_back("stream.pair.conv1.weight", pairwise.conv1_w);
  out.emplace_back("stream.pair.conv1.bias", pairwise.conv1_b);
  out.emplace_back("stream.pair.conv2.weight", pairwise.conv2_w);
  out.emplace_back("stream.pair.conv2.bias", pairwise.conv2_b);
  append_head(out, "stream.pair", pairwise.head);
  append_head(out, "stream.early", early_head);
  return out;
}

void Model::set_requires_grad(bool v) {
  for (auto& [name, t] : named_parameters()) t.set_requires_grad(v);
}

void Model::zero_grads() {
  for (auto& [name, t] : named_parameters()) t.zero_grad();
}

long Model::parameter_count() const {
  long n = 0;
  for (const auto& [name, t] : named_parameters()) n += static_cast<long>(t.size());
  return n;
}

void Model::save(const std::string& path) const {
  NamedTensors entries;
  auto scalar = [&entries](const std::string& name, double v) {
    entries.emplace_back(name, Tensor::from_data({1}, {v}));
  };
  scalar("config.in_channels", cfg.in_channels);
  scalar("config.inst_dim", cfg.inst_dim);
  scalar("config.embed_dim", cfg.embed_dim);
  scalar("config.roi_out", cfg.roi_out);
  scalar("config.raster", cfg.raster);
  scalar("config.hidden_dim", cfg.hidden_dim);
  scalar("config.pair_conv1", cfg.pair_conv1);
  scalar("config.pair_conv2", cfg.pair_conv2);
  scalar("config.spatial_scale", cfg.spatial_scale);
  scalar("config.context_mode", static_cast<double>(cfg.context));
  scalar("config.human_context", cfg.human_context ? 1.0 : 0.0);
  scalar("config.object_context", cfg.object_context ? 1.0 : 0.0);
  scalar("config.share_attention", cfg.share_attention ? 1.0 : 0.0);
  for (int i = 0; i < vocab.size(); ++i) {
    const ActionInfo& a = vocab.action(i);
    entries.emplace_back(
        "vocab.action." + std::to_string(i) + "." + a.name,
        Tensor::from_data({2}, {a.object_involved ? 1.0 : 0.0,
                                static_cast<double>(a.target_category)}));
  }
  for (const auto& [name, t] : named_parameters()) entries.emplace_back(name, t);
  save_checkpoint(path, entries);
}

Model Model::load(const std::string& path) {
  NamedTensors entries = load_checkpoint(path);
  std::map<std::string, Tensor> by_name;
  for (auto& [name, t] : entries) {
    if (!by_name.emplace(name, t).second) {
      throw std::runtime_error("checkpoint: duplicate entry '" + name + "'");
    }
  }
  auto scalar = [&by_name, &path](const std::string& name) {
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      throw std::runtime_error("checkpoint: missing '" + name + "' in " + path);
    }
    return it->second.value();
  };
  ModelConfig cfg;
  cfg.in_channels = static_cast<int>(scalar("config.in_channels"));
  cfg.inst_dim = static_cast<int>(scalar("config.inst_dim"));
  cfg.embed_dim = static_cast<int>(scalar("config.embed_dim"));
  cfg.roi_out = static_cast<int>(scalar("config.roi_out"));
  cfg.raster = static_cast<int>(scalar("config.raster"));
  cfg.hidden_dim = static_cast<int>(scalar("config.hidden_dim"));
  cfg.pair_conv1 = static_cast<int>(scalar("config.pair_conv1"));
  cfg.pair_conv2 = static_cast<int>(scalar("config.pair_conv2"));
  cfg.spatial_scale = scalar("config.spatial_scale");
  cfg.context = static_cast<ContextMode>(static_cast<int>(scalar("config.context_mode")));
  cfg.human_context = scalar("config.human_context") != 0.0;
  cfg.object_context = scalar("config.object_context") != 0.0;
  cfg.share_attention = scalar("config.share_attention") != 0.0;

  // Vocabulary entries are "vocab.action.<index>.<name>" -> [involved, category].
  std::map<int, ActionInfo> actions;
  for (const auto& [name, t] : by_name) {
    if (name.rfind("vocab.action.", 0) != 0) continue;
    std::string rest = name.substr(13);
    std::size_t dot = rest.find('.');
    if (dot == std::string::npos || t.size() != 2) {
      throw std::runtime_error("checkpoint: malformed vocabulary entry '" + name + "'");
    }
    int idx = std::stoi(rest.substr(0, dot));
    ActionInfo info;
    info.name = rest.substr(dot + 1);
    info.object_involved = t.data()[0] != 0.0;
    info.target_category = static_cast<int>(t.data()[1]);
    if (!actions.emplace(idx, info).second) {
      throw std::runtime_error("checkpoint: duplicate vocabulary index in '" + name + "'");
    }
  }
  std::vector<ActionInfo> ordered;
  for (int i = 0; i < static_cast<int>(actions.size()); ++i) {
    auto it = actions.find(i);
    if (it == actions.end()) {
      throw std::runtime_error("checkpoint: vocabulary index gap at " + std::to_string(i));
    }
    ordered.push_back(it->second);
  }

  Model m = Model::init(cfg, ActionVocabulary(std::move(ordered)), 0);
  std::size_t consumed = 13 + actions.size();  // config.* + vocab.* entries
  for (auto& [name, t] : m.named_parameters()) {
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      throw std::runtime_error("checkpoint: missing parameter '" + name + "' in " + path);
    }
    if (it->second.shape() != t.shape()) {
      throw std::runtime_error("checkpoint: shape mismatch for '" + name + "'");
    }
    Tensor dst = t;
    std::copy(it->second.data().begin(), it->second.data().end(),
              dst.mutable_data().begin());
    ++consumed;
  }
  if (consumed != by_name.size()) {
    throw std::runtime_error("checkpoint: unrecognized entries in " + path);
  }
  return m;
}

}  // namespace ican
