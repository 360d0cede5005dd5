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

#include "ican/attention.hpp"
#include "ican/checkpoint.hpp"
#include "ican/config.hpp"
#include "ican/streams.hpp"

namespace ican {

/// The full network: two attention branches (object branch aliases the
/// human one when share_attention is set), the three scoring streams and
/// the early-fusion head. Checkpoints store the parameters plus config and
/// vocabulary entries, so a model is reconstructible from the file alone.
struct Model {
  ModelConfig cfg;
  ActionVocabulary vocab;
  IcanBranch human;
  IcanBranch object;
  StreamHead human_head;
  StreamHead object_head;
  PairwiseNet pairwise;
  StreamHead early_head;

  /// Seeded initialization: weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)],
  /// biases zero. Every parameter draws from its own name-derived stream, so
  /// unrelated config changes do not shift other parameters' values.
  static Model init(const ModelConfig& cfg, const ActionVocabulary& vocab,
                    std::uint64_t seed);

  const IcanBranch& branch(InstanceRole role) const {
    return role == InstanceRole::kHuman ? human : object;
  }
  const StreamHead& instance_head(InstanceRole role) const {
    return role == InstanceRole::kHuman ? human_head : object_head;
  }

  /// ican_forward with this model's per-role branch and context wiring.
  Tensor role_feature(const Tensor& fmap, const BBox& box, InstanceRole role) const;

  /// Trainable parameters in a fixed order (shared branch listed once).
  NamedTensors named_parameters() const;
  void set_requires_grad(bool v);
  void zero_grads();
  long parameter_count() const;

  void save(const std::string& path) const;
  static Model load(const std::string& path);
};

}  // namespace ican
