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

#include <string>
#include <utility>
#include <vector>

#include "ican/tensor.hpp"

namespace ican {

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

/// Flat binary checkpoint. Layout: magic "ICAN01", then per tensor:
/// u32 name length, UTF-8 name, u32 rank, u32 dims, f64 values;
/// all integers and floats little-endian.
void save_checkpoint(const std::string& path, const NamedTensors& params);

/// Loads every named tensor. Throws on unknown magic or truncated payloads.
NamedTensors load_checkpoint(const std::string& path);

}  // namespace ican
