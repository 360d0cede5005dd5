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

#include <cmath>

#include "doctest.h"
#include "ican/streams.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace ican;
using testing::max_gradient_error;
using testing::micro_config;
using testing::micro_model;
using testing::random_tensor;

namespace {

StreamHead zero_head(int in_dim, int hidden, int out_dim) {
  return StreamHead{Tensor::zeros({hidden, in_dim}), Tensor::zeros({hidden}),
                    Tensor::zeros({out_dim, hidden}), Tensor::zeros({out_dim})};
}

}  // namespace

TEST_CASE("vocabulary validation") {
  CHECK_THROWS_AS(ActionVocabulary(std::vector<ActionInfo>{}), std::invalid_argument);
  CHECK_THROWS_WITH_AS(
      ActionVocabulary({{"hold", true, 1}, {"hold", true, 2}}),
      doctest::Contains("duplicate"), std::invalid_argument);
  ActionVocabulary vocab = testing::micro_vocab();
  CHECK(vocab.size() == 4);
  CHECK(vocab.index_of("hold") == 2);
  CHECK(vocab.index_of("fly") == -1);
  CHECK(vocab.object_involved_indices() == std::vector<int>{0, 1, 2});
  CHECK(vocab.objectless_indices() == std::vector<int>{3});
}

TEST_CASE("zero-weight streams emit 0.5 for every action") {
  StreamHead head = zero_head(5, 7, 4);
  Rng rng(31);
  Tensor feat = random_tensor({5}, rng);
  ActionScores h = human_stream_scores(feat, head);
  ActionScores o = object_stream_scores(feat, head);
  CHECK(h.tag == StreamTag::kHuman);
  CHECK(o.tag == StreamTag::kObject);
  for (double v : h.values) CHECK(v == 0.5);
  for (double v : o.values) CHECK(v == 0.5);
}

TEST_CASE("a large negative output bias saturates that class to zero") {
  StreamHead head = zero_head(5, 7, 4);
  head.fc2_b.mutable_data()[2] = -100.0;
  Tensor feat = Tensor::full({5}, 0.3);
  ActionScores s = human_stream_scores(feat, head);
  CHECK(s.values[2] < 1e-6);
  CHECK(s.values[0] == 0.5);
}

TEST_CASE("stream scores match the explicit matvec composition") {
  Rng rng(33);
  StreamHead head{random_tensor({7, 5}, rng), random_tensor({7}, rng),
                  random_tensor({4, 7}, rng), random_tensor({4}, rng)};
  Tensor feat = random_tensor({5}, rng);
  ActionScores got = human_stream_scores(feat, head);
  Tensor expect = sigmoid(add(matvec(head.fc2_w,
                                     relu(add(matvec(head.fc1_w, feat), head.fc1_b))),
                              head.fc2_b));
  for (std::size_t i = 0; i < got.values.size(); ++i) {
    CHECK(std::abs(got.values[i] - expect.data()[i]) < 1e-12);
  }
}

TEST_CASE("stream rejects features that do not match the weights") {
  StreamHead head = zero_head(5, 7, 4);
  CHECK_THROWS_WITH_AS(stream_logits(Tensor::zeros({6}), head),
                       doctest::Contains("does not match loaded weights"),
                       std::invalid_argument);
}

TEST_CASE("binary map is all ones when both boxes equal the union") {
  Tensor map = pairwise_binary_map(BBox(2, 3, 10, 11), BBox(2, 3, 10, 11), 8);
  for (double v : map.data()) CHECK(v == 1.0);
}

TEST_CASE("binary map splits disjoint side-by-side squares") {
  const int s = 8;
  Tensor map = pairwise_binary_map(BBox(0, 0, 10, 10), BBox(10, 0, 20, 10), s);
  double sum0 = 0.0, sum1 = 0.0;
  for (int i = 0; i < s * s; ++i) {
    sum0 += map.data()[static_cast<std::size_t>(i)];
    sum1 += map.data()[static_cast<std::size_t>(s * s + i)];
  }
  CHECK(sum0 + sum1 == s * s);
  CHECK(sum0 == s * s / 2);
  CHECK(sum1 == s * s / 2);
}

TEST_CASE("binary map for a contained object is a proper sub-rectangle") {
  const int s = 16;
  Tensor map = pairwise_binary_map(BBox(0, 0, 16, 16), BBox(4, 4, 8, 8), s);
  double sum0 = 0.0, sum1 = 0.0;
  for (int i = 0; i < s * s; ++i) {
    CHECK(map.data()[static_cast<std::size_t>(i)] == 1.0);  // human covers union
    sum0 += map.data()[static_cast<std::size_t>(i)];
    sum1 += map.data()[static_cast<std::size_t>(s * s + i)];
  }
  CHECK(sum0 == s * s);
  CHECK(sum1 > 0);
  CHECK(sum1 < s * s);
}

TEST_CASE("binary map ignores joint translation and uniform scaling") {
  Rng rng(35);
  for (int trial = 0; trial < 40; ++trial) {
    double hx = rng.uniform_int(20), hy = rng.uniform_int(20);
    double hw = 1 + rng.uniform_int(10), hh = 1 + rng.uniform_int(10);
    double ox = rng.uniform_int(20), oy = rng.uniform_int(20);
    double ow = 1 + rng.uniform_int(10), oh = 1 + rng.uniform_int(10);
    BBox h(hx, hy, hx + hw, hy + hh);
    BBox o(ox, oy, ox + ow, oy + oh);
    Tensor base = pairwise_binary_map(h, o, 16);

    double tx = rng.uniform_int(50), ty = rng.uniform_int(50);
    Tensor shifted = pairwise_binary_map(BBox(h.x1 + tx, h.y1 + ty, h.x2 + tx, h.y2 + ty),
                                         BBox(o.x1 + tx, o.y1 + ty, o.x2 + tx, o.y2 + ty), 16);
    double k = trial % 2 == 0 ? 2.0 : 0.5;
    Tensor scaled = pairwise_binary_map(BBox(h.x1 * k, h.y1 * k, h.x2 * k, h.y2 * k),
                                        BBox(o.x1 * k, o.y1 * k, o.x2 * k, o.y2 * k), 16);
    for (std::size_t i = 0; i < base.size(); ++i) {
      CHECK(base.data()[i] == shifted.data()[i]);
      CHECK(base.data()[i] == scaled.data()[i]);
      CHECK((base.data()[i] == 0.0 || base.data()[i] == 1.0));
    }
  }
}

TEST_CASE("pairwise stream with zero weights gives 0.5 and is deterministic") {
  ModelConfig cfg = micro_config();
  PairwiseNet net;
  net.conv1_w = Tensor::zeros({cfg.pair_conv1, 2, 3, 3});
  net.conv1_b = Tensor::zeros({cfg.pair_conv1});
  net.conv2_w = Tensor::zeros({cfg.pair_conv2, cfg.pair_conv1, 3, 3});
  net.conv2_b = Tensor::zeros({cfg.pair_conv2});
  net.head = zero_head(cfg.pair_flat_dim() + cfg.inst_dim, cfg.hidden_dim, 4);
  Rng rng(37);
  Tensor bmap = pairwise_binary_map(BBox(0, 0, 10, 10), BBox(5, 5, 20, 15), cfg.raster);
  Tensor inst = random_tensor({cfg.inst_dim}, rng);
  ActionScores s = pairwise_stream_scores(bmap, inst, net);
  CHECK(s.tag == StreamTag::kPairwise);
  for (double v : s.values) CHECK(v == 0.5);

  Model m = micro_model(38);
  ActionScores a = pairwise_stream_scores(bmap, inst, m.pairwise);
  ActionScores b = pairwise_stream_scores(bmap, inst, m.pairwise);
  for (std::size_t i = 0; i < a.values.size(); ++i) CHECK(a.values[i] == b.values[i]);
}

TEST_CASE("swapping the two channels changes pairwise scores") {
  Model m = micro_model(39);
  ModelConfig cfg = micro_config();
  Rng rng(40);
  Tensor inst = random_tensor({cfg.inst_dim}, rng);
  Tensor bmap = pairwise_binary_map(BBox(0, 0, 12, 20), BBox(8, 4, 20, 12), cfg.raster);
  Tensor swapped = Tensor::zeros({2, cfg.raster, cfg.raster});
  const std::size_t plane = static_cast<std::size_t>(cfg.raster) * cfg.raster;
  for (std::size_t i = 0; i < plane; ++i) {
    swapped.mutable_data()[i] = bmap.data()[plane + i];
    swapped.mutable_data()[plane + i] = bmap.data()[i];
  }
  ActionScores a = pairwise_stream_scores(bmap, inst, m.pairwise);
  ActionScores b = pairwise_stream_scores(swapped, inst, m.pairwise);
  double diff = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    diff = std::max(diff, std::abs(a.values[i] - b.values[i]));
  }
  CHECK(diff > 1e-12);
}

TEST_CASE("early fusion with zero weights gives 0.5 with length A") {
  ModelConfig cfg = micro_config();
  const int feat_h = cfg.feat_dim(InstanceRole::kHuman);
  const int feat_o = cfg.feat_dim(InstanceRole::kObject);
  StreamHead head = zero_head(feat_h + feat_o + cfg.pair_flat_dim(), cfg.hidden_dim, 4);
  Rng rng(41);
  ActionScores s = early_fusion_scores(random_tensor({feat_h}, rng),
                                       random_tensor({feat_o}, rng),
                                       random_tensor({cfg.pair_flat_dim()}, rng), head);
  CHECK(s.tag == StreamTag::kFusedEarly);
  CHECK(s.values.size() == 4);
  for (double v : s.values) CHECK(v == 0.5);
}

TEST_CASE("early fusion matches the concat composition") {
  Model m = micro_model(43);
  ModelConfig cfg = micro_config();
  Rng rng(44);
  Tensor h = random_tensor({cfg.feat_dim(InstanceRole::kHuman)}, rng);
  Tensor o = random_tensor({cfg.feat_dim(InstanceRole::kObject)}, rng);
  Tensor sp = random_tensor({cfg.pair_flat_dim()}, rng);
  ActionScores got = early_fusion_scores(h, o, sp, m.early_head);
  Tensor expect = sigmoid(stream_logits(concat({h, o, sp}), m.early_head));
  for (std::size_t i = 0; i < got.values.size(); ++i) {
    CHECK(std::abs(got.values[i] - expect.data()[i]) < 1e-12);
  }
}

TEST_CASE("all streams stay strictly inside (0, 1)") {
  Model m = micro_model(45);
  ModelConfig cfg = micro_config();
  Rng rng(46);
  for (int trial = 0; trial < 30; ++trial) {
    Tensor feat = random_tensor({cfg.feat_dim(InstanceRole::kHuman)}, rng, -3.0, 3.0);
    for (double v : human_stream_scores(feat, m.human_head).values) {
      CHECK(v > 0.0);
      CHECK(v < 1.0);
    }
  }
}

TEST_CASE("every stream passes the gradient check end to end") {
  Model m = micro_model(47);
  ModelConfig cfg = micro_config();
  Rng rng(48);
  Tensor fmap = random_tensor({cfg.in_channels, 6, 6}, rng);
  BBox human_box(0.5, 0.5, 4.0, 4.5);
  BBox object_box(2.0, 1.5, 5.5, 5.0);
  Tensor mix = random_tensor({4}, rng);

  SUBCASE("human stream") {
    std::vector<Tensor> params = {m.human_head.fc1_w, m.human_head.fc1_b,
                                  m.human_head.fc2_w, m.human_head.fc2_b};
    CHECK(max_gradient_error(params, [&] {
            Tensor feat = m.role_feature(fmap, human_box, InstanceRole::kHuman);
            return sum(mul(stream_score_tensor(feat, m.human_head), mix));
          }) < 1e-4);
  }
  SUBCASE("pairwise stream through the CNN") {
    std::vector<Tensor> params = {m.pairwise.conv1_w, m.pairwise.conv1_b,
                                  m.pairwise.conv2_w, m.pairwise.conv2_b,
                                  m.pairwise.head.fc1_w, m.pairwise.head.fc2_b};
    CHECK(max_gradient_error(params, [&] {
            Tensor bmap = pairwise_binary_map(human_box, object_box, cfg.raster);
            InstanceFeature inst = extract_instance_feature(
                fmap, human_box, m.human, InstanceRole::kHuman, cfg.roi_out, 1.0);
            return sum(mul(sigmoid(pairwise_logits(bmap, inst.values, m.pairwise)), mix));
          }) < 1e-4);
  }
}
