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
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "ican/training.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace ican;
using testing::micro_config;
using testing::micro_model;
using testing::random_tensor;
namespace fs = std::filesystem;

namespace {

// One positive pair and one far negative, on a 6x6 feature grid.
TrainingSet tiny_set(Rng& rng) {
  TrainingSet set;
  Tensor fmap = testing::random_tensor({micro_config().in_channels, 6, 6}, rng);
  set.feature_maps.push_back(fmap);
  TrainSample pos;
  pos.image_index = 0;
  pos.human_box = BBox(0.5, 0.5, 3.0, 3.5);
  pos.object_box = BBox(2.0, 2.0, 5.0, 5.0);
  pos.labels = {1.0, 0.0, 0.0, 1.0};
  set.positives.push_back(pos);
  TrainSample neg;
  neg.image_index = 0;
  neg.human_box = BBox(0.5, 0.5, 3.0, 3.5);
  neg.object_box = BBox(3.5, 0.5, 5.8, 2.2);
  neg.labels = {0.0, 0.0, 0.0, 1.0};
  set.negatives.push_back(neg);
  return set;
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("bce closed forms") {
  ActionScores half{{0.5, 0.5, 0.5}, StreamTag::kHuman};
  CHECK(bce_loss(half, std::vector<double>{1, 0, 1}) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));

  ActionScores exact{{1.0, 0.0}, StreamTag::kHuman};
  CHECK(bce_loss(exact, std::vector<double>{1, 0}) == 0.0);

  ActionScores close{{1.0 - 1e-12, 1e-12}, StreamTag::kHuman};
  CHECK(bce_loss(close, std::vector<double>{1, 0}) < 1e-9);

  ActionScores pair{{0.9, 0.2}, StreamTag::kHuman};
  double expect = -(std::log(0.9) + std::log(0.8)) / 2.0;
  CHECK(bce_loss(pair, std::vector<double>{1, 0}) ==
        doctest::Approx(expect).epsilon(1e-9));
  CHECK(expect == doctest::Approx(0.164252).epsilon(1e-5));

  CHECK_THROWS_AS(bce_loss(half, std::vector<double>{1, 0}), std::invalid_argument);
}

TEST_CASE("bce gradient through the sigmoid matches finite differences") {
  Rng rng(95);
  Tensor z = random_tensor({6}, rng, -2.0, 2.0);
  std::vector<double> labels = {1, 0, 1, 1, 0, 0};
  CHECK(testing::max_gradient_error({z}, [&] {
          return bce_with_logits(z, labels);
        }) < 1e-4);
  // The logit-domain loss equals the probability-domain definition.
  Tensor scores = sigmoid(z);
  ActionScores as{{scores.data().begin(), scores.data().end()}, StreamTag::kHuman};
  CHECK(bce_with_logits(z, labels).value() ==
        doctest::Approx(bce_loss(as, labels)).epsilon(1e-12));
}

TEST_CASE("sgd closed forms") {
  SUBCASE("zero gradient, zero velocity, no decay: parameters hold still") {
    std::vector<double> w = {1.0, -2.0}, g = {0.0, 0.0}, v = {0.0, 0.0};
    sgd_step(w, g, v, 0.1, 0.9, 0.0);
    CHECK(w[0] == 1.0);
    CHECK(w[1] == -2.0);
  }
  SUBCASE("first step matches w - lr*(g + wd*w)") {
    std::vector<double> w = {2.0}, g = {0.5}, v = {0.0};
    sgd_step(w, g, v, 0.1, 0.9, 0.01);
    CHECK(w[0] == doctest::Approx(2.0 - 0.1 * (0.5 + 0.01 * 2.0)).epsilon(1e-15));
  }
  SUBCASE("two steps with constant gradient accumulate 2.9 * lr * g") {
    std::vector<double> w = {0.0}, g = {1.0}, v = {0.0};
    sgd_step(w, g, v, 0.01, 0.9, 0.0);
    sgd_step(w, g, v, 0.01, 0.9, 0.0);
    CHECK(w[0] == doctest::Approx(-0.01 * (1.0 + 1.9)).epsilon(1e-12));
  }
  SUBCASE("mismatched buffers are rejected") {
    std::vector<double> w = {0.0}, g = {1.0, 2.0}, v = {0.0};
    CHECK_THROWS_AS(sgd_step(w, g, v, 0.1, 0.9, 0.0), std::invalid_argument);
  }
  SUBCASE("pure weight decay shrinks the parameter norm") {
    Rng rng(96);
    Tensor w = random_tensor({20}, rng);
    std::vector<double> g(20, 0.0), v(20, 0.0);
    double before = 0.0;
    for (double x : w.data()) before += x * x;
    sgd_step(w.mutable_data(), g, v, 0.05, 0.9, 0.1);
    double after = 0.0;
    for (double x : w.data()) after += x * x;
    CHECK(after < before);
  }
}

TEST_CASE("build_training_set pairs detections with annotations") {
  SynthSpec spec;
  spec.seed = 31;
  spec.images = 8;
  SynthOutput out = synth_generate(spec);
  TrainingSet set = build_training_set(out.image_ids, out.feature_maps,
                                       out.detections, out.gt);
  CHECK(!set.positives.empty());
  CHECK(!set.negatives.empty());
  const int a_total = out.gt.vocab.size();
  for (const TrainSample& s : set.positives) {
    REQUIRE(s.labels.size() == static_cast<std::size_t>(a_total));
    double involved_sum = 0.0;
    for (int a : out.gt.vocab.object_involved_indices()) {
      involved_sum += s.labels[static_cast<std::size_t>(a)];
    }
    CHECK(involved_sum > 0.0);
  }
  for (const TrainSample& s : set.negatives) {
    for (int a : out.gt.vocab.object_involved_indices()) {
      CHECK(s.labels[static_cast<std::size_t>(a)] == 0.0);
    }
  }
}

TEST_CASE("zero learning rate leaves the weights untouched") {
  Model m = micro_model(101);
  Rng rng(102);
  TrainingSet set = tiny_set(rng);
  NamedTensors before = m.named_parameters();
  std::vector<std::vector<double>> snapshot;
  for (auto& [name, t] : before) snapshot.emplace_back(t.data().begin(), t.data().end());
  TrainConfig cfg;
  cfg.lr = 0.0;
  cfg.batch = 2;
  cfg.log_every = 10;
  train(m, set, cfg, 20, 7);
  NamedTensors after = m.named_parameters();
  for (std::size_t p = 0; p < after.size(); ++p) {
    for (std::size_t i = 0; i < after[p].second.size(); ++i) {
      CHECK(after[p].second.data()[i] == snapshot[p][i]);
    }
  }
}

TEST_CASE("a single repeated sample is fit well within 500 iterations") {
  Model m = micro_model(103);
  Rng rng(104);
  TrainingSet set = tiny_set(rng);
  set.negatives.clear();
  TrainConfig cfg;
  cfg.lr = 0.05;
  cfg.batch = 2;
  cfg.log_every = 1;
  TrainReport report = train(m, set, cfg, 500, 11);
  REQUIRE(report.loss_curve.size() == 500);
  double initial = report.loss_curve.front().second;
  double final = report.final_loss;
  CHECK(final < 0.1 * initial);

  // Windowed means over 50 iterations never increase.
  std::vector<double> window_means;
  for (std::size_t start = 0; start + 50 <= report.loss_curve.size(); start += 50) {
    double acc = 0.0;
    for (std::size_t i = start; i < start + 50; ++i) acc += report.loss_curve[i].second;
    window_means.push_back(acc / 50.0);
  }
  for (std::size_t i = 1; i < window_means.size(); ++i) {
    CHECK(window_means[i] <= window_means[i - 1] + 1e-9);
  }
}

TEST_CASE("training is deterministic: identical seeds, identical checkpoints") {
  Rng rng(105);
  TrainingSet set = tiny_set(rng);
  TrainConfig cfg;
  cfg.lr = 0.02;
  cfg.batch = 4;
  std::string path_a = testing::temp_path("ican_train_a.ckpt");
  std::string path_b = testing::temp_path("ican_train_b.ckpt");
  for (const std::string& path : {path_a, path_b}) {
    Model m = micro_model(107);
    train(m, set, cfg, 40, 13);
    m.save(path);
  }
  CHECK(slurp(path_a) == slurp(path_b));
  fs::remove(path_a);
  fs::remove(path_b);
}

TEST_CASE("an exploding run is aborted naming the failing stream") {
  Model m = micro_model(109);
  Rng rng(110);
  TrainingSet set = tiny_set(rng);
  TrainConfig cfg;
  cfg.lr = 1e18;
  cfg.batch = 2;
  CHECK_THROWS_WITH_AS(train(m, set, cfg, 50, 17),
                       doctest::Contains("non-finite loss"), std::runtime_error);
}

TEST_CASE("an empty dataset is rejected") {
  Model m = micro_model(111);
  TrainingSet set;
  TrainConfig cfg;
  CHECK_THROWS_WITH_AS(train(m, set, cfg, 10, 1), doctest::Contains("empty dataset"),
                       std::invalid_argument);
}

TEST_CASE("model checkpoints reload to the same configuration and values") {
  Model m = micro_model(113);
  std::string path = testing::temp_path("ican_model_rt.ckpt");
  m.save(path);
  Model loaded = Model::load(path);
  CHECK(loaded.cfg.inst_dim == m.cfg.inst_dim);
  CHECK(loaded.cfg.context == m.cfg.context);
  CHECK(loaded.vocab.size() == m.vocab.size());
  CHECK(loaded.vocab.action(3).name == "wave");
  CHECK(loaded.vocab.action(3).object_involved == false);
  NamedTensors a = m.named_parameters();
  NamedTensors b = loaded.named_parameters();
  REQUIRE(a.size() == b.size());
  for (std::size_t p = 0; p < a.size(); ++p) {
    CHECK(a[p].first == b[p].first);
    for (std::size_t i = 0; i < a[p].second.size(); ++i) {
      CHECK(a[p].second.data()[i] == b[p].second.data()[i]);
    }
  }
  fs::remove(path);
}

TEST_CASE("shared attention weights alias both branches") {
  ModelConfig cfg = micro_config();
  cfg.share_attention = true;
  Model m = Model::init(cfg, testing::micro_vocab(), 9);
  CHECK(m.human.att_fmap_w.same_storage(m.object.att_fmap_w));
  CHECK(m.human.inst_conv1_w.same_storage(m.object.inst_conv1_w));
  std::string path = testing::temp_path("ican_shared.ckpt");
  m.save(path);
  Model loaded = Model::load(path);
  CHECK(loaded.cfg.share_attention);
  CHECK(loaded.human.att_fmap_w.same_storage(loaded.object.att_fmap_w));
  fs::remove(path);
}

TEST_CASE("config files parse and reject unknown keys") {
  Config cfg = parse_config_text("lr = 0.01\ncontext = global\nraster = 16\n# comment\n");
  CHECK(cfg.train.lr == 0.01);
  CHECK(cfg.model.context == ContextMode::kWholeImage);
  CHECK(cfg.model.raster == 16);
  CHECK_THROWS_WITH_AS(parse_config_text("learning_rate = 1\n"),
                       doctest::Contains("unknown key"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config_text("lr 0.01\n"), std::invalid_argument);
  Config round = parse_config_text(config_to_text(cfg));
  CHECK(round.model.raster == cfg.model.raster);
  CHECK(round.train.lr == cfg.train.lr);
}
