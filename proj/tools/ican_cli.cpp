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

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "ican/data_io.hpp"
#include "ican/evaluation.hpp"
#include "ican/inference.hpp"
#include "ican/model.hpp"
#include "ican/training.hpp"

namespace fs = std::filesystem;

namespace {

struct SynthArgs {
  std::uint64_t seed = 1;
  int images = 100;
  int actions = 6;
  int categories = 4;
  int channels = 8;
  int grid = 16;
  std::string out;
};

int run_synth(const SynthArgs& args) {
  ican::SynthSpec spec;
  spec.seed = args.seed;
  spec.images = args.images;
  spec.actions = args.actions;
  spec.categories = args.categories;
  spec.channels = args.channels;
  spec.grid_h = spec.grid_w = args.grid;
  ican::SynthOutput out = ican::synth_generate(spec);
  ican::write_synth(out, args.out);
  long triplets = 0;
  for (const auto& img : out.gt.images) triplets += static_cast<long>(img.triplets.size());
  std::cout << "wrote " << args.images << " images, " << triplets
            << " ground-truth triplets to " << args.out << "\n";
  return 0;
}

struct TrainArgs {
  std::string data;
  std::string config;
  long iters = 1000;
  std::uint64_t seed = 1;
  std::string out;
};

int run_train(const TrainArgs& args) {
  ican::Config cfg = ican::parse_config_file(args.config);
  auto fmaps = ican::load_feature_maps((fs::path(args.data) / "features").string());
  auto dets = ican::load_detections((fs::path(args.data) / "detections.jsonl").string());
  ican::GroundTruth gt =
      ican::load_ground_truth((fs::path(args.data) / "ground_truth.json").string());

  std::vector<std::string> ids;
  std::vector<ican::Tensor> maps;
  for (auto& lf : fmaps) {
    ids.push_back(lf.image_id);
    maps.push_back(lf.fmap);
  }
  if (!maps.empty()) cfg.model.in_channels = maps.front().dim(0);
  ican::TrainingSet set = ican::build_training_set(ids, maps, dets, gt);
  std::cout << "training on " << set.positives.size() << " positive / "
            << set.negatives.size() << " negative pairs\n";
  ican::Model model = ican::Model::init(cfg.model, gt.vocab, args.seed);
  ican::train(model, set, cfg.train, args.iters, args.seed, &std::cout);
  model.save(args.out);
  std::cout << "checkpoint written to " << args.out << "\n";
  return 0;
}

struct InferArgs {
  std::string weights;
  std::string features;
  std::string detections;
  std::string mode = "late";
  std::string context;  // empty: use the checkpoint's mode
  std::string out;
};

int run_infer(const InferArgs& args) {
  ican::Model model = ican::Model::load(args.weights);
  if (!args.context.empty()) {
    ican::ContextMode mode = ican::parse_context_mode(args.context);
    if (mode != model.cfg.context && (mode == ican::ContextMode::kNone ||
                                      model.cfg.context == ican::ContextMode::kNone)) {
      throw std::runtime_error(
          "infer: context '" + args.context +
          "' changes the feature length; the checkpoint was trained with '" +
          ican::context_mode_name(model.cfg.context) + "'");
    }
    model.cfg.context = mode;
  }
  ican::FusionMode fusion = ican::parse_fusion_mode(args.mode);
  auto fmaps = ican::load_feature_maps(args.features);
  auto dets = ican::load_detections(args.detections);
  std::map<std::string, const std::vector<ican::Detection>*> dets_by_id;
  for (const auto& d : dets) dets_by_id[d.image_id] = &d.detections;

  std::vector<ican::PredTriplet> preds;
  for (const auto& lf : fmaps) {
    auto it = dets_by_id.find(lf.image_id);
    if (it == dets_by_id.end()) continue;
    ican::InferenceResult res =
        fusion == ican::FusionMode::kLate
            ? ican::infer_late(lf.fmap, *it->second, model)
            : ican::infer_early(lf.fmap, *it->second, model);
    auto converted = ican::to_predictions(res.triplets, lf.image_id);
    preds.insert(preds.end(), converted.begin(), converted.end());
  }
  ican::save_predictions(args.out, preds, model.vocab);
  std::cout << "wrote " << preds.size() << " triplets to " << args.out << "\n";
  return 0;
}

struct EvalArgs {
  std::string preds;
  std::string gt;
  std::string setting = "default";
  std::string out;
  int rare_threshold = -1;
};

int run_eval(const EvalArgs& args) {
  ican::GroundTruth gt = ican::load_ground_truth(args.gt);
  auto preds = ican::load_predictions(args.preds, gt.vocab);
  ican::EvalResult result =
      ican::role_map(preds, gt, ican::parse_eval_setting(args.setting));
  std::string report = ican::eval_report(result, args.rare_threshold);
  if (args.out.empty()) {
    std::cout << report;
  } else {
    std::ofstream os(args.out);
    if (!os) throw std::runtime_error("eval: cannot open " + args.out + " for writing");
    os << report;
    std::cout << "report written to " << args.out << "\n";
  }
  return 0;
}

struct AttnDumpArgs {
  std::string weights;
  std::string features;
  std::string detections;
  std::string out;
};

int run_attn_dump(const AttnDumpArgs& args) {
  ican::Model model = ican::Model::load(args.weights);
  auto fmaps = ican::load_feature_maps(args.features);
  auto dets = ican::load_detections(args.detections);
  std::map<std::string, const std::vector<ican::Detection>*> dets_by_id;
  for (const auto& d : dets) dets_by_id[d.image_id] = &d.detections;
  fs::create_directories(args.out);

  int written = 0;
  for (const auto& lf : fmaps) {
    auto it = dets_by_id.find(lf.image_id);
    if (it == dets_by_id.end()) continue;
    ican::FilteredDetections filtered = ican::filter_detections(*it->second);
    auto dump_one = [&](int det_index, int rank, ican::InstanceRole role) {
      const ican::Detection& det = (*it->second)[static_cast<std::size_t>(det_index)];
      const ican::IcanBranch& branch = model.branch(role);
      ican::InstanceFeature inst = ican::extract_instance_feature(
          lf.fmap, det.box, branch, role, model.cfg.roi_out, model.cfg.spatial_scale);
      ican::AttentionMap att = ican::attention_map(lf.fmap, inst, branch);
      std::string stem = lf.image_id + (role == ican::InstanceRole::kHuman ? "_h" : "_o") +
                         std::to_string(rank);
      ican::write_attention_pgm((fs::path(args.out) / (stem + ".pgm")).string(), att.weights);
      ican::write_attention_csv((fs::path(args.out) / (stem + ".csv")).string(), att.weights);
      ++written;
    };
    for (std::size_t h = 0; h < filtered.humans.size(); ++h) {
      dump_one(filtered.humans[h], static_cast<int>(h), ican::InstanceRole::kHuman);
    }
    for (std::size_t o = 0; o < filtered.objects.size(); ++o) {
      dump_one(filtered.objects[o], static_cast<int>(o), ican::InstanceRole::kObject);
    }
  }
  std::cout << "wrote " << written << " attention maps to " << args.out << "\n";
  return 0;
}

struct BenchArgs {
  std::string sizes = "1,2,5,10,20";
  std::uint64_t seed = 7;
  std::string config;
};

int run_bench(const BenchArgs& args) {
  ican::Config cfg;
  if (!args.config.empty()) cfg = ican::parse_config_file(args.config);
  else {
    // Mid-size defaults keep the table quick to produce.
    cfg.model.inst_dim = 64;
    cfg.model.embed_dim = 64;
    cfg.model.roi_out = 5;
    cfg.model.raster = 32;
    cfg.model.hidden_dim = 128;
    cfg.model.pair_conv1 = 8;
    cfg.model.pair_conv2 = 16;
  }
  std::vector<int> sizes;
  std::string token;
  std::istringstream ss(args.sizes);
  while (std::getline(ss, token, ',')) sizes.push_back(std::stoi(token));

  std::vector<ican::ActionInfo> actions;
  for (int a = 0; a < 5; ++a) {
    actions.push_back({"act" + std::to_string(a), true, 1 + a % 3});
  }
  actions.push_back({"solo", false, -1});
  ican::Model model =
      ican::Model::init(cfg.model, ican::ActionVocabulary(actions), args.seed);
  auto rows = ican::bench(sizes, model, args.seed);
  std::cout << ican::bench_table(rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"instance-centric attention network for human-object interaction detection"};
  app.require_subcommand(1);

  SynthArgs synth;
  CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset");
  synth_cmd->add_option("--seed", synth.seed);
  synth_cmd->add_option("--images", synth.images);
  synth_cmd->add_option("--actions", synth.actions);
  synth_cmd->add_option("--categories", synth.categories);
  synth_cmd->add_option("--channels", synth.channels);
  synth_cmd->add_option("--grid", synth.grid);
  synth_cmd->add_option("--out", synth.out)->required();

  TrainArgs train;
  CLI::App* train_cmd = app.add_subcommand("train", "train all streams");
  train_cmd->add_option("--data", train.data)->required();
  train_cmd->add_option("--config", train.config)->required();
  train_cmd->add_option("--iters", train.iters);
  train_cmd->add_option("--seed", train.seed);
  train_cmd->add_option("--out", train.out)->required();

  InferArgs infer;
  CLI::App* infer_cmd = app.add_subcommand("infer", "detect interactions");
  infer_cmd->add_option("--weights", infer.weights)->required();
  infer_cmd->add_option("--features", infer.features)->required();
  infer_cmd->add_option("--detections", infer.detections)->required();
  infer_cmd->add_option("--mode", infer.mode);
  infer_cmd->add_option("--context", infer.context);
  infer_cmd->add_option("--out", infer.out)->required();

  EvalArgs eval;
  CLI::App* eval_cmd = app.add_subcommand("eval", "role mean average precision");
  eval_cmd->add_option("--preds", eval.preds)->required();
  eval_cmd->add_option("--gt", eval.gt)->required();
  eval_cmd->add_option("--setting", eval.setting);
  eval_cmd->add_option("--out", eval.out);
  eval_cmd->add_option("--rare-threshold", eval.rare_threshold);

  AttnDumpArgs attn;
  CLI::App* attn_cmd = app.add_subcommand("attn-dump", "write attention maps (PGM + CSV)");
  attn_cmd->add_option("--weights", attn.weights)->required();
  attn_cmd->add_option("--features", attn.features)->required();
  attn_cmd->add_option("--detections", attn.detections)->required();
  attn_cmd->add_option("--out", attn.out)->required();

  BenchArgs bench;
  CLI::App* bench_cmd = app.add_subcommand("bench", "late vs early fusion cost table");
  bench_cmd->add_option("--sizes", bench.sizes);
  bench_cmd->add_option("--seed", bench.seed);
  bench_cmd->add_option("--config", bench.config);

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth_cmd->parsed()) return run_synth(synth);
    if (train_cmd->parsed()) return run_train(train);
    if (infer_cmd->parsed()) return run_infer(infer);
    if (eval_cmd->parsed()) return run_eval(eval);
    if (attn_cmd->parsed()) return run_attn_dump(attn);
    if (bench_cmd->parsed()) return run_bench(bench);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
