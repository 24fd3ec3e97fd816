/*
* organloc - regression forest organ localization and atlas segmentation.
*
* Copyright 2026 The organloc Authors
*
* Licensed under the Apache License, Version 2.0 (the "License");
* you may not use this file except in compliance with the License.
* You may obtain a copy of the License at
*
*     http://www.apache.org/licenses/LICENSE-2.0
*
* Unless required by applicable law or agreed to in writing, software
* distributed under the License is distributed on an "AS IS" BASIS,
* WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
* See the License for the specific language governing permissions and
* limitations under the License.
*/


// organloc command line: phantom generation, training, localization,
// segmentation, evaluation and cross-validation.

#include "organloc/config.hpp"
#include "organloc/eval.hpp"
#include "organloc/manifest.hpp"
#include "organloc/parallel.hpp"
#include "organloc/volume_io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace organloc;

namespace {

struct Common
{
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
};

void add_common(CLI::App* sub, Common& c)
{
  sub->add_option("--seed", c.seed, "Seed overriding the configured one");
  sub->add_option("--threads", c.threads, "Worker thread cap (0 = all cores)")->capture_default_str();
}

KeyValueConfig load_config(const std::string& path)
{
  return path.empty() ? KeyValueConfig{} : KeyValueConfig::load(path);
}

PipelineConfig pipeline_config(const std::string& path, const Common& c)
{
  KeyValueConfig kv = load_config(path);
  PipelineConfig cfg = pipeline_config_from(kv);
  kv.check_all_used();
  if (c.seed)
    cfg.localizer.forest.seed = *c.seed;
  return cfg;
}

FeatureVolume load_optional(const std::string& path)
{
  return path.empty() ? FeatureVolume{} : load_volume_as<float>(path);
}

const FeatureVolume* ptr(const FeatureVolume& v) { return v.empty() ? nullptr : &v; }

void write_box(const std::string& path, const BoundingBox& box)
{
  save_boxes(path, {box});
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Organ localization with regression forests and atlas-guided graph-cut segmentation"};
  app.require_subcommand(1);
  Common common;

  // gen-phantom
  std::string gp_config, gp_out;
  auto* gen = app.add_subcommand("gen-phantom", "Write a synthetic phantom dataset and its manifest");
  gen->add_option("--config", gp_config, "key = value dataset config");
  gen->add_option("--out-dir", gp_out, "Output directory")->required();
  add_common(gen, common);

  // train
  std::string tr_cases, tr_out, tr_atlas, tr_config;
  auto* train = app.add_subcommand("train", "Train the localizer (and optionally the atlas) on a manifest");
  train->add_option("--cases", tr_cases, "Case manifest")->required();
  train->add_option("--out", tr_out, "Model bundle output")->required();
  train->add_option("--atlas-out", tr_atlas, "Atlas output (VOLF1 plus .meta sidecar)");
  train->add_option("--config", tr_config, "key = value pipeline config");
  add_common(train, common);

  // localize
  std::string lo_model, lo_ct, lo_feat, lo_lik, lo_out;
  auto* loc = app.add_subcommand("localize", "Estimate the organ bounding box of one CT");
  loc->add_option("--model", lo_model, "Model bundle")->required();
  loc->add_option("--ct", lo_ct, "CT volume")->required();
  loc->add_option("--feat", lo_feat, "Deep feature volume");
  loc->add_option("--lik", lo_lik, "Likelihood volume");
  loc->add_option("--out", lo_out, "Box output (x1 x2 y1 y2 z1 z2 in mm)")->required();
  add_common(loc, common);

  // segment
  std::string sg_model, sg_atlas, sg_ct, sg_feat, sg_lik, sg_out, sg_box_out, sg_config;
  std::optional<double> sg_lambda;
  auto* seg = app.add_subcommand("segment", "Localize, project the atlas and refine with a graph cut");
  seg->add_option("--model", sg_model, "Model bundle")->required();
  seg->add_option("--atlas", sg_atlas, "Atlas volume")->required();
  seg->add_option("--ct", sg_ct, "CT volume")->required();
  seg->add_option("--feat", sg_feat, "Deep feature volume");
  seg->add_option("--lik", sg_lik, "Likelihood volume");
  seg->add_option("--lambda", sg_lambda, "Pairwise weight");
  seg->add_option("--config", sg_config, "key = value pipeline config");
  seg->add_option("--out", sg_out, "Mask output (u8 VOLF1)")->required();
  seg->add_option("--box-out", sg_box_out, "Also write the estimated box");
  add_common(seg, common);

  // eval
  std::string ev_mask, ev_truth, ev_box, ev_truth_box;
  int ev_label = 1;
  auto* ev = app.add_subcommand("eval", "Score a mask and/or box against ground truth");
  ev->add_option("--mask", ev_mask, "Predicted mask");
  ev->add_option("--truth", ev_truth, "Ground-truth label volume");
  ev->add_option("--label", ev_label, "Organ label in the ground truth")->capture_default_str();
  ev->add_option("--box", ev_box, "Predicted box file");
  ev->add_option("--truth-box", ev_truth_box, "Ground-truth box file");
  add_common(ev, common);

  // cv
  std::string cv_manifest, cv_out, cv_config;
  int cv_k = 5;
  bool cv_no_segment = false;
  auto* cv = app.add_subcommand("cv", "k-fold cross-validation over a manifest");
  cv->add_option("--manifest", cv_manifest, "Case manifest")->required();
  cv->add_option("--k", cv_k, "Fold count")->capture_default_str();
  cv->add_option("--out", cv_out, "Report output (default stdout)");
  cv->add_option("--config", cv_config, "key = value pipeline config");
  cv->add_flag("--no-segment", cv_no_segment, "Only evaluate localization");
  add_common(cv, common);

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::CallForHelp& e)
  {
    return app.exit(e);
  }
  catch (const CLI::CallForAllHelp& e)
  {
    return app.exit(e);
  }
  catch (const CLI::ParseError& e)
  {
    std::cerr << "organloc: " << e.what() << "\n";
    CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    std::cerr << sub->help();
    return 2;
  }

  try
  {
    set_thread_count(common.threads);

    if (*gen)
    {
      KeyValueConfig kv = load_config(gp_config);
      DatasetParams params = dataset_params_from(kv);
      kv.check_all_used();
      if (common.seed)
        params.seed = *common.seed;
      write_phantom_dataset(params, gp_out);
    }
    else if (*train)
    {
      const PipelineConfig cfg = pipeline_config(tr_config, common);
      const std::vector<CaseData> cases = load_cases(Manifest::load(tr_cases));
      std::vector<const CaseData*> refs;
      for (const auto& c : cases)
        refs.push_back(&c);
      const TrainedPipeline model = train_pipeline(refs, cfg);
      model.localizer.save(tr_out);
      if (!tr_atlas.empty())
        save_atlas(tr_atlas, model.atlas);
    }
    else if (*loc)
    {
      const LocalizerModel model = LocalizerModel::load(lo_model);
      const ScalarVolume ct = load_volume_as<float>(lo_ct);
      const FeatureVolume feat = load_optional(lo_feat), lik = load_optional(lo_lik);
      write_box(lo_out, estimate_box(model, ct, ptr(feat), ptr(lik)).box);
    }
    else if (*seg)
    {
      PipelineConfig cfg = pipeline_config(sg_config, common);
      if (sg_lambda)
        cfg.energy.lambda = *sg_lambda;
      TrainedPipeline model;
      model.localizer = LocalizerModel::load(sg_model);
      model.atlas = load_atlas(sg_atlas);
      const ScalarVolume ct = load_volume_as<float>(sg_ct);
      const FeatureVolume feat = load_optional(sg_feat), lik = load_optional(sg_lik);
      const CaseResult r = run_case(model, ct, ptr(feat), ptr(lik), cfg);
      save_volume(sg_out, r.segmentation.mask);
      if (!sg_box_out.empty())
        write_box(sg_box_out, r.estimate.box);
    }
    else if (*ev)
    {
      if (ev_mask.empty() != ev_truth.empty() || ev_box.empty() != ev_truth_box.empty() ||
          (ev_mask.empty() && ev_box.empty()))
        throw ConfigError("eval needs --mask with --truth and/or --box with --truth-box");
      if (!ev_mask.empty())
      {
        const MaskVolume pred = load_volume_as<std::uint8_t>(ev_mask);
        const MaskVolume truth = select_label(load_volume_as<std::uint8_t>(ev_truth), std::uint8_t(ev_label));
        std::printf("ji %.9f\ndice %.9f\n", jaccard(pred, truth), dice(pred, truth));
      }
      if (!ev_box.empty())
        std::printf("face_mm %.9f\n", face_distance(load_box(ev_box), load_box(ev_truth_box)).mean);
    }
    else if (*cv)
    {
      const PipelineConfig cfg = pipeline_config(cv_config, common);
      const std::vector<CaseData> cases = load_cases(Manifest::load(cv_manifest));
      CvOptions opts;
      opts.segment = !cv_no_segment;
      const CvReport report = run_cv(cases, cv_k, cfg, common.seed.value_or(1), opts);
      if (cv_out.empty())
        report.write(std::cout, opts);
      else
      {
        std::ofstream out(cv_out);
        if (!out)
          throw IoError("cannot write " + cv_out);
        report.write(out, opts);
      }
    }
  }
  catch (const std::exception& e)
  {
    std::cerr << "organloc: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
