/*
 * Copyright 2026 The AMRule Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <csignal>
#include <iostream>
#include <optional>

#include "amrule/annotation.hpp"
#include "amrule/error.hpp"
#include "amrule/pipeline.hpp"
#include "amrule/run_config.hpp"
#include "amrule/service.hpp"
#include "amrule/synth.hpp"

namespace {

using namespace amrule;
namespace fs = std::filesystem;

void PrintSummary(const pipeline::Run& run) {
  const Json m = run.metrics();
  if (m.contains("final")) std::cout << m.at("final").dump(2) << "\n";
}

std::unique_ptr<annotation::Annotator> MakeAnnotator(const RunConfig& config) {
  switch (config.annotator) {
    case AnnotatorMode::kScripted:
      if (config.truth.empty()) {
        throw Error(ErrorCode::kConfig, "scripted annotation needs a truth file");
      }
      return std::make_unique<annotation::ScriptedAnnotator>(
          synth::LoadPlantedRules(config.truth));
    case AnnotatorMode::kDecisions:
      return std::make_unique<annotation::ReplayAnnotator>(
          annotation::LoadDecisions(config.decisions));
    case AnnotatorMode::kInteractive:
      return nullptr;
  }
  return nullptr;
}

int CmdRun(const fs::path& config_path, const std::optional<fs::path>& decisions,
           const std::optional<std::string>& ablation,
           const std::optional<std::uint64_t>& seed, bool force, bool resume) {
  RunConfig config = RunConfig::Load(config_path);
  if (decisions) {
    config.decisions = fs::absolute(*decisions);
    config.annotator = AnnotatorMode::kDecisions;
  }
  if (ablation) config.ablation = AblationFromName(*ablation);
  if (seed) config.seed = *seed;

  std::unique_ptr<pipeline::Run> run;
  const fs::path run_dir = config.Resolve(config.run_dir);
  if (resume && fs::exists(run_dir / "manifest.json")) {
    run = pipeline::Run::Open(run_dir);
  } else {
    run = pipeline::Run::Create(config, force);
  }
  auto annotator = MakeAnnotator(run->config());
  if (!annotator) {
    pipeline::PauseDriver pause;
    try {
      run->RunToCompletion(pause);
    } catch (const pipeline::Paused& p) {
      std::cout << "paused for annotation at iteration " << p.iteration
                << "; continue with: amrule serve --run " << run->run_dir().string()
                << "\n";
      return 0;
    }
  } else {
    pipeline::HeadlessDriver driver(*annotator);
    run->RunToCompletion(driver);
  }
  PrintSummary(*run);
  return 0;
}

int CmdSynth(const std::optional<fs::path>& config_path, const fs::path& out) {
  synth::SynthConfig config;
  if (config_path) config = synth::SynthConfig::FromJson(ReadJsonFile(*config_path));
  const auto world = synth::Generate(config);
  synth::WriteWorld(world, config, out);
  std::cout << "wrote " << world.anchors.size() << " anchors, " << world.recs.size()
            << " recs, " << world.copurchase.size() << " co-purchase rows to "
            << out.string() << "\n";
  return 0;
}

int CmdEval(const fs::path& run_dir, const std::string& split) {
  const auto run = pipeline::Run::Open(run_dir);
  pipeline::EvalSet set;
  if (split == "test") {
    set = run->test_set();
  } else if (split == "validation") {
    set = run->validation_set();
  } else if (split == "train") {
    set = run->MakeEvalSet(run->split().train);
  } else {
    throw Error(ErrorCode::kConfig, "unknown split '" + split + "'");
  }
  const auto result = pipeline::Evaluate(run->FinalPredictor(), set);
  Json out = result.ToJson();
  out["split"] = split;
  out["completed_iterations"] = run->completed_iterations();
  std::cout << out.dump(2) << "\n";
  return 0;
}

pipeline::Run* g_serving = nullptr;

void OnSignal(int) {
  if (g_serving != nullptr) g_serving->sessions().Cancel();
}

int CmdServe(const fs::path& run_dir, const std::string& bind) {
  const auto run = pipeline::Run::Open(run_dir);
  service::AnnotationService api(*run);
  api.Start(service::BindAddress::Parse(bind));
  g_serving = run.get();
  std::signal(SIGINT, OnSignal);
  std::signal(SIGTERM, OnSignal);
  pipeline::InteractiveDriver driver;
  try {
    run->RunToCompletion(driver);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kConflict) throw;
    spdlog::info("annotation wait cancelled; session state is on disk");
    return 0;
  }
  PrintSummary(*run);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive multi-view rule discovery for complementary products"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off");

  auto* run_cmd = app.add_subcommand("run", "Run the iteration loop");
  fs::path config_path;
  std::optional<fs::path> decisions;
  std::optional<std::string> ablation;
  std::optional<std::uint64_t> seed;
  bool force = false;
  bool resume = false;
  run_cmd->add_option("--config", config_path, "Run configuration (JSON)")->required();
  run_cmd->add_option("--decisions", decisions, "Replay annotation decisions (JSONL)");
  run_cmd->add_option("--ablation", ablation,
                      "full|only-attributes|only-description|only-boosting|no-ensemble");
  run_cmd->add_option("--seed", seed, "Override the configured seed");
  run_cmd->add_flag("--force", force, "Replace an existing run directory");
  run_cmd->add_flag("--resume", resume, "Continue an existing run directory");

  auto* synth_cmd = app.add_subcommand("synth", "Generate a planted-rule world");
  std::optional<fs::path> synth_config;
  fs::path out_dir;
  synth_cmd->add_option("--config", synth_config, "Generator settings (JSON)");
  synth_cmd->add_option("--out", out_dir, "Output directory")->required();

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate the final predictor");
  fs::path eval_run;
  std::string split = "test";
  eval_cmd->add_option("--run", eval_run, "Run directory")->required();
  eval_cmd->add_option("--split", split, "test|validation|train");

  auto* serve_cmd = app.add_subcommand("serve", "Serve the annotation API");
  fs::path serve_run;
  std::string bind = "127.0.0.1:8080";
  serve_cmd->add_option("--run", serve_run, "Run directory")->required();
  serve_cmd->add_option("--bind", bind, "host:port");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));
  try {
    if (*run_cmd) return CmdRun(config_path, decisions, ablation, seed, force, resume);
    if (*synth_cmd) return CmdSynth(synth_config, out_dir);
    if (*eval_cmd) return CmdEval(eval_run, split);
    if (*serve_cmd) return CmdServe(serve_run, bind);
  } catch (const Error& e) {
    std::cerr << "error [" << ErrorCodeName(e.code()) << "]: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
