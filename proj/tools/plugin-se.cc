// tools/plugin-se.cc

// Copyright 2026  plugin-se contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Command-line driver: one subcommand per pipeline stage.
//
//   plugin-se <subcommand> --config <path> [--seed N] [--out DIR]
//
// Prints the stage summary as JSON on stdout. Errors go to stderr as
// {"error": {...}} with the exit codes listed in the README.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "plugin-se/harness.h"

namespace {

struct Common {
  std::string config;
  std::optional<uint64_t> seed;
  std::string out = "out";
  std::string exec = "parallel";
};

void AddCommon(CLI::App *sub, Common *c) {
  sub->add_option("--config", c->config, "experiment config (JSON)")->required();
  sub->add_option("--seed", c->seed, "overrides the config seed");
  sub->add_option("--out", c->out, "output root")->capture_default_str();
  sub->add_option("--exec", c->exec, "serial or parallel")
      ->check(CLI::IsMember({"serial", "parallel"}))
      ->capture_default_str();
}

}  // namespace

int main(int argc, char **argv) {
  using namespace plugin_se;

  CLI::App app{"plugin-se: task-aware gated speech enhancement pipeline"};
  app.require_subcommand(1);
  Common common;
  InferRequest infer;
  std::optional<double> force_w;

  struct Entry {
    const char *name;
    const char *help;
  };
  const Entry entries[] = {
      {"synth", "synthesize corpora and write the manifest"},
      {"train-enhancer", "train the mask enhancer"},
      {"train-downstream", "train the downstream models"},
      {"optimize-gate", "optimize w* per downstream model"},
      {"sweep", "evaluate the gate on a uniform grid"},
      {"train-predictor", "fit the weight predictor to the gate targets"},
      {"infer", "run the gated pipeline on one input"},
      {"report", "evaluate and write the run report"},
  };
  std::vector<CLI::App *> subs;
  for (const Entry &e : entries) {
    CLI::App *sub = app.add_subcommand(e.name, e.help);
    AddCommon(sub, &common);
    subs.push_back(sub);
  }
  CLI::App *infer_cmd = app.get_subcommand("infer");
  infer_cmd->add_option("--task", infer.task, "descriptor such as SV/NI or ASR/clean")
      ->capture_default_str();
  infer_cmd->add_option("--input", infer.input_wav, "16-bit mono WAV; default synthetic");
  infer_cmd->add_option("--snr", infer.snr_db, "SNR of the synthetic input")
      ->capture_default_str();
  infer_cmd->add_option("--force-w", force_w, "use this gate weight instead of the predictor");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    nlohmann::json err = {{"error",
                           {{"kind", "usage"},
                            {"message", e.what()},
                            {"exit_code", static_cast<int>(kExitUsage)}}}};
    std::cerr << err.dump() << '\n';
    return kExitUsage;
  }

  try {
    RunContext ctx;
    ctx.config = LoadConfig(common.config);
    if (common.seed) ctx.config.seed = *common.seed;
    ctx.out_dir = common.out;
    ctx.exec = ParseExecution(common.exec);

    const std::string name = app.get_subcommands().front()->get_name();
    nlohmann::json summary;
    if (name == "synth") summary = CmdSynth(ctx);
    else if (name == "train-enhancer") summary = CmdTrainEnhancer(ctx);
    else if (name == "train-downstream") summary = CmdTrainDownstream(ctx);
    else if (name == "optimize-gate") summary = CmdOptimizeGate(ctx);
    else if (name == "sweep") summary = CmdSweep(ctx);
    else if (name == "train-predictor") summary = CmdTrainPredictor(ctx);
    else if (name == "report") summary = CmdReport(ctx);
    else {
      infer.force_w = force_w;
      summary = CmdInfer(ctx, infer);
    }
    std::cout << summary.dump(2) << '\n';
    return kExitOk;
  } catch (const std::exception &e) {
    std::cerr << ErrorJson(e).dump() << '\n';
    return ExitCodeFor(e);
  }
}
