// plugin-se/harness.h

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

#ifndef PLUGIN_SE_HARNESS_H_
#define PLUGIN_SE_HARNESS_H_

#include <exception>
#include <optional>
#include <string>

#include "json.hpp"
#include "plugin-se/config.h"
#include "plugin-se/kernels.h"

namespace plugin_se {

/// Everything a pipeline stage needs: the validated config, the output root
/// and the execution mode for data-parallel loops.
struct RunContext {
  ExperimentConfig config;
  std::string out_dir = "out";
  Execution exec = Execution::kParallel;
};

/// Artifact layout below the output root.
struct ArtifactPaths {
  explicit ArtifactPaths(std::string root) : root(std::move(root)) {}

  std::string root;
  std::string CorpusManifest() const { return root + "/corpus/manifest.json"; }
  std::string CorpusDir() const { return root + "/corpus"; }
  std::string Enhancer() const { return root + "/models/enhancer.json"; }
  std::string Downstream(const TaskDescriptor &d) const {
    return root + "/models/downstream_" + DescriptorSlug(d) + ".json";
  }
  std::string GateTargets() const { return root + "/gate/targets.json"; }
  std::string GateTrace(const TaskDescriptor &d) const {
    return root + "/gate/trace_" + DescriptorSlug(d) + ".csv";
  }
  std::string Sweep(const TaskDescriptor &d) const {
    return root + "/sweep/sweep_" + DescriptorSlug(d) + ".csv";
  }
  std::string Predictor() const { return root + "/predictor/predictor.json"; }
  std::string InferDir(const TaskDescriptor &d) const {
    return root + "/infer/" + DescriptorSlug(d);
  }
  std::string Stage(const std::string &name) const {
    return root + "/stages/" + name + ".json";
  }
  std::string ReportJson() const { return root + "/report/report.json"; }
  std::string ReportCsv() const { return root + "/report/eval.csv"; }
};

/// Reads and validates a config file. Missing file: MissingArtifact;
/// malformed JSON or failed validation: SchemaError.
ExperimentConfig LoadConfig(const std::string &path);

nlohmann::json ReadJsonFile(const std::string &path);
/// Writes through a temporary file and a rename.
void WriteJsonFile(const std::string &path, const nlohmann::json &j);

// Stage commands. Each writes its artifacts plus stages/<name>.json and
// returns that summary. Numeric content depends only on config and seed;
// wall-clock time sits under the "timing" key.
nlohmann::json CmdSynth(const RunContext &ctx);
nlohmann::json CmdTrainEnhancer(const RunContext &ctx);
nlohmann::json CmdTrainDownstream(const RunContext &ctx);
nlohmann::json CmdOptimizeGate(const RunContext &ctx);
nlohmann::json CmdSweep(const RunContext &ctx);
nlohmann::json CmdTrainPredictor(const RunContext &ctx);

struct InferRequest {
  std::string task = "SV/NI";
  std::string input_wav;        // empty: first item of the evaluation corpus
  double snr_db = -5.0;         // for the synthetic input
  std::optional<double> force_w;  // bypasses the predictor
};
nlohmann::json CmdInfer(const RunContext &ctx, const InferRequest &request);

nlohmann::json CmdReport(const RunContext &ctx);

/// Exit codes, also listed in the README.
enum ExitCode {
  kExitOk = 0,
  kExitInternal = 1,
  kExitUsage = 2,
  kExitSchema = 3,
  kExitMissingArtifact = 4,
  kExitNumeric = 5,
  kExitInvalidArgument = 6,
};

/// Maps an exception to its exit code and the error document printed on
/// stderr: {"error": {"kind", "message", "exit_code", "path"?}}.
int ExitCodeFor(const std::exception &e);
nlohmann::json ErrorJson(const std::exception &e);

}  // namespace plugin_se

#endif  // PLUGIN_SE_HARNESS_H_
