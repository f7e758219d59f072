// tests/config-test.cc

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

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "plugin-se/config.h"
#include "plugin-se/errors.h"

namespace plugin_se {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

json Defaults() { return ExperimentConfig().ToJson(); }

TEST(ExperimentConfig, DefaultsRoundTrip) {
  const ExperimentConfig c;
  const ExperimentConfig r = ExperimentConfig::FromJson(c.ToJson());
  EXPECT_EQ(r.ToJson(), c.ToJson());
  EXPECT_EQ(r.Hash(), c.Hash());
  EXPECT_EQ(c.Hash().size(), 16u);
  EXPECT_EQ(c.enhancer.lambda_cm, 0.01);
  EXPECT_EQ(c.enhancer.lambda_ct, 0.01);
  EXPECT_EQ(c.enhancer.decay_gamma, 0.9);
  EXPECT_EQ(c.predictor.hidden, (std::vector<int>{256, 256, 256}));
  EXPECT_EQ(c.downstream.size(), 5u);
}

TEST(ExperimentConfig, PartialDocumentKeepsDefaults) {
  const ExperimentConfig c =
      ExperimentConfig::FromJson(json{{"format_version", 1}, {"seed", 9}});
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.gate.iterations, 300);
  EXPECT_NE(c.Hash(), ExperimentConfig().Hash());
}

TEST(ExperimentConfig, ShippedConfigsParse) {
  for (const char *name : {"default.json", "smoke.json"}) {
    std::ifstream in(fs::path(PLUGIN_SE_SOURCE_DIR) / "configs" / name);
    ASSERT_TRUE(in) << name;
    EXPECT_NO_THROW(ExperimentConfig::FromJson(json::parse(in))) << name;
  }
  std::ifstream in(fs::path(PLUGIN_SE_SOURCE_DIR) / "configs" / "default.json");
  EXPECT_EQ(ExperimentConfig::FromJson(json::parse(in)).ToJson(), Defaults());
}

TEST(ExperimentConfig, UnknownKeysRejected) {
  json j = Defaults();
  j["gate"]["itertions"] = 10;
  try {
    ExperimentConfig::FromJson(j);
    FAIL();
  } catch (const SchemaError &e) {
    EXPECT_NE(std::string(e.what()).find("itertions"), std::string::npos);
  }
  j = Defaults();
  j["downstream"][0]["augment"] = true;
  EXPECT_THROW(ExperimentConfig::FromJson(j), SchemaError);
  j = Defaults();
  j["extra"] = json::object();
  EXPECT_THROW(ExperimentConfig::FromJson(j), SchemaError);
}

TEST(ExperimentConfig, VersionAndTypes) {
  json j = Defaults();
  j.erase("format_version");
  EXPECT_THROW(ExperimentConfig::FromJson(j), SchemaError);
  j["format_version"] = 2;
  EXPECT_THROW(ExperimentConfig::FromJson(j), SchemaError);
  j = Defaults();
  j["gate"]["iterations"] = "many";
  EXPECT_THROW(ExperimentConfig::FromJson(j), SchemaError);
  EXPECT_THROW(ExperimentConfig::FromJson(json::array()), SchemaError);
}

TEST(ExperimentConfig, BadValuesRejected) {
  const auto rejects = [](const std::function<void(json &)> &edit) {
    json j = Defaults();
    edit(j);
    EXPECT_THROW(ExperimentConfig::FromJson(j), std::exception) << j.dump();
  };
  rejects([](json &j) { j["corpus"]["train_items"] = 0; });
  rejects([](json &j) { j["corpus"]["noise_kinds"] = {"brown"}; });
  rejects([](json &j) { j["enhancer"]["loss"] = "l1"; });
  rejects([](json &j) { j["enhancer"]["cm_downstream"] = "SV/maybe"; });
  rejects([](json &j) { j["downstream"][0]["task"] = "LID"; });
  rejects([](json &j) { j["downstream"].push_back(j["downstream"][0]); });
  rejects([](json &j) { j["downstream"][2]["class_count"] = 9; });
  rejects([](json &j) { j["gate"]["lr"] = -1; });
  rejects([](json &j) { j["gate"]["sweep_points"] = 1; });
  rejects([](json &j) { j["predictor"]["targets"] = "guess"; });
  rejects([](json &j) { j["predictor"]["capacity"] = 2; });
}

TEST(Descriptor, ParseAndSlug) {
  EXPECT_EQ(ParseDescriptor("SV/NI"), (TaskDescriptor{1, true}));
  EXPECT_EQ(ParseDescriptor("ASR/clean"), (TaskDescriptor{2, false}));
  EXPECT_EQ(DescriptorSlug(ParseDescriptor("Representation/clean")),
            "representation_clean");
  EXPECT_EQ(DescriptorSlug(ParseDescriptor("SE/clean")), "se_clean");
  EXPECT_THROW(ParseDescriptor("SV"), InvalidArgument);
  EXPECT_THROW(ParseDescriptor("XX/NI"), InvalidArgument);
  EXPECT_THROW(ParseDescriptor("SV/noisy"), InvalidArgument);
}

TEST(ExperimentConfig, SeedStreamsDiffer) {
  const ExperimentConfig c;
  const TaskDescriptor sv_ni{1, true}, sv{1, false};
  EXPECT_NE(c.EnhancerCorpus(false).seed, c.EnhancerCorpus(true).seed);
  // Twins share their training data and differ only in augmentation.
  EXPECT_EQ(c.TaskCorpus(sv_ni, false).seed, c.TaskCorpus(sv, false).seed);
  EXPECT_NE(c.TaskCorpus(sv, false).seed, c.TaskCorpus(sv, true).seed);
  EXPECT_NE(c.GateCorpus(sv).seed, c.EvalCorpus(sv, -5).seed);
}

// ---------------------------------------------------------------------------
// Command-line tool.

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

std::string Slurp(const fs::path &p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CliRun Cli(const std::string &args) {
  const fs::path tmp = fs::temp_directory_path();
  const fs::path out = tmp / "plugin-se-cli.out";
  const fs::path err = tmp / "plugin-se-cli.err";
  const std::string cmd = std::string(PLUGIN_SE_CLI) + " " + args + " >" +
                          out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  CliRun r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = Slurp(out);
  r.err = Slurp(err);
  return r;
}

fs::path Scratch(const std::string &name) {
  const fs::path p = fs::temp_directory_path() / ("plugin-se-test-" + name);
  fs::remove_all(p);
  return p;
}

std::string Config(const std::string &name) {
  return (fs::path(PLUGIN_SE_SOURCE_DIR) / "configs" / name).string();
}

void ExpectError(const CliRun &r, int code, const std::string &kind) {
  EXPECT_EQ(r.code, code) << r.err;
  const json j = json::parse(r.err);
  EXPECT_EQ(j["error"]["exit_code"], code);
  EXPECT_EQ(j["error"]["kind"], kind);
  EXPECT_FALSE(j["error"]["message"].get<std::string>().empty());
  EXPECT_TRUE(r.out.empty());
}

const char *kStages[] = {"synth",         "train-downstream", "train-enhancer",
                         "optimize-gate", "sweep",            "train-predictor",
                         "infer",         "report"};

void RunPipeline(const std::string &config, const fs::path &out) {
  for (const char *stage : kStages) {
    const CliRun r = Cli(std::string(stage) + " --config " + config +
                         " --out " + out.string());
    ASSERT_EQ(r.code, 0) << stage << ": " << r.err;
    const json summary = json::parse(r.out);
    EXPECT_EQ(summary["stage"], stage);
  }
}

// Drops wall-clock fields, which are the only run-dependent content.
json WithoutTiming(json j) {
  if (j.is_object()) {
    j.erase("timing");
    for (auto &[k, v] : j.items()) v = WithoutTiming(v);
  } else if (j.is_array()) {
    for (auto &v : j) v = WithoutTiming(v);
  }
  return j;
}

TEST(Cli, UsageErrors) {
  ExpectError(Cli("synth"), 2, "usage");
  ExpectError(Cli("frobnicate --config x"), 2, "usage");
  ExpectError(Cli("synth --config " + Config("smoke.json") + " --exec gpu"), 2,
              "usage");
  EXPECT_NE(Cli("").code, 0);
}

TEST(Cli, SchemaAndMissingArtifacts) {
  const fs::path dir = Scratch("errors");
  fs::create_directories(dir);
  std::ofstream(dir / "bad.json") << R"({"format_version": 1, "gaet": {}})";
  std::ofstream(dir / "broken.json") << "{ not json";
  ExpectError(Cli("synth --config " + (dir / "bad.json").string()), 3, "schema");
  ExpectError(Cli("synth --config " + (dir / "broken.json").string()), 3, "schema");

  const CliRun missing = Cli("synth --config " + (dir / "nope.json").string());
  ExpectError(missing, 4, "missing_artifact");
  EXPECT_EQ(json::parse(missing.err)["error"]["path"], (dir / "nope.json").string());

  const std::string out = " --out " + (dir / "run").string();
  for (const char *stage : {"train-downstream", "train-enhancer", "optimize-gate",
                            "sweep", "train-predictor", "infer", "report"})
    ExpectError(Cli(std::string(stage) + " --config " + Config("smoke.json") + out),
                4, "missing_artifact");
}

TEST(Cli, SmokePipelineIsReproducible) {
  const fs::path dir = Scratch("smoke");
  RunPipeline(Config("smoke.json"), dir);

  // Eleven grid points: header plus eleven rows, no NaN.
  for (const char *slug : {"sv_clean", "sv_ni", "se_clean"}) {
    std::ifstream in(dir / "sweep" / (std::string("sweep_") + slug + ".csv"));
    std::string line;
    int rows = 0;
    std::getline(in, line);
    EXPECT_EQ(line, "w,oir_ratio,oir_db,downstream_loss,accuracy,clamped_items");
    while (std::getline(in, line)) {
      ++rows;
      EXPECT_EQ(line.find("nan"), std::string::npos) << line;
    }
    EXPECT_EQ(rows, 11) << slug;
  }
  for (const char *f : {"input.wav", "enhanced.wav", "gated.wav", "metrics.json"})
    EXPECT_TRUE(fs::exists(dir / "infer" / "sv_ni" / f)) << f;

  const json first = json::parse(Slurp(dir / "report" / "report.json"));
  const std::string eval = Slurp(dir / "report" / "eval.csv");
  EXPECT_EQ(first["seed"], 1);
  EXPECT_EQ(first["config_hash"].get<std::string>().size(), 16u);

  // Errors after a complete run: bad task, bad forced weight.
  const std::string args = " --config " + Config("smoke.json") + " --out " + dir.string();
  ExpectError(Cli("infer --task XX/NI" + args), 6, "invalid_argument");
  // Not among the configured downstream models.
  ExpectError(Cli("infer --task ASR/NI" + args), 6, "invalid_argument");
  ExpectError(Cli("infer --force-w 1.5" + args), 6, "invalid_argument");

  // A second run over the same directory reproduces every number.
  RunPipeline(Config("smoke.json"), dir);
  const json second = json::parse(Slurp(dir / "report" / "report.json"));
  EXPECT_EQ(WithoutTiming(first), WithoutTiming(second));
  EXPECT_EQ(eval, Slurp(dir / "report" / "eval.csv"));

  // The serial reference path gives the same report.
  const fs::path serial = Scratch("smoke-serial");
  for (const char *stage : kStages)
    ASSERT_EQ(Cli(std::string(stage) + " --exec serial --config " +
                  Config("smoke.json") + " --out " + serial.string())
                  .code,
              0)
        << stage;
  EXPECT_EQ(eval, Slurp(serial / "report" / "eval.csv"));

  // A different seed invalidates the cached corpus.
  ExpectError(Cli("sweep --seed 2" + args), 4, "missing_artifact");
}

TEST(Cli, DefaultPipelineOrderingUnderFiveMinutes) {
  const fs::path dir = Scratch("default");
  const auto start = std::chrono::steady_clock::now();
  RunPipeline(Config("default.json"), dir);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cout << "default pipeline wall clock: " << seconds << " s\n";
  EXPECT_LT(seconds, 300.0);

  const json report = json::parse(Slurp(dir / "report" / "report.json"));
  ASSERT_FALSE(report["ordering"].empty());
  for (const json &o : report["ordering"]) {
    EXPECT_TRUE(o["ni_above_clean"].get<bool>()) << o.dump();
    EXPECT_GT(o["w_star_ni"].get<double>(), o["w_star_clean"].get<double>());
  }
}

}  // namespace
}  // namespace plugin_se
