// src/config.cc

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

#include "plugin-se/config.h"

#include <cstdio>
#include <set>

#include "plugin-se/errors.h"
#include "plugin-se/rng.h"

namespace plugin_se {

namespace {

using nlohmann::json;

// Reads optional keys of one JSON object and rejects the ones nobody asked
// for.
class ObjectReader {
 public:
  ObjectReader(const json &j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw SchemaError(path_ + ": expected an object");
  }

  template <typename T>
  void Get(const char *key, T *out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      *out = j_.at(key).get<T>();
    } catch (const json::exception &e) {
      throw SchemaError(path_ + "." + key + ": " + e.what());
    }
  }

  const json *Child(const char *key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void Finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key()))
        throw SchemaError("unknown key '" + path_ + "." + it.key() + "'");
  }

 private:
  const json &j_;
  std::string path_;
  std::set<std::string> seen_;
};

void Require(bool ok, const std::string &what) {
  if (!ok) throw SchemaError("config: " + what);
}

void CheckSnrGrid(const std::vector<double> &g, const std::string &what) {
  Require(!g.empty(), what + " must not be empty");
  for (double v : g) Require(std::isfinite(v), what + " entries must be finite");
}

void CheckHidden(const std::vector<int> &h, const std::string &what) {
  for (int v : h) Require(v >= 1, what + " entries must be >= 1");
}

AdamConfig Adam(double lr, double gamma, int period) {
  AdamConfig a;
  a.lr0 = lr;
  a.decay_gamma = gamma;
  a.decay_period = period;
  return a;
}

TaskKind CorpusTask(TaskKind kind) {
  // SE and the representation analog draw speakers freely.
  return kind == TaskKind::kSv || kind == TaskKind::kAsr ? kind : TaskKind::kSe;
}

}  // namespace

uint64_t Fnv1a64(const std::string &data) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

TaskDescriptor ParseDescriptor(const std::string &s) {
  const size_t slash = s.find('/');
  if (slash == std::string::npos)
    throw InvalidArgument("descriptor '" + s + "' is not of the form TASK/clean or TASK/NI");
  const std::string task = s.substr(0, slash);
  const std::string mode = s.substr(slash + 1);
  TaskDescriptor d;
  d.task_id = static_cast<int>(ParseTaskName(task));
  if (mode == "NI")
    d.noise_injection = true;
  else if (mode != "clean")
    throw InvalidArgument("descriptor '" + s + "': mode must be clean or NI");
  return d;
}

std::string DescriptorSlug(const TaskDescriptor &d) {
  std::string name = TaskName(d.kind());
  for (char &c : name) c = static_cast<char>(std::tolower(c));
  return name + (d.noise_injection ? "_ni" : "_clean");
}

ExperimentConfig::ExperimentConfig() {
  Downstream sv;
  sv.task = "SV";
  Downstream sv_ni = sv;
  sv_ni.noise_injection = true;
  Downstream asr;
  asr.task = "ASR";
  asr.noise_injection = true;
  Downstream rep;
  rep.task = "Representation";
  Downstream se;
  se.task = "SE";
  downstream = {sv, sv_ni, asr, rep, se};
}

ExperimentConfig ExperimentConfig::FromJson(const json &j) {
  ExperimentConfig c;
  ObjectReader top(j, "config");
  int version = -1;
  top.Get("format_version", &version);
  Require(j.contains("format_version"), "format_version is required");
  Require(version == kConfigFormatVersion,
          "unsupported format_version " + std::to_string(version));
  top.Get("seed", &c.seed);

  if (const json *s = top.Child("corpus")) {
    ObjectReader r(*s, "corpus");
    r.Get("train_items", &c.corpus.train_items);
    r.Get("held_out_items", &c.corpus.held_out_items);
    r.Get("duration_s", &c.corpus.duration_s);
    r.Get("sample_rate", &c.corpus.sample_rate);
    r.Get("snr_grid_db", &c.corpus.snr_grid_db);
    r.Get("noise_kinds", &c.corpus.noise_kinds);
    r.Get("speaker_classes", &c.corpus.speaker_classes);
    r.Get("export_wav_items", &c.corpus.export_wav_items);
    r.Finish();
  }
  if (const json *s = top.Child("enhancer")) {
    ObjectReader r(*s, "enhancer");
    auto &e = c.enhancer;
    r.Get("loss", &e.loss);
    r.Get("epochs", &e.epochs);
    r.Get("batch_size", &e.batch_size);
    r.Get("lr", &e.lr);
    r.Get("decay_gamma", &e.decay_gamma);
    r.Get("decay_period", &e.decay_period);
    r.Get("hidden", &e.hidden);
    r.Get("frame_length", &e.frame_length);
    r.Get("hop", &e.hop);
    r.Get("lambda_cm", &e.lambda_cm);
    r.Get("lambda_ct", &e.lambda_ct);
    r.Get("cm_downstream", &e.cm_downstream);
    r.Finish();
  }
  if (const json *s = top.Child("downstream")) {
    if (!s->is_array()) throw SchemaError("downstream: expected an array");
    c.downstream.clear();
    for (size_t i = 0; i < s->size(); ++i) {
      ObjectReader r((*s)[i], "downstream[" + std::to_string(i) + "]");
      Downstream d;
      r.Get("task", &d.task);
      r.Get("noise_injection", &d.noise_injection);
      r.Get("epochs", &d.epochs);
      r.Get("batch_size", &d.batch_size);
      r.Get("lr", &d.lr);
      r.Get("decay_gamma", &d.decay_gamma);
      r.Get("decay_period", &d.decay_period);
      r.Get("hidden", &d.hidden);
      r.Get("class_count", &d.class_count);
      r.Get("injection_snr_db", &d.injection_snr_db);
      r.Finish();
      c.downstream.push_back(d);
    }
  }
  if (const json *s = top.Child("gate")) {
    ObjectReader r(*s, "gate");
    auto &g = c.gate;
    r.Get("items", &g.items);
    r.Get("snr_grid_db", &g.snr_grid_db);
    r.Get("iterations", &g.iterations);
    r.Get("lr", &g.lr);
    r.Get("grid_step", &g.grid_step);
    r.Get("sweep_points", &g.sweep_points);
    r.Get("sweep_snr_db", &g.sweep_snr_db);
    r.Finish();
  }
  if (const json *s = top.Child("predictor")) {
    ObjectReader r(*s, "predictor");
    auto &p = c.predictor;
    r.Get("targets", &p.targets);
    r.Get("fixture", &p.fixture);
    r.Get("epochs", &p.epochs);
    r.Get("lr", &p.lr);
    r.Get("decay_gamma", &p.decay_gamma);
    r.Get("decay_period", &p.decay_period);
    r.Get("capacity", &p.capacity);
    r.Get("embed_dim", &p.embed_dim);
    r.Get("hidden", &p.hidden);
    r.Finish();
  }
  if (const json *s = top.Child("report")) {
    ObjectReader r(*s, "report");
    r.Get("eval_snr_db", &c.report.eval_snr_db);
    r.Get("eval_items", &c.report.eval_items);
    r.Finish();
  }
  top.Finish();

  // Value checks.
  const auto &cp = c.corpus;
  Require(cp.train_items >= 1 && cp.held_out_items >= 1, "corpus item counts must be >= 1");
  Require(cp.duration_s > 0.0, "corpus.duration_s must be positive");
  Require(cp.sample_rate > 0, "corpus.sample_rate must be positive");
  CheckSnrGrid(cp.snr_grid_db, "corpus.snr_grid_db");
  Require(!cp.noise_kinds.empty(), "corpus.noise_kinds must not be empty");
  for (const auto &k : cp.noise_kinds) {
    try {
      ParseNoiseKind(k);
    } catch (const InvalidArgument &e) {
      throw SchemaError(std::string("config: corpus.noise_kinds: ") + e.what());
    }
  }
  Require(cp.speaker_classes >= 2, "corpus.speaker_classes must be >= 2");
  Require(cp.export_wav_items >= 0, "corpus.export_wav_items must be >= 0");
  Require(cp.duration_s * cp.sample_rate >= c.enhancer.frame_length,
          "corpus.duration_s is shorter than one analysis frame");

  const auto &e = c.enhancer;
  try {
    ParseEnhancerLoss(e.loss);
    ParseDescriptor(e.cm_downstream);
  } catch (const InvalidArgument &ex) {
    throw SchemaError(std::string("config: enhancer: ") + ex.what());
  }
  Require(e.epochs >= 0 && e.batch_size >= 1, "enhancer epochs/batch_size out of range");
  Require(e.lr > 0.0 && e.decay_gamma > 0.0 && e.decay_period >= 1,
          "enhancer lr, decay_gamma must be > 0 and decay_period >= 1");
  CheckHidden(e.hidden, "enhancer.hidden");
  Require(e.frame_length >= 2 && e.frame_length % 2 == 0 && e.hop >= 1 &&
              e.hop <= e.frame_length,
          "enhancer frame_length/hop invalid");
  Require(e.lambda_cm >= 0.0 && e.lambda_ct >= 0.0, "lambdas must be >= 0");

  Require(!c.downstream.empty(), "downstream list must not be empty");
  std::set<TaskDescriptor> seen;
  for (const auto &d : c.downstream) {
    TaskDescriptor desc;
    try {
      desc = c.Descriptor(d);
    } catch (const InvalidArgument &ex) {
      throw SchemaError(std::string("config: downstream: ") + ex.what());
    }
    Require(seen.insert(desc).second, "duplicate downstream entry " + desc.ToString());
    Require(d.epochs >= 0 && d.batch_size >= 1, "downstream epochs/batch_size out of range");
    Require(d.lr > 0.0 && d.decay_gamma > 0.0 && d.decay_period >= 1,
            "downstream lr, decay_gamma must be > 0 and decay_period >= 1");
    CheckHidden(d.hidden, "downstream.hidden");
    Require(d.class_count == 0 || d.class_count >= 2, "downstream.class_count must be 0 or >= 2");
    if (desc.kind() == TaskKind::kAsr)
      Require(d.class_count == 0 || d.class_count <= kNumPhoneTemplates,
              "ASR class_count exceeds the phone inventory");
    if (d.noise_injection) CheckSnrGrid(d.injection_snr_db, "downstream.injection_snr_db");
  }

  const auto &g = c.gate;
  Require(g.items >= 1, "gate.items must be >= 1");
  CheckSnrGrid(g.snr_grid_db, "gate.snr_grid_db");
  Require(g.iterations >= 0 && g.lr > 0.0, "gate iterations/lr out of range");
  Require(g.grid_step > 0.0 && g.grid_step <= 1.0, "gate.grid_step must be in (0, 1]");
  Require(g.sweep_points >= 2, "gate.sweep_points must be >= 2");
  Require(std::isfinite(g.sweep_snr_db), "gate.sweep_snr_db must be finite");

  const auto &p = c.predictor;
  Require(p.targets == "optimized" || p.targets == "reference",
          "predictor.targets must be optimized or reference");
  Require(p.epochs >= 0 && p.lr > 0.0 && p.decay_gamma > 0.0 && p.decay_period >= 1,
          "predictor training settings out of range");
  Require(p.capacity >= kNumTasks && p.embed_dim >= 1,
          "predictor capacity must cover the task vocabulary");
  CheckHidden(p.hidden, "predictor.hidden");

  CheckSnrGrid(c.report.eval_snr_db, "report.eval_snr_db");
  Require(c.report.eval_items >= 1, "report.eval_items must be >= 1");
  return c;
}

json ExperimentConfig::ToJson() const {
  json ds = json::array();
  for (const auto &d : downstream)
    ds.push_back({{"task", d.task},
                  {"noise_injection", d.noise_injection},
                  {"epochs", d.epochs},
                  {"batch_size", d.batch_size},
                  {"lr", d.lr},
                  {"decay_gamma", d.decay_gamma},
                  {"decay_period", d.decay_period},
                  {"hidden", d.hidden},
                  {"class_count", d.class_count},
                  {"injection_snr_db", d.injection_snr_db}});
  return {
      {"format_version", kConfigFormatVersion},
      {"seed", seed},
      {"corpus",
       {{"train_items", corpus.train_items},
        {"held_out_items", corpus.held_out_items},
        {"duration_s", corpus.duration_s},
        {"sample_rate", corpus.sample_rate},
        {"snr_grid_db", corpus.snr_grid_db},
        {"noise_kinds", corpus.noise_kinds},
        {"speaker_classes", corpus.speaker_classes},
        {"export_wav_items", corpus.export_wav_items}}},
      {"enhancer",
       {{"loss", enhancer.loss},
        {"epochs", enhancer.epochs},
        {"batch_size", enhancer.batch_size},
        {"lr", enhancer.lr},
        {"decay_gamma", enhancer.decay_gamma},
        {"decay_period", enhancer.decay_period},
        {"hidden", enhancer.hidden},
        {"frame_length", enhancer.frame_length},
        {"hop", enhancer.hop},
        {"lambda_cm", enhancer.lambda_cm},
        {"lambda_ct", enhancer.lambda_ct},
        {"cm_downstream", enhancer.cm_downstream}}},
      {"downstream", ds},
      {"gate",
       {{"items", gate.items},
        {"snr_grid_db", gate.snr_grid_db},
        {"iterations", gate.iterations},
        {"lr", gate.lr},
        {"grid_step", gate.grid_step},
        {"sweep_points", gate.sweep_points},
        {"sweep_snr_db", gate.sweep_snr_db}}},
      {"predictor",
       {{"targets", predictor.targets},
        {"fixture", predictor.fixture},
        {"epochs", predictor.epochs},
        {"lr", predictor.lr},
        {"decay_gamma", predictor.decay_gamma},
        {"decay_period", predictor.decay_period},
        {"capacity", predictor.capacity},
        {"embed_dim", predictor.embed_dim},
        {"hidden", predictor.hidden}}},
      {"report",
       {{"eval_snr_db", report.eval_snr_db}, {"eval_items", report.eval_items}}}};
}

std::string ExperimentConfig::Hash() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(Fnv1a64(ToJson().dump())));
  return buf;
}

namespace {

CorpusConfig BaseCorpus(const ExperimentConfig &c) {
  CorpusConfig cc;
  cc.duration_s = c.corpus.duration_s;
  cc.sample_rate = c.corpus.sample_rate;
  cc.snr_grid_db = c.corpus.snr_grid_db;
  cc.noise_kinds.clear();
  for (const auto &k : c.corpus.noise_kinds) cc.noise_kinds.push_back(ParseNoiseKind(k));
  cc.class_count = c.corpus.speaker_classes;
  return cc;
}

void SetTask(CorpusConfig *cc, TaskKind kind, const ExperimentConfig &c) {
  cc->task = CorpusTask(kind);
  cc->class_count = kind == TaskKind::kAsr ? kNumPhoneTemplates
                                           : c.corpus.speaker_classes;
}

}  // namespace

CorpusConfig ExperimentConfig::EnhancerCorpus(bool held_out) const {
  CorpusConfig cc = BaseCorpus(*this);
  cc.task = TaskKind::kSe;
  cc.items = held_out ? corpus.held_out_items : corpus.train_items;
  cc.seed = DeriveSeed(seed, held_out ? 2 : 1);
  return cc;
}

CorpusConfig ExperimentConfig::TaskCorpus(const TaskDescriptor &d,
                                          bool held_out) const {
  CorpusConfig cc = BaseCorpus(*this);
  SetTask(&cc, d.kind(), *this);
  cc.items = held_out ? corpus.held_out_items : corpus.train_items;
  // Both twins of a task see the same corpus.
  cc.seed = DeriveSeed(seed, 100 + 2 * d.task_id + (held_out ? 1 : 0));
  return cc;
}

CorpusConfig ExperimentConfig::GateCorpus(const TaskDescriptor &d) const {
  CorpusConfig cc = BaseCorpus(*this);
  SetTask(&cc, d.kind(), *this);
  cc.items = gate.items;
  cc.snr_grid_db = gate.snr_grid_db;
  cc.seed = DeriveSeed(seed, 200 + d.task_id);
  return cc;
}

CorpusConfig ExperimentConfig::EvalCorpus(const TaskDescriptor &d,
                                          double snr_db) const {
  CorpusConfig cc = BaseCorpus(*this);
  SetTask(&cc, d.kind(), *this);
  cc.items = report.eval_items;
  cc.snr_grid_db = {snr_db};
  cc.seed = DeriveSeed(seed, 300 + d.task_id);
  return cc;
}

EnhancerConfig ExperimentConfig::EnhancerModel() const {
  EnhancerConfig e;
  e.stft.frame_length = enhancer.frame_length;
  e.stft.hop = enhancer.hop;
  e.hidden = enhancer.hidden;
  e.seed = DeriveSeed(seed, 10);
  return e;
}

EnhancerTrainOptions ExperimentConfig::EnhancerTraining() const {
  EnhancerTrainOptions o;
  o.loss = ParseEnhancerLoss(enhancer.loss);
  o.epochs = enhancer.epochs;
  o.batch_size = enhancer.batch_size;
  o.adam = Adam(enhancer.lr, enhancer.decay_gamma, enhancer.decay_period);
  o.loss_config.lambda_cm = enhancer.lambda_cm;
  o.loss_config.lambda_ct = enhancer.lambda_ct;
  o.seed = DeriveSeed(seed, 11);
  return o;
}

TaskDescriptor ExperimentConfig::Descriptor(const Downstream &d) const {
  TaskDescriptor desc{static_cast<int>(ParseTaskName(d.task)), d.noise_injection};
  desc.Validate();
  return desc;
}

DownstreamConfig ExperimentConfig::DownstreamTraining(const Downstream &d) const {
  DownstreamConfig dc;
  dc.descriptor = Descriptor(d);
  dc.class_count = d.class_count;
  dc.hidden = d.hidden;
  dc.epochs = d.epochs;
  dc.batch_size = d.batch_size;
  dc.adam = Adam(d.lr, d.decay_gamma, d.decay_period);
  dc.stft.frame_length = enhancer.frame_length;
  dc.stft.hop = enhancer.hop;
  dc.seed = DeriveSeed(seed, 20 + 2 * dc.descriptor.task_id +
                                 (d.noise_injection ? 1 : 0));
  dc.injection_snr_db = d.injection_snr_db;
  return dc;
}

GateOptions ExperimentConfig::GateOptimization() const {
  GateOptions g;
  g.iterations = gate.iterations;
  g.lr = gate.lr;
  return g;
}

PredictorConfig ExperimentConfig::PredictorModel() const {
  PredictorConfig p;
  p.capacity = predictor.capacity;
  p.embed_dim = predictor.embed_dim;
  p.hidden = predictor.hidden;
  p.seed = DeriveSeed(seed, 30);
  return p;
}

PredictorTrainOptions ExperimentConfig::PredictorTraining() const {
  PredictorTrainOptions o;
  o.epochs = predictor.epochs;
  o.adam = Adam(predictor.lr, predictor.decay_gamma, predictor.decay_period);
  return o;
}

}  // namespace plugin_se
