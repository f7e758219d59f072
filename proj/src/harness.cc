// src/harness.cc

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

#include "plugin-se/harness.h"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "plugin-se/errors.h"
#include "plugin-se/wave-io.h"

namespace plugin_se {

namespace fs = std::filesystem;
using nlohmann::json;

ExperimentConfig LoadConfig(const std::string &path) {
  return ExperimentConfig::FromJson(ReadJsonFile(path));
}

json ReadJsonFile(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw MissingArtifact(path);
  try {
    return json::parse(is);
  } catch (const json::parse_error &e) {
    throw SchemaError(path + ": " + e.what());
  }
}

void WriteJsonFile(const std::string &path, const json &j) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp);
    if (!os) throw InvalidArgument("cannot write " + path);
    os << j.dump(2) << '\n';
    if (!os) throw InvalidArgument("write failed for " + path);
  }
  fs::rename(tmp, path);
}

namespace {

void WriteTextFile(const std::string &path, const std::string &text) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp);
    if (!os) throw InvalidArgument("cannot write " + path);
    os << text;
  }
  fs::rename(tmp, path);
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double Seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

std::vector<TaskDescriptor> Descriptors(const ExperimentConfig &c) {
  std::vector<TaskDescriptor> out;
  for (const auto &d : c.downstream) out.push_back(c.Descriptor(d));
  return out;
}

const ExperimentConfig::Downstream &FindDownstream(const ExperimentConfig &c,
                                                   const TaskDescriptor &d) {
  for (const auto &e : c.downstream)
    if (c.Descriptor(e) == d) return e;
  throw InvalidArgument("config has no downstream entry for " + d.ToString());
}

json CorpusConfigJson(const CorpusConfig &cc) {
  json kinds = json::array();
  for (NoiseKind k : cc.noise_kinds) kinds.push_back(NoiseKindName(k));
  return {{"items", cc.items},
          {"duration_s", cc.duration_s},
          {"sample_rate", cc.sample_rate},
          {"snr_grid_db", cc.snr_grid_db},
          {"noise_kinds", kinds},
          {"seed", cc.seed},
          {"task", TaskName(cc.task)},
          {"class_count", cc.class_count}};
}

// Identifies the corpus-generating part of the config.
std::string CorpusHash(const ExperimentConfig &c) {
  json j = c.ToJson();
  json key = {{"seed", j["seed"]}, {"corpus", j["corpus"]},
              {"gate", {{"items", c.gate.items}, {"snr_grid_db", c.gate.snr_grid_db}}},
              {"report", j["report"]}};
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(Fnv1a64(key.dump())));
  return buf;
}

// Corpora are regenerated from the config on demand; the manifest written by
// synth records what they contain and guards against a changed config.
void RequireCorpus(const RunContext &ctx) {
  const ArtifactPaths paths(ctx.out_dir);
  const json m = ReadJsonFile(paths.CorpusManifest());
  if (m.value("corpus_hash", std::string()) != CorpusHash(ctx.config))
    throw MissingArtifact(paths.CorpusManifest() +
                          " (written for a different corpus config; rerun synth)");
}

MaskEnhancer LoadEnhancer(const ArtifactPaths &paths) {
  return MaskEnhancer::FromJson(ReadJsonFile(paths.Enhancer()));
}

DownstreamModel LoadDownstream(const ArtifactPaths &paths, const TaskDescriptor &d) {
  DownstreamModel m = DownstreamModel::FromJson(ReadJsonFile(paths.Downstream(d)));
  if (m.descriptor() != d)
    throw SchemaError(paths.Downstream(d) + ": holds a model for " +
                      m.descriptor().ToString());
  return m;
}

json Header(const RunContext &ctx, const std::string &stage) {
  return {{"stage", stage},
          {"format_version", kConfigFormatVersion},
          {"config_hash", ctx.config.Hash()},
          {"seed", ctx.config.seed}};
}

json Finish(const RunContext &ctx, const std::string &stage, json summary,
            const Stopwatch &sw) {
  summary["timing"] = {{"wall_clock_s", sw.Seconds()},
                       {"exec", ExecutionName(ctx.exec)},
                       {"threads", MaxThreads()}};
  WriteJsonFile(ArtifactPaths(ctx.out_dir).Stage(stage), summary);
  return summary;
}

std::string FormatDouble(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

// The gate corpus of each task is shared by both of its twins, so every
// corpus is enhanced once.
struct GateInputs {
  std::map<int, Batch> corpus;
  std::map<int, std::vector<Waveform>> enhanced;
};

GateInputs PrepareGateInputs(const RunContext &ctx, const MaskEnhancer &enhancer,
                             const std::vector<TaskDescriptor> &ds,
                             std::optional<double> snr_db) {
  GateInputs in;
  for (const TaskDescriptor &d : ds) {
    if (in.corpus.count(d.task_id)) continue;
    CorpusConfig cc = ctx.config.GateCorpus(d);
    if (snr_db) cc.snr_grid_db = {*snr_db};
    Batch b = MakeCorpus(cc);
    std::vector<Waveform> mixes;
    for (const auto &item : b.items) mixes.push_back(item.mix);
    in.enhanced[d.task_id] = EnhanceBatch(enhancer, mixes, ctx.exec);
    in.corpus[d.task_id] = std::move(b);
  }
  return in;
}

}  // namespace

// ---------------------------------------------------------------------------

json CmdSynth(const RunContext &ctx) {
  const Stopwatch sw;
  const ArtifactPaths paths(ctx.out_dir);
  const ExperimentConfig &c = ctx.config;

  std::vector<std::pair<std::string, CorpusConfig>> corpora = {
      {"enhancer_train", c.EnhancerCorpus(false)},
      {"enhancer_held_out", c.EnhancerCorpus(true)}};
  std::set<int> tasks;
  for (const TaskDescriptor &d : Descriptors(c)) {
    if (!tasks.insert(d.task_id).second) continue;
    std::string name = TaskName(d.kind());
    for (char &ch : name) ch = static_cast<char>(std::tolower(ch));
    corpora.push_back({name + "_train", c.TaskCorpus(d, false)});
    corpora.push_back({name + "_held_out", c.TaskCorpus(d, true)});
    corpora.push_back({name + "_gate", c.GateCorpus(d)});
    for (double snr : c.report.eval_snr_db)
      corpora.push_back({name + "_eval_" + FormatDouble(snr) + "db", c.EvalCorpus(d, snr)});
  }

  json list = json::array();
  for (const auto &[name, cc] : corpora) {
    const Batch b = MakeCorpus(cc);
    json items = json::array();
    double mean_snr = 0.0;
    for (size_t i = 0; i < b.size(); ++i) {
      const BatchItem &it = b.items[i];
      items.push_back({{"snr_db", it.snr_db},
                       {"noise_kind", NoiseKindName(it.noise_kind)},
                       {"label", it.label},
                       {"speech_seed", it.speech_seed},
                       {"noise_seed", it.noise_seed},
                       {"clean_rms", it.clean.Rms()},
                       {"mix_rms", it.mix.Rms()}});
      mean_snr += MeasureSnrDb(it.clean, it.noise) / b.size();
      if (static_cast<int>(i) < c.corpus.export_wav_items) {
        const std::string stem = paths.CorpusDir() + "/wav/" + name + "_" +
                                 std::to_string(i);
        fs::create_directories(paths.CorpusDir() + "/wav");
        // 16-bit PCM clips at full scale; exported copies are peak-limited
        // together so clean and mix keep their ratio.
        const double peak = std::max(it.mix.PeakAbs(), it.clean.PeakAbs());
        const double g = peak > 0.99 ? 0.99 / peak : 1.0;
        auto scaled = [g](const Waveform &w) {
          Waveform o = w;
          for (double &s : o.samples) s *= g;
          return o;
        };
        WriteWaveFile(stem + "_clean.wav", scaled(it.clean));
        WriteWaveFile(stem + "_mix.wav", scaled(it.mix));
      }
    }
    list.push_back({{"name", name},
                    {"config", CorpusConfigJson(cc)},
                    {"measured_mean_snr_db", mean_snr},
                    {"items", items}});
  }

  json manifest = Header(ctx, "synth");
  manifest["corpus_hash"] = CorpusHash(c);
  manifest["corpora"] = list;
  WriteJsonFile(paths.CorpusManifest(), manifest);

  json summary = Header(ctx, "synth");
  summary["corpus_hash"] = CorpusHash(c);
  json counts = json::object();
  for (const auto &[name, cc] : corpora) counts[name] = cc.items;
  summary["corpora"] = counts;
  return Finish(ctx, "synth", summary, sw);
}

json CmdTrainEnhancer(const RunContext &ctx) {
  const Stopwatch sw;
  RequireCorpus(ctx);
  const ArtifactPaths paths(ctx.out_dir);
  const ExperimentConfig &c = ctx.config;

  EnhancerTrainOptions opts = c.EnhancerTraining();
  opts.exec = ctx.exec;
  std::optional<DownstreamModel> cm_model;
  if (opts.loss == EnhancerLoss::kCm)
    cm_model = LoadDownstream(paths, ParseDescriptor(c.enhancer.cm_downstream));

  const Batch train = MakeCorpus(c.EnhancerCorpus(false));
  const Batch held = MakeCorpus(c.EnhancerCorpus(true));
  const EnhancerTrainResult r =
      TrainEnhancer(MaskEnhancer::Create(c.EnhancerModel()), train, opts,
                    cm_model ? &*cm_model : nullptr);
  json model = r.enhancer.ToJson();
  WriteJsonFile(paths.Enhancer(), model);

  const EnhancementMetrics m = EvaluateEnhancer(r.enhancer, held, ctx.exec);
  json curve = json::array();
  for (const CurvePoint &p : r.curve) curve.push_back({p.epoch, p.loss});
  json summary = Header(ctx, "train-enhancer");
  summary["loss"] = c.enhancer.loss;
  summary["curve"] = curve;
  summary["held_out"] = {{"input_si_sdr_db", m.input_si_sdr_db},
                         {"output_si_sdr_db", m.output_si_sdr_db},
                         {"output_si_sar_db", m.output_si_sar_db},
                         {"artifact_energy", m.artifact_energy},
                         {"relative_artifact_energy", m.relative_artifact_energy}};
  summary["checkpoint"] = paths.Enhancer();
  return Finish(ctx, "train-enhancer", summary, sw);
}

json CmdTrainDownstream(const RunContext &ctx) {
  const Stopwatch sw;
  RequireCorpus(ctx);
  const ArtifactPaths paths(ctx.out_dir);
  const ExperimentConfig &c = ctx.config;

  json models = json::array();
  for (const auto &entry : c.downstream) {
    const TaskDescriptor d = c.Descriptor(entry);
    json row = {{"descriptor", d.ToString()}, {"checkpoint", paths.Downstream(d)}};
    if (d.kind() == TaskKind::kSe) {
      WriteJsonFile(paths.Downstream(d),
                    DownstreamModel::Identity(d.noise_injection).ToJson());
      row["identity"] = true;
      models.push_back(row);
      continue;
    }
    DownstreamConfig dc = c.DownstreamTraining(entry);
    dc.exec = ctx.exec;
    const Batch train = MakeCorpus(c.TaskCorpus(d, false));
    const Batch held = MakeCorpus(c.TaskCorpus(d, true));
    const DownstreamTrainResult r = TrainDownstream(dc, train);
    WriteJsonFile(paths.Downstream(d), r.model.ToJson());
    json curve = json::array();
    for (const auto &[e, l] : r.curve) curve.push_back({e, l});
    row["curve"] = curve;
    row["train_clean_accuracy"] = r.clean_accuracy;
    row["held_out_clean_accuracy"] =
        Evaluate(r.model, held, Condition::kClean, nullptr, 0.0, ctx.exec).accuracy;
    row["held_out_noisy_accuracy"] =
        Evaluate(r.model, held, Condition::kNoisy, nullptr, 0.0, ctx.exec).accuracy;
    models.push_back(row);
  }
  json summary = Header(ctx, "train-downstream");
  summary["models"] = models;
  return Finish(ctx, "train-downstream", summary, sw);
}

json CmdOptimizeGate(const RunContext &ctx) {
  const Stopwatch sw;
  RequireCorpus(ctx);
  const ArtifactPaths paths(ctx.out_dir);
  const ExperimentConfig &c = ctx.config;
  const MaskEnhancer enhancer = LoadEnhancer(paths);
  const std::vector<TaskDescriptor> ds = Descriptors(c);
  std::map<TaskDescriptor, DownstreamModel> models;
  for (const TaskDescriptor &d : ds) models[d] = LoadDownstream(paths, d);

  const GateInputs in = PrepareGateInputs(ctx, enhancer, ds, std::nullopt);
  GateTargetTable table;
  json rows = json::array();
  for (const TaskDescriptor &d : ds) {
    const GateObjective objective(in.enhanced.at(d.task_id), models.at(d),
                                  in.corpus.at(d.task_id), ctx.exec);
    const GateResult opt = OptimizeGate(objective, c.GateOptimization());
    const GateResult grid = GridSearchGate(objective, c.gate.grid_step);
    table.Add({d, opt.w_star, "optimized", "desk-scale " + d.ToString()});

    std::ostringstream csv;
    csv << "iter,w,loss\n";
    csv.precision(10);
    for (const GateTracePoint &p : opt.trace)
      csv << p.iter << ',' << p.w << ',' << p.loss << '\n';
    WriteTextFile(paths.GateTrace(d), csv.str());

    rows.push_back({{"descriptor", d.ToString()},
                    {"w_star", opt.w_star.value()},
                    {"loss", opt.loss},
                    {"w_grid", grid.w_star.value()},
                    {"grid_loss", grid.loss},
                    {"abs_diff", std::abs(opt.w_star.value() - grid.w_star.value())},
                    {"trace", paths.GateTrace(d)}});
  }
  WriteJsonFile(paths.GateTargets(), table.ToJson());

  json summary = Header(ctx, "optimize-gate");
  summary["targets"] = rows;
  summary["table"] = paths.GateTargets();
  return Finish(ctx, "optimize-gate", summary, sw);
}

json CmdSweep(const RunContext &ctx) {
  const Stopwatch sw;
  RequireCorpus(ctx);
  const ArtifactPaths paths(ctx.out_dir);
  const ExperimentConfig &c = ctx.config;
  const MaskEnhancer enhancer = LoadEnhancer(paths);
  const std::vector<TaskDescriptor> ds = Descriptors(c);
  const GateInputs in = PrepareGateInputs(ctx, enhancer, ds, c.gate.sweep_snr_db);
  const std::vector<double> grid = UniformGrid(c.gate.sweep_points);

  json curves = json::array();
  for (const TaskDescriptor &d : ds) {
    const DownstreamModel model = LoadDownstream(paths, d);
    const GateObjective objective(in.enhanced.at(d.task_id), model,
                                  in.corpus.at(d.task_id), ctx.exec);
    const GateSweepCurve curve = SweepGate(objective, grid);
    std::ostringstream csv;
    WriteSweepCsv(curve, csv);
    WriteTextFile(paths.Sweep(d), csv.str());
    json pts = json::array();
    for (const SweepPoint &p : curve.points)
      pts.push_back({{"w", p.w.value()},
                     {"oir_ratio", p.oir.ratio},
                     {"downstream_loss", p.downstream_loss},
                     {"accuracy", p.accuracy}});
    curves.push_back({{"descriptor", d.ToString()}, {"csv", paths.Sweep(d)}, {"points", pts}});
  }
  json summary = Header(ctx, "sweep");
  summary["snr_db"] = c.gate.sweep_snr_db;
  summary["curves"] = curves;
  return Finish(ctx, "sweep", summary, sw);
}

json CmdTrainPredictor(const RunContext &ctx) {
  const Stopwatch sw;
  const ArtifactPaths paths(ctx.out_dir);
  const ExperimentConfig &c = ctx.config;

  std::string source;
  GateTargetTable table;
  if (c.predictor.targets == "reference") {
    source = c.predictor.fixture.empty() ? "built-in table" : c.predictor.fixture;
    table = GateTargetTable::FromJson(c.predictor.fixture.empty()
                                          ? ReferenceGateTargetsJson()
                                          : ReadJsonFile(c.predictor.fixture));
  } else {
    source = paths.GateTargets();
    table = GateTargetTable::FromJson(ReadJsonFile(paths.GateTargets()));
  }
  if (table.size() == 0) throw InvalidArgument("gate target table is empty");

  const PredictorTrainResult r = TrainPredictor(
      WeightPredictor::Create(c.PredictorModel()), table, c.PredictorTraining());
  WriteJsonFile(paths.Predictor(), r.predictor.ToJson());

  json rows = json::array();
  for (const GateTarget &t : table.rows()) {
    const double p = r.predictor.PredictValue(t.descriptor);
    rows.push_back({{"descriptor", t.descriptor.ToString()},
                    {"target", t.w.value()},
                    {"predicted", p},
                    {"abs_error", std::abs(p - t.w.value())}});
  }
  json summary = Header(ctx, "train-predictor");
  summary["targets_source"] = source;
  summary["source_rows"] = table.source_rows();
  summary["final_mse"] = r.final_mse;
  summary["rows"] = rows;
  summary["checkpoint"] = paths.Predictor();
  return Finish(ctx, "train-predictor", summary, sw);
}

json CmdInfer(const RunContext &ctx, const InferRequest &req) {
  const Stopwatch sw;
  const ArtifactPaths paths(ctx.out_dir);
  const ExperimentConfig &c = ctx.config;
  const TaskDescriptor d = ParseDescriptor(req.task);
  FindDownstream(c, d);

  const MaskEnhancer enhancer = LoadEnhancer(paths);
  const DownstreamModel model = LoadDownstream(paths, d);
  const WeightPredictor predictor =
      req.force_w ? WeightPredictor::Constant(GateWeight(*req.force_w).value(),
                                              c.PredictorModel())
                  : WeightPredictor::FromJson(ReadJsonFile(paths.Predictor()));

  std::optional<BatchItem> reference;
  Waveform x;
  if (!req.input_wav.empty()) {
    x = ReadWaveFile(req.input_wav);
    if (x.sample_rate != c.corpus.sample_rate)
      throw InvalidArgument(req.input_wav + ": sample rate " +
                            std::to_string(x.sample_rate) + " differs from " +
                            std::to_string(c.corpus.sample_rate));
  } else {
    RequireCorpus(ctx);
    CorpusConfig cc = c.EvalCorpus(d, req.snr_db);
    cc.items = 1;
    reference = MakeCorpus(cc).items.front();
    x = reference->mix;
  }

  const InferenceResult r = RunInference(x, d, enhancer, model, predictor);
  const std::string dir = paths.InferDir(d);
  fs::create_directories(dir);
  const double peak = std::max({x.PeakAbs(), r.s_hat.PeakAbs(), r.s_mix.PeakAbs()});
  const double g = peak > 0.99 ? 0.99 / peak : 1.0;
  auto scaled = [g](const Waveform &w) {
    Waveform o = w;
    for (double &s : o.samples) s *= g;
    return o;
  };
  WriteWaveFile(dir + "/input.wav", scaled(x));
  WriteWaveFile(dir + "/enhanced.wav", scaled(r.s_hat));
  WriteWaveFile(dir + "/gated.wav", scaled(r.s_mix));

  json summary = Header(ctx, "infer");
  summary["descriptor"] = d.ToString();
  summary["w_hat"] = r.w_hat.value();
  summary["forced"] = req.force_w.has_value();
  summary["input"] = req.input_wav.empty() ? "synthetic" : req.input_wav;
  summary["outputs"] = {dir + "/enhanced.wav", dir + "/gated.wav"};
  if (r.v_x.size() > 0) {
    json argmax = json::array();
    for (Eigen::Index m = 0; m < r.v_x.cols(); ++m) {
      Eigen::Index k;
      r.v_x.col(m).maxCoeff(&k);
      argmax.push_back(static_cast<int>(k));
    }
    summary["frame_argmax"] = argmax;
  }
  if (reference) {
    summary["snr_db"] = req.snr_db;
    const double clamp = LossConfig().db_clamp;
    summary["si_sdr_db"] = {
        {"input", SiSdrTerm(x.view(), reference->clean.view(), clamp, {}).raw_db},
        {"enhanced", SiSdrTerm(r.s_hat.view(), reference->clean.view(), clamp, {}).raw_db},
        {"gated", SiSdrTerm(r.s_mix.view(), reference->clean.view(), clamp, {}).raw_db}};
    if (!model.is_identity()) {
      const std::vector<int> t = model.FrameTargets(*reference);
      summary["frame_accuracy"] = FrameAccuracy(r.v_x, t);
    }
  }
  WriteJsonFile(dir + "/metrics.json", summary);
  return Finish(ctx, "infer", summary, sw);
}

json CmdReport(const RunContext &ctx) {
  const Stopwatch sw;
  RequireCorpus(ctx);
  const ArtifactPaths paths(ctx.out_dir);
  const ExperimentConfig &c = ctx.config;
  const MaskEnhancer enhancer = LoadEnhancer(paths);
  const WeightPredictor predictor =
      WeightPredictor::FromJson(ReadJsonFile(paths.Predictor()));
  const GateTargetTable targets =
      GateTargetTable::FromJson(ReadJsonFile(paths.GateTargets()));
  const std::vector<TaskDescriptor> ds = Descriptors(c);

  // Gate targets and the ordering flag per task with both twins.
  json target_rows = json::array();
  for (const GateTarget &t : targets.rows())
    target_rows.push_back({{"descriptor", t.descriptor.ToString()},
                           {"w_star", t.w.value()},
                           {"w_hat", predictor.PredictValue(t.descriptor)}});
  json ordering = json::array();
  for (int id = 0; id < kNumTasks; ++id) {
    const GateTarget *ni = targets.Find({id, true});
    const GateTarget *clean = targets.Find({id, false});
    if (!ni || !clean) continue;
    ordering.push_back({{"task", TaskName(static_cast<TaskKind>(id))},
                        {"w_star_ni", ni->w.value()},
                        {"w_star_clean", clean->w.value()},
                        {"ni_above_clean", ni->w.value() > clean->w.value()}});
  }

  std::ostringstream csv;
  csv.precision(10);
  csv << "descriptor,snr_db,w_hat,noisy,enhanced,predicted,metric\n";
  json evals = json::array();
  for (const TaskDescriptor &d : ds) {
    const DownstreamModel model = LoadDownstream(paths, d);
    const double w_hat = predictor.Predict(d).value();
    for (double snr : c.report.eval_snr_db) {
      const Batch b = MakeCorpus(c.EvalCorpus(d, snr));
      const EvalResult noisy = Evaluate(model, b, Condition::kNoisy, nullptr, 0.0, ctx.exec);
      const EvalResult enh = Evaluate(model, b, Condition::kEnhanced, &enhancer, 0.0, ctx.exec);
      const EvalResult pred =
          Evaluate(model, b, Condition::kEnhanced, &enhancer, w_hat, ctx.exec);
      const std::string metric = model.is_identity() ? "si_sdr_db" : "frame_accuracy";
      evals.push_back({{"descriptor", d.ToString()},
                       {"snr_db", snr},
                       {"w_hat", w_hat},
                       {"metric", metric},
                       {"noisy", noisy.accuracy},
                       {"enhanced", enh.accuracy},
                       {"predicted", pred.accuracy},
                       {"kl_noisy", noisy.mean_kl_to_clean},
                       {"kl_enhanced", enh.mean_kl_to_clean},
                       {"kl_predicted", pred.mean_kl_to_clean}});
      csv << d.ToString() << ',' << snr << ',' << w_hat << ',' << noisy.accuracy << ','
          << enh.accuracy << ',' << pred.accuracy << ',' << metric << '\n';
    }
  }
  WriteTextFile(paths.ReportCsv(), csv.str());

  // Per-stage metrics and wall-clock from the stage summaries on disk.
  json stages = json::object();
  json timing = json::object();
  for (const char *s : {"synth", "train-enhancer", "train-downstream", "optimize-gate",
                        "sweep", "train-predictor"}) {
    if (!fs::exists(paths.Stage(s))) continue;
    json j = ReadJsonFile(paths.Stage(s));
    if (j.contains("timing")) timing[s] = j["timing"]["wall_clock_s"];
    j.erase("timing");
    stages[s] = j;
  }

  json seeds = {{"base", c.seed},
                {"enhancer_init", c.EnhancerModel().seed},
                {"enhancer_training", c.EnhancerTraining().seed},
                {"predictor_init", c.PredictorModel().seed}};
  for (const auto &e : c.downstream)
    seeds["downstream_" + DescriptorSlug(c.Descriptor(e))] = c.DownstreamTraining(e).seed;

  json report = Header(ctx, "report");
  report["config"] = c.ToJson();
  report["seeds"] = seeds;
  report["gate_targets"] = target_rows;
  report["ordering"] = ordering;
  report["evaluation"] = evals;
  report["stages"] = stages;
  report["timing"] = timing;
  WriteJsonFile(paths.ReportJson(), report);

  json summary = Header(ctx, "report");
  summary["report"] = paths.ReportJson();
  summary["csv"] = paths.ReportCsv();
  summary["ordering"] = ordering;
  return Finish(ctx, "report", summary, sw);
}

// ---------------------------------------------------------------------------

int ExitCodeFor(const std::exception &e) {
  if (dynamic_cast<const SchemaError *>(&e)) return kExitSchema;
  if (dynamic_cast<const MissingArtifact *>(&e)) return kExitMissingArtifact;
  if (dynamic_cast<const NumericError *>(&e)) return kExitNumeric;
  if (dynamic_cast<const InvalidArgument *>(&e)) return kExitInvalidArgument;
  return kExitInternal;
}

json ErrorJson(const std::exception &e) {
  const int code = ExitCodeFor(e);
  const char *kind = "internal";
  switch (code) {
    case kExitSchema: kind = "schema"; break;
    case kExitMissingArtifact: kind = "missing_artifact"; break;
    case kExitNumeric: kind = "numeric"; break;
    case kExitInvalidArgument: kind = "invalid_argument"; break;
    default: break;
  }
  json err = {{"kind", kind}, {"message", e.what()}, {"exit_code", code}};
  if (const auto *m = dynamic_cast<const MissingArtifact *>(&e)) err["path"] = m->path();
  if (const auto *g = dynamic_cast<const GateNumericError *>(&e))
    err["trace_points"] = g->trace().size();
  return {{"error", err}};
}

}  // namespace plugin_se
