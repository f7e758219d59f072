// bench/kernels-bench.cc

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

// Serial reference vs OpenMP path for the data-parallel kernels. Each
// benchmark takes the execution mode as its argument (0 serial, 1 parallel).
//
//   kernels-bench --benchmark_counters_tabular=true

#include <benchmark/benchmark.h>

#include "plugin-se/downstream.h"
#include "plugin-se/enhancer.h"
#include "plugin-se/gate.h"
#include "plugin-se/kernels.h"
#include "plugin-se/signal-core.h"

namespace plugin_se {
namespace {

Execution ExecOf(const benchmark::State &state) {
  return state.range(0) == 0 ? Execution::kSerial : Execution::kParallel;
}

const Batch &SvCorpus() {
  static const Batch b = [] {
    CorpusConfig c;
    c.items = 32;
    c.task = TaskKind::kSv;
    c.seed = 3;
    c.snr_grid_db = {-5};
    return MakeCorpus(c);
  }();
  return b;
}

const MaskEnhancer &Enhancer() {
  static const MaskEnhancer e = MaskEnhancer::Create(EnhancerConfig{});
  return e;
}

const DownstreamModel &SvModel() {
  static const DownstreamModel m = [] {
    DownstreamConfig d;
    d.descriptor = {static_cast<int>(TaskKind::kSv), false};
    d.epochs = 3;
    return TrainDownstream(d, SvCorpus()).model;
  }();
  return m;
}

void Label(benchmark::State &state) {
  state.SetLabel(ExecutionName(ExecOf(state)) + ", " + std::to_string(MaxThreads()) +
                 " threads");
}

void BM_EnhanceBatch(benchmark::State &state) {
  std::vector<Waveform> mixes;
  for (const auto &item : SvCorpus().items) mixes.push_back(item.mix);
  for (auto _ : state)
    benchmark::DoNotOptimize(EnhanceBatch(Enhancer(), mixes, ExecOf(state)));
  state.SetItemsProcessed(state.iterations() * mixes.size());
  Label(state);
}
BENCHMARK(BM_EnhanceBatch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_TrainEnhancerEpoch(benchmark::State &state) {
  EnhancerTrainOptions o;
  o.epochs = 1;
  o.exec = ExecOf(state);
  for (auto _ : state)
    benchmark::DoNotOptimize(TrainEnhancer(Enhancer(), SvCorpus(), o));
  Label(state);
}
BENCHMARK(BM_TrainEnhancerEpoch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_GateValueAndGradient(benchmark::State &state) {
  const GateObjective objective(Enhancer(), SvModel(), SvCorpus(), ExecOf(state));
  double w = 0.3, g = 0.0;
  for (auto _ : state) benchmark::DoNotOptimize(objective.ValueAndGradient(w, &g));
  Label(state);
}
BENCHMARK(BM_GateValueAndGradient)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_EvaluateEnhanced(benchmark::State &state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(Evaluate(SvModel(), SvCorpus(), Condition::kEnhanced,
                                      &Enhancer(), 0.3, ExecOf(state)));
  Label(state);
}
BENCHMARK(BM_EvaluateEnhanced)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace plugin_se

BENCHMARK_MAIN();
