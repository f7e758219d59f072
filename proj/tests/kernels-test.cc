// tests/kernels-test.cc

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

#include <atomic>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "plugin-se/downstream.h"
#include "plugin-se/enhancer.h"
#include "plugin-se/errors.h"
#include "plugin-se/gate.h"
#include "plugin-se/kernels.h"
#include "plugin-se/signal-core.h"

namespace plugin_se {
namespace {

// The host may expose a single core; force a real team so the parallel
// path actually interleaves.
class KernelsTest : public ::testing::Test {
 protected:
  void SetUp() override {
#ifdef _OPENMP
    omp_set_num_threads(4);
#endif
  }
};

Batch SmallCorpus(TaskKind task, uint64_t seed, int items = 12) {
  CorpusConfig c;
  c.items = items;
  c.task = task;
  c.seed = seed;
  return MakeCorpus(c);
}

TEST(Execution, Names) {
  EXPECT_EQ(ExecutionName(Execution::kSerial), "serial");
  EXPECT_EQ(ExecutionName(Execution::kParallel), "parallel");
  EXPECT_EQ(ParseExecution("serial"), Execution::kSerial);
  EXPECT_EQ(ParseExecution("parallel"), Execution::kParallel);
  EXPECT_THROW(ParseExecution("gpu"), InvalidArgument);
}

TEST_F(KernelsTest, ForEachIndexVisitsEveryIndexOnce) {
  std::vector<std::atomic<int>> hits(1000);
  ForEachIndex(hits.size(), Execution::kParallel, [&](size_t i) { hits[i]++; });
  for (const auto &h : hits) EXPECT_EQ(h.load(), 1);
}

TEST_F(KernelsTest, ForEachIndexRethrows) {
  EXPECT_THROW(ForEachIndex(100, Execution::kParallel,
                            [](size_t i) {
                              if (i == 37) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
}

TEST_F(KernelsTest, EnhanceBatchBitIdentical) {
  const Batch b = SmallCorpus(TaskKind::kSe, 5);
  EnhancerConfig ec;
  ec.seed = 5;
  const MaskEnhancer e = MaskEnhancer::Create(ec);
  std::vector<Waveform> mixes;
  for (const auto &it : b.items) mixes.push_back(it.mix);
  const auto s = EnhanceBatch(e, mixes, Execution::kSerial);
  const auto p = EnhanceBatch(e, mixes, Execution::kParallel);
  ASSERT_EQ(s.size(), p.size());
  for (size_t i = 0; i < s.size(); ++i) EXPECT_EQ(s[i].samples, p[i].samples);
}

TEST_F(KernelsTest, TrainingBitIdentical) {
  const Batch b = SmallCorpus(TaskKind::kSe, 6, 16);
  EnhancerConfig ec;
  ec.hidden = {32};
  const MaskEnhancer init = MaskEnhancer::Create(ec);
  for (EnhancerLoss loss : {EnhancerLoss::kSiSdr, EnhancerLoss::kCt}) {
    EnhancerTrainOptions o;
    o.loss = loss;
    o.epochs = 2;
    o.batch_size = 8;
    o.exec = Execution::kSerial;
    const EnhancerTrainResult rs = TrainEnhancer(init, b, o);
    o.exec = Execution::kParallel;
    const EnhancerTrainResult rp = TrainEnhancer(init, b, o);
    EXPECT_EQ(rs.enhancer.net().Parameters(), rp.enhancer.net().Parameters());
    ASSERT_EQ(rs.curve.size(), rp.curve.size());
    for (size_t i = 0; i < rs.curve.size(); ++i)
      EXPECT_EQ(rs.curve[i].loss, rp.curve[i].loss);
  }

  const Batch sv = SmallCorpus(TaskKind::kSv, 7, 16);
  DownstreamConfig dc;
  dc.descriptor = TaskDescriptor{1, true};
  dc.epochs = 2;
  dc.exec = Execution::kSerial;
  const DownstreamTrainResult ds = TrainDownstream(dc, sv);
  dc.exec = Execution::kParallel;
  const DownstreamTrainResult dp = TrainDownstream(dc, sv);
  EXPECT_EQ(ds.model.net().Parameters(), dp.model.net().Parameters());
  EXPECT_EQ(ds.clean_accuracy, dp.clean_accuracy);

  // The CM loss goes through the downstream model.
  EnhancerTrainOptions o;
  o.loss = EnhancerLoss::kCm;
  o.epochs = 1;
  o.batch_size = 8;
  o.exec = Execution::kSerial;
  const EnhancerTrainResult cs = TrainEnhancer(init, sv, o, &ds.model);
  o.exec = Execution::kParallel;
  const EnhancerTrainResult cp = TrainEnhancer(init, sv, o, &ds.model);
  EXPECT_EQ(cs.enhancer.net().Parameters(), cp.enhancer.net().Parameters());
}

TEST_F(KernelsTest, GateAndEvaluationBitIdentical) {
  const Batch sv = SmallCorpus(TaskKind::kSv, 8, 16);
  DownstreamConfig dc;
  dc.descriptor = TaskDescriptor{1, false};
  dc.epochs = 3;
  const DownstreamModel m = TrainDownstream(dc, sv).model;
  EnhancerConfig ec;
  ec.hidden = {32};
  const MaskEnhancer e = MaskEnhancer::Create(ec);
  const Batch gate = RemixAtSnr(sv, -5.0);

  const GateObjective os(e, m, gate, Execution::kSerial);
  const GateObjective op(e, m, gate, Execution::kParallel);
  for (double w : {0.0, 0.13, 0.5, 0.87, 1.0}) {
    double gs = 0.0, gp = 0.0;
    EXPECT_EQ(os.ValueAndGradient(w, &gs), op.ValueAndGradient(w, &gp));
    EXPECT_EQ(gs, gp);
    const SweepPoint ms = os.Measure(w);
    const SweepPoint mp = op.Measure(w);
    EXPECT_EQ(ms.downstream_loss, mp.downstream_loss);
    EXPECT_EQ(ms.accuracy, mp.accuracy);
  }
  GateOptions go;
  go.iterations = 40;
  EXPECT_EQ(OptimizeGate(os, go).w_star.value(), OptimizeGate(op, go).w_star.value());

  for (Condition c : {Condition::kClean, Condition::kNoisy, Condition::kEnhanced}) {
    const EvalResult rs = Evaluate(m, gate, c, &e, 0.3, Execution::kSerial);
    const EvalResult rp = Evaluate(m, gate, c, &e, 0.3, Execution::kParallel);
    EXPECT_EQ(rs.accuracy, rp.accuracy);
    EXPECT_EQ(rs.mean_kl_to_clean, rp.mean_kl_to_clean);
  }
  const EnhancementMetrics es = EvaluateEnhancer(e, gate, Execution::kSerial);
  const EnhancementMetrics ep = EvaluateEnhancer(e, gate, Execution::kParallel);
  EXPECT_EQ(es.output_si_sdr_db, ep.output_si_sdr_db);
  EXPECT_EQ(es.artifact_energy, ep.artifact_energy);
}

}  // namespace
}  // namespace plugin_se
