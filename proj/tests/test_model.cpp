#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "dualturn/model.hpp"
#include "dualturn/synth.hpp"

using namespace dualturn;

static ActivityTimeline small_session(uint64_t seed = 1, int len = 120) {
  GeneratorConfig cfg;
  cfg.seed = seed;
  cfg.session_len_frames = len;
  return generate(cfg).timeline;
}

TEST_CASE("focal loss closed forms") {
  // (p=0.5, y=1, g=2, a=0.25) -> 0.25 * 0.25 * ln 2
  CHECK(focal_loss(0.5, 1.0, 2.0, 0.25) ==
        doctest::Approx(0.25 * 0.25 * std::log(2.0)).epsilon(1e-12));
  // (g=0, a=0.5, p=0.5, y=0.5) -> 0.5 * ln 2
  CHECK(focal_loss(0.5, 0.5, 0.0, 0.5) ==
        doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-12));
  // At g=0, a=0.5 focal is half of BCE for any (p, y).
  for (double p : {0.1, 0.42, 0.9})
    for (double y : {0.0, 0.3, 1.0})
      CHECK(focal_loss(p, y, 0.0, 0.5) ==
            doctest::Approx(0.5 * bce_loss(p, y)).epsilon(1e-12));
  // Hard correct prediction drives the loss toward 0.
  CHECK(focal_loss(1.0 - 1e-9, 1.0, 2.0, 0.25) < 1e-8);
  CHECK_THROWS_AS(focal_loss(0.0, 1.0, 2.0, 0.25), std::invalid_argument);
}

TEST_CASE("features: all-silence gives zero decay and saturated timers") {
  FeatureExtractor fx;
  auto row = fx.step(0, 0);
  for (int c = 0; c < 2; ++c) {
    CHECK(row[c * 6 + 0] == 0.0);
    CHECK(row[c * 6 + 1] == 0.0);
    CHECK(row[c * 6 + 4] == 1.0);  // never-seen onset -> saturated
    CHECK(row[c * 6 + 5] == 1.0);
  }
}

TEST_CASE("features: channel swap swaps feature blocks") {
  auto t = small_session(2);
  auto f = featurize(t);
  auto fs = featurize(t.swapped());
  for (size_t i = 0; i < f.frames; ++i)
    for (int d = 0; d < 6; ++d) {
      CHECK(f.row(i)[d] == fs.row(i)[6 + d]);
      CHECK(f.row(i)[6 + d] == fs.row(i)[d]);
    }
}

TEST_CASE("model reports 12 heads and 18 signal scalars") {
  SequenceModel m;
  CHECK(m.num_heads() == 12);
  CHECK(m.signal_outputs_per_frame_pair() == 18);
}

TEST_CASE("zero-initialized parameters give estimates of 0.5") {
  SequenceModel m;  // params default to zero
  auto t = small_session(3, 30);
  auto est = m.forward(featurize(t));
  for (size_t i = 0; i < est.frames(); ++i) {
    CHECK(est.a.eot[i] == doctest::Approx(0.5));
    CHECK(est.b.vad[i] == doctest::Approx(0.5));
  }
}

TEST_CASE("causality: prefix outputs match full-input outputs") {
  SequenceModel m;
  m.init_params(5);
  auto t = small_session(4, 90);
  auto full = m.forward(featurize(t));
  ActivityTimeline prefix = t;
  prefix.a.resize(45);
  prefix.b.resize(45);
  auto part = m.forward(featurize(prefix));
  for (size_t i = 0; i < 45; ++i) {
    CHECK(part.a.eot[i] == full.a.eot[i]);
    CHECK(part.b.fvad[2][i] == full.b.fvad[2][i]);
  }
}

TEST_CASE("outputs stay in (0,1)") {
  SequenceModel m;
  m.init_params(6);
  auto est = m.forward(featurize(small_session(6)));
  for (double v : est.a.bc) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("checkpoint serialization round-trips bitwise") {
  SequenceModel m;
  m.init_params(8);
  m.set_stage(TrainingStage::Stage1);
  auto m2 = SequenceModel::from_json(m.to_json());
  CHECK(m2.params() == m.params());
  CHECK(m2.stage() == TrainingStage::Stage1);
  CHECK(m2.to_json() == m.to_json());
}

TEST_CASE("gradient check: stage-2 focal+BCE loss vs finite differences") {
  ModelConfig mc;
  mc.proj_dim = 4;
  mc.hidden = 10;
  mc.head_hidden = 5;
  SequenceModel m(mc);
  m.init_params(7);
  auto sess = prepare_session(small_session(7, 60), {});
  TrainConfig tc;
  CHECK(gradient_check(m, sess, tc, 120, 21) < 1e-4);
  // Focal-head-only emphasis: zero dense weights, same bound.
  TrainConfig tc2;
  tc2.signal_weights = {1, 1, 1, 1, 0, 0};
  CHECK(gradient_check(m, sess, tc2, 120, 22) < 1e-4);
}

TEST_CASE("gradient check: stage-1 generative loss") {
  ModelConfig mc;
  mc.proj_dim = 4;
  mc.hidden = 10;
  mc.head_hidden = 5;
  SequenceModel m(mc);
  m.init_params(9);
  auto sess = prepare_session(small_session(9, 60), {});
  TrainConfig tc;
  CHECK(gradient_check_stage1(m, sess, tc, 120, 23) < 1e-4);
}

TEST_CASE("stage-1 training reduces loss and is deterministic") {
  ModelConfig mc;
  mc.proj_dim = 4;
  mc.hidden = 16;
  mc.head_hidden = 4;
  TrainConfig tc;
  tc.max_epochs_stage1 = 6;
  tc.seed = 11;
  std::vector<TrainingSession> corpus;
  for (uint64_t s = 0; s < 3; ++s)
    corpus.push_back(prepare_session(small_session(20 + s, 150), {}));
  SequenceModel m1(mc), m2(mc);
  m1.init_params(tc.seed);
  m2.init_params(tc.seed);
  auto r1 = pretrain_stage1(m1, corpus, tc);
  auto r2 = pretrain_stage1(m2, corpus, tc);
  CHECK(r1.best_loss < r1.initial_loss);
  CHECK(m1.params() == m2.params());  // determinism, bitwise
  CHECK(m1.stage() == TrainingStage::Stage1);
}

TEST_CASE("stage-2 training runs, reduces loss, tags the checkpoint") {
  ModelConfig mc;
  mc.proj_dim = 4;
  mc.hidden = 16;
  mc.head_hidden = 4;
  TrainConfig tc;
  tc.max_epochs_stage1 = 3;
  tc.max_epochs_stage2 = 5;
  tc.seed = 13;
  std::vector<TrainingSession> corpus;
  for (uint64_t s = 0; s < 3; ++s)
    corpus.push_back(prepare_session(small_session(30 + s, 150), {}));
  SequenceModel m(mc);
  m.init_params(tc.seed);
  pretrain_stage1(m, corpus, tc);
  auto r = finetune_stage2(m, corpus, tc);
  CHECK(r.best_loss < r.initial_loss);
  CHECK(m.stage() == TrainingStage::Stage2);
}

TEST_CASE("label/feature length mismatch is rejected") {
  SequenceModel m;
  m.init_params(1);
  auto sess = prepare_session(small_session(1, 60), {});
  sess.labels.a.eot.resize(10);
  sess.labels.a.hold.resize(10);
  sess.labels.a.vad.resize(10);
  TrainConfig tc;
  tc.max_epochs_stage2 = 1;
  std::vector<TrainingSession> corpus = {sess};
  CHECK_THROWS(finetune_stage2(m, corpus, tc));
}
