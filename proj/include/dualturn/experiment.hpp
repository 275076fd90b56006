// experiment.hpp
//
// Training-variant plumbing and the analysis metrics used by the
// ablation CLI and the acceptance suite: sparse-event anchor F1, dense
// VAD accuracy, heuristic end-to-end wF1, and anticipation traces.

#pragma once

#include <map>
#include <string>
#include <vector>

#include "dualturn/eval.hpp"
#include "dualturn/fusion.hpp"
#include "dualturn/model.hpp"
#include "dualturn/stream.hpp"
#include "dualturn/synth.hpp"

namespace dualturn {

// Training variants:
//   full    - Stage-1 pretraining then Stage-2 fine-tuning
//   scratch - Stage-2 only, from random init
//   frozen  - Stage-1, then Stage-2 with the backbone frozen
//   aux     - Stage-1, then Stage-2 with the generative loss kept on
struct VariantConfig {
  std::string name = "full";
  bool pretrain = true;
  bool freeze_backbone = false;
  double aux_weight = 0.0;
};

VariantConfig variant_by_name(const std::string& name);

struct TrainedVariant {
  SequenceModel model;
  TrainReport stage1;
  TrainReport stage2;
};

TrainedVariant train_variant(
    const VariantConfig& v, const std::vector<TrainingSession>& train,
    const TrainConfig& base, const ModelConfig& mc,
    const std::function<double(const SequenceModel&)>& val_metric = nullptr,
    const std::vector<TrainingSession>* pretrain_corpus = nullptr);

// ---------------------------------------------------------------------------
// Metrics.

struct BinaryCounts {
  long long tp = 0, fp = 0, fn = 0, tn = 0;

  double f1() const;
  double accuracy() const;
  BinaryCounts& operator+=(const BinaryCounts& o);
};

// Sparse-event detection at segment-onset anchors: at every speech
// onset, does the model's bc (resp. bot) estimate exceed `thresh` and
// does the impulse label fire there?
void accumulate_onset_counts(BinaryCounts& bc, BinaryCounts& bot,
                             const ActivityTimeline& t, const SignalEstimates& est,
                             const SignalLabels& impulses, double thresh = 0.5);

// Per-frame VAD accuracy over both channels, estimates thresholded at 0.5.
void accumulate_vad_counts(BinaryCounts& vad, const ActivityTimeline& t,
                           const SignalEstimates& est);

// End-to-end heuristic wF1 against derived truth actions, both role
// assignments pooled. Used as the Stage-2 early-stopping metric.
double heuristic_corpus_wf1(const SequenceModel& m,
                            const std::vector<ActivityTimeline>& ts,
                            const HeuristicRules& rules, const ActionConfig& acfg,
                            const LabelConfig& lcfg,
                            double matching_window_ms = 240.0);

// Shift-vs-hold anticipation: at every speech offset (positive = EOT
// impulse), score the model's smoothed EOT estimate `delta_ms` away
// (delta <= 0 looks earlier). Anchors whose shifted frame falls outside
// the session are skipped.
void shift_hold_traces(std::map<double, std::vector<ScoredAnchor>>& out,
                       const ActivityTimeline& t, const SignalEstimates& est,
                       const SignalLabels& impulses,
                       const std::vector<double>& deltas_ms);

}  // namespace dualturn
