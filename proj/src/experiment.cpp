#include "dualturn/experiment.hpp"

#include <cmath>
#include <stdexcept>

namespace dualturn {

VariantConfig variant_by_name(const std::string& name) {
  if (name == "full") return {"full", true, false, 0.0};
  if (name == "scratch") return {"scratch", false, false, 0.0};
  if (name == "frozen") return {"frozen", true, true, 0.0};
  if (name == "aux") return {"aux", true, false, 1.0};
  throw std::invalid_argument("unknown variant: " + name);
}

TrainedVariant train_variant(
    const VariantConfig& v, const std::vector<TrainingSession>& train,
    const TrainConfig& base, const ModelConfig& mc,
    const std::function<double(const SequenceModel&)>& val_metric,
    const std::vector<TrainingSession>* pretrain_corpus) {
  TrainedVariant out{SequenceModel(mc), {}, {}};
  out.model.init_params(base.seed);
  TrainConfig cfg = base;
  cfg.stage2_freeze_backbone = v.freeze_backbone;
  cfg.aux_generative_weight = v.aux_weight;
  // Stage-1 is self-supervised; it may use a larger unlabeled corpus
  // than the labeled Stage-2 set.
  if (v.pretrain)
    out.stage1 =
        pretrain_stage1(out.model, pretrain_corpus ? *pretrain_corpus : train, cfg);
  out.stage2 = finetune_stage2(out.model, train, cfg, val_metric);
  return out;
}

double BinaryCounts::f1() const {
  double denom = 2.0 * tp + fp + fn;
  return denom > 0 ? 2.0 * tp / denom : 0.0;
}

double BinaryCounts::accuracy() const {
  long long total = tp + fp + fn + tn;
  return total > 0 ? static_cast<double>(tp + tn) / total : 0.0;
}

BinaryCounts& BinaryCounts::operator+=(const BinaryCounts& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  tn += o.tn;
  return *this;
}

static void tally(BinaryCounts& c, bool truth, bool pred) {
  if (truth && pred) ++c.tp;
  else if (!truth && pred) ++c.fp;
  else if (truth && !pred) ++c.fn;
  else ++c.tn;
}

void accumulate_onset_counts(BinaryCounts& bc, BinaryCounts& bot,
                             const ActivityTimeline& t, const SignalEstimates& est,
                             const SignalLabels& impulses, double thresh) {
  for (Channel c : {Channel::A, Channel::B}) {
    const ChannelSignals& e = est.channel(c);
    const ChannelSignals& y = impulses.channel(c);
    for (const SpeechSegment& seg : extract_segments(t, c)) {
      size_t on = seg.onset;
      tally(bc, y.bc[on] > 0.5, e.bc[on] > thresh);
      tally(bot, y.bot[on] > 0.5, e.bot[on] > thresh);
    }
  }
}

void accumulate_vad_counts(BinaryCounts& vad, const ActivityTimeline& t,
                           const SignalEstimates& est) {
  for (Channel c : {Channel::A, Channel::B}) {
    const ChannelSignals& e = est.channel(c);
    const auto& raw = t.channel(c);
    for (size_t i = 0; i < t.frames(); ++i)
      tally(vad, raw[i] != 0, e.vad[i] > 0.5);
  }
}

double heuristic_corpus_wf1(const SequenceModel& m,
                            const std::vector<ActivityTimeline>& ts,
                            const HeuristicRules& rules, const ActionConfig& acfg,
                            const LabelConfig& lcfg, double matching_window_ms) {
  (void)lcfg;
  ActionEvalResult r;
  int window = 0;
  for (const ActivityTimeline& t : ts) {
    if (window == 0)
      window = std::max(1, duration_to_frames(matching_window_ms, t.rate));
    SignalEstimates est = m.forward(featurize(t));
    for (Channel agent : {Channel::A, Channel::B}) {
      auto truth = derive_actions(t, agent, acfg);
      auto pred = heuristic_actions(rules, est, agent);
      accumulate_agent_actions(r, truth, pred, window);
    }
  }
  r.finalize();
  return r.wf1;
}

void shift_hold_traces(std::map<double, std::vector<ScoredAnchor>>& out,
                       const ActivityTimeline& t, const SignalEstimates& est,
                       const SignalLabels& impulses,
                       const std::vector<double>& deltas_ms) {
  auto traces = anticipation_trace(est, t, impulses, deltas_ms);
  for (auto& [d, anchors] : traces) {
    auto& dst = out[d];
    dst.insert(dst.end(), anchors.begin(), anchors.end());
  }
}

}  // namespace dualturn
