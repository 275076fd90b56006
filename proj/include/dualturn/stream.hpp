// stream.hpp
//
// Causal streaming engine: frames arrive in strides of 3 (240 ms), the
// policy is evaluated at anchors found inside each completed stride,
// with debouncing, and produces a decision log that matches the offline
// pipeline bitwise on identical inputs.

#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <map>

#include "dualturn/eval.hpp"
#include "dualturn/fusion.hpp"
#include "dualturn/model.hpp"

namespace dualturn {

struct StreamConfig {
  int stride_frames = 3;        // 240 ms at 12.5 fps
  int debounce_strides = 1;     // anchors must survive one full stride
  int min_gap_strides = 2;      // minimum spacing between emitted decisions
  double vad_thresh = 0.5;

  void validate() const;
};

struct Decision {
  ActionKind action = ActionKind::CL;
  size_t stride = 0;        // stride index at which the decision was emitted
  size_t frame = 0;         // anchor frame that triggered it
  AnchorKind anchor = AnchorKind::UserOffset;
  std::array<double, 18> snapshot{};  // anchor features, user channel first
  std::string policy_id;
};

// Produces per-frame signal estimates causally. The model source wraps
// SequenceModel::step; the oracle source replays precomputed signals
// (used to exercise the engine against ground-truth labels).
class EstimateSource {
 public:
  virtual ~EstimateSource() = default;
  virtual void reset() = 0;
  // Consume one frame of raw VAD, emit the 18 signal scalars (A then B).
  virtual std::array<double, kSignalScalars> step(uint8_t vad_a, uint8_t vad_b) = 0;
};

class ModelSource : public EstimateSource {
 public:
  explicit ModelSource(const SequenceModel& m, const FeatureConfig& fcfg = {});
  void reset() override;
  std::array<double, kSignalScalars> step(uint8_t vad_a, uint8_t vad_b) override;

 private:
  const SequenceModel& model_;
  FeatureExtractor fx_;
  ModelState state_;
};

class OracleSource : public EstimateSource {
 public:
  explicit OracleSource(const SignalEstimates& est);
  void reset() override;
  std::array<double, kSignalScalars> step(uint8_t vad_a, uint8_t vad_b) override;

 private:
  const SignalEstimates& est_;
  size_t t_ = 0;
};

class StreamEngine {
 public:
  StreamEngine(EstimateSource& src, const HeuristicRules& rules, Channel agent,
               const StreamConfig& cfg = {});

  void reset();

  // Feed exactly one stride of frames (cfg.stride_frames each channel).
  // Returns decisions emitted at this stride boundary.
  std::vector<Decision> push_stride(const uint8_t* vad_a, const uint8_t* vad_b);

  // Feed a partial final stride (< stride_frames); the remainder is
  // right-padded with silence. Sets the final_stride_partial flag.
  std::vector<Decision> push_final(const uint8_t* vad_a, const uint8_t* vad_b,
                                   int n_frames);

  bool final_stride_partial() const { return partial_; }
  size_t frames_seen() const { return frame_; }
  const std::vector<std::array<double, kSignalScalars>>& estimates() const {
    return est_rows_;
  }

 private:
  EstimateSource& src_;
  const HeuristicRules& rules_;
  Channel agent_;
  StreamConfig cfg_;

  size_t frame_ = 0, stride_ = 0;
  bool partial_ = false;
  uint8_t prev_user_on_ = 0, prev_agent_on_ = 0;
  long last_decision_stride_ = -1000000;
  std::vector<Anchor> pending_;  // anchors awaiting debounce
  std::vector<std::array<double, kSignalScalars>> est_rows_;

  std::vector<Decision> flush_stride();
};

struct TimingReport {
  double p50_ms = 0.0;
  double p95_ms = 0.0;
  double realtime_factor = 0.0;  // audio seconds processed per wall second
  size_t strides = 0;
};

struct StreamRunResult {
  std::vector<Decision> decisions;
  TimingReport timing;
  bool final_stride_partial = false;
};

// Drive a whole session through the engine, timing each stride.
StreamRunResult run_session(EstimateSource& src, const HeuristicRules& rules,
                            const ActivityTimeline& t, Channel agent,
                            const StreamConfig& cfg = {});

// Offline reference: identical anchor/debounce/gap logic applied to the
// full estimate matrix in one pass. Streaming must match this bitwise.
std::vector<Decision> offline_decisions(const SignalEstimates& est,
                                        const HeuristicRules& rules, Channel agent,
                                        const StreamConfig& cfg = {},
                                        bool final_partial = false,
                                        size_t true_frames = 0);

// Shift/hold anticipation trace: at every ground-truth speech offset
// (positive = EOT impulse), record the EOT estimate `delta_ms` away for
// each requested offset (delta <= 0 looks earlier). Shifted frames
// outside the session are skipped and counted in `skipped`.
std::map<double, std::vector<ScoredAnchor>> anticipation_trace(
    const SignalEstimates& est, const ActivityTimeline& t,
    const SignalLabels& impulses, const std::vector<double>& offsets_ms,
    size_t* skipped = nullptr);

}  // namespace dualturn
