// labels.hpp
//
// The six self-supervised per-channel turn-taking signals derived from
// dual-channel voice activity, plus asymmetric-Gaussian smoothing.
//
// Per channel: EOT (turn-end offsets), HOLD (all other offsets), BOT
// (substantial onsets following the other speaker), BC (short isolated
// utterances), VAD, and FVAD over four future horizons.

#pragma once

#include <array>
#include <vector>

#include "dualturn/timeline.hpp"

namespace dualturn {

struct LabelConfig {
  double eot_lookahead_ms = 4000.0;
  double bot_min_dur_ms = 1000.0;
  double bc_max_dur_ms = 1000.0;
  double bc_isolation_ms = 1000.0;
  double smooth_sigma_before_frames = 3.0;
  double smooth_sigma_after_frames = 1.0;
  double smooth_truncation_sigmas = 3.0;
  // FVAD horizon boundaries in ms ahead: [0,240), [240,480), [480,960), [960,2000).
  std::array<double, 5> fvad_horizons_ms = {0.0, 240.0, 480.0, 960.0, 2000.0};

  void validate() const;
};

constexpr int kNumFvadHorizons = 4;

// One channel's worth of per-frame signal values, all in [0,1].
struct ChannelSignals {
  std::vector<double> eot;
  std::vector<double> hold;
  std::vector<double> bot;
  std::vector<double> bc;
  std::vector<double> vad;
  std::array<std::vector<double>, kNumFvadHorizons> fvad;

  size_t frames() const { return vad.size(); }
  void resize(size_t n);
};

// Targets (labels) and model outputs (estimates) share this shape:
// 9 scalars per channel per frame, 18 total.
struct SignalSet {
  ChannelSignals a;
  ChannelSignals b;

  ChannelSignals& channel(Channel c) { return c == Channel::A ? a : b; }
  const ChannelSignals& channel(Channel c) const { return c == Channel::A ? a : b; }
  size_t frames() const { return a.frames(); }
  SignalSet swapped() const { return {b, a}; }
};

using SignalLabels = SignalSet;
using SignalEstimates = SignalSet;

// Impulse-pair derivation for one channel. At every speech offset
// (impulse at the last active frame) exactly one of EOT/HOLD fires:
// EOT iff the other channel begins a floor-taking (non-BC) segment
// within the lookahead and no later than this channel's resumption.
void derive_eot_hold(const ActivityTimeline& t, Channel c, const LabelConfig& cfg,
                     std::vector<double>& eot, std::vector<double>& hold);

// Impulse at onsets of segments with duration >= bot_min whose most
// recent prior speech (either channel) is on the other channel.
std::vector<double> derive_bot(const ActivityTimeline& t, Channel c,
                               const LabelConfig& cfg);

// Impulse at onsets of isolated short utterances: duration <= bc_max,
// same-channel silence >= bc_isolation on both sides (session
// boundaries count as silence).
std::vector<double> derive_bc(const ActivityTimeline& t, Channel c,
                              const LabelConfig& cfg);

// Whether one specific segment qualifies as a backchannel utterance.
bool is_bc_segment(const std::vector<SpeechSegment>& channel_segments, size_t index,
                   size_t timeline_len, int bc_max_frames, int bc_iso_frames);

// Mean future voice activity over the four horizon windows, clipped at
// the session end (mean over the in-range part; empty window -> 0).
std::array<std::vector<double>, kNumFvadHorizons> derive_fvad(
    const ActivityTimeline& t, Channel c, const LabelConfig& cfg);

// Asymmetric-Gaussian smoothing of a binary impulse train. Kernels from
// multiple events combine by pointwise max; value at each event is 1.
std::vector<double> smooth_impulses(const std::vector<double>& impulses,
                                    const LabelConfig& cfg);

struct DerivedLabels {
  SignalLabels impulses;  // sparse signals as binary impulses
  SignalLabels smoothed;  // sparse signals smoothed; vad/fvad identical
};

DerivedLabels derive_all(const ActivityTimeline& t, const LabelConfig& cfg);

}  // namespace dualturn
