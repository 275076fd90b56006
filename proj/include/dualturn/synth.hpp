// synth.hpp
//
// Semi-Markov two-party conversation generator. Emits dual-channel
// activity plus a planted event log and pseudo-word boundaries. Every
// planted event is constructed so the label/action derivations recover
// it exactly (the round-trip is the backbone of the test suite).

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "dualturn/actions.hpp"
#include "dualturn/timeline.hpp"

namespace dualturn {

struct GeneratorConfig {
  uint64_t seed = 1;
  int session_len_frames = 1500;
  double frame_rate_fps = 12.5;
  double mean_utterance_ms = 2000.0;
  double mean_gap_ms = 900.0;
  double pause_resume_prob = 0.35;
  double long_pause_prob = 0.12;   // fraction of gap transfers with gap > 1 s
  double backchannel_rate_per_min = 1.0;
  double overlap_rate_per_min = 3.0;
  double short_overlap_prob = 0.2;
  double word_rate_per_s = 2.5;

  void validate() const;
};

enum class ProvenanceTag { Turn, Backchannel, Interruption, ResumedPause };

struct PlantedSegment {
  Channel channel = Channel::A;
  int onset = 0;
  int offset = 0;
  ProvenanceTag tag = ProvenanceTag::Turn;
};

struct PlantedLog {
  // Events for both role assignments; filter on agent_channel.
  std::vector<ActionEvent> events;
  std::vector<PlantedSegment> segments;
  int gap_transfers = 0;       // transfers realized as a silent gap
  int long_gap_transfers = 0;  // of those, gap > 1 s

  std::vector<ActionEvent> events_for(Channel agent_channel) const;
};

struct GeneratedSession {
  ActivityTimeline timeline;
  PlantedLog log;
  std::vector<WordBoundary> words;
};

GeneratedSession generate(const GeneratorConfig& cfg);

// n independent sessions with seeds cfg.seed + i.
std::vector<GeneratedSession> generate_corpus(const GeneratorConfig& cfg,
                                              int n_sessions);

// PRNG algorithm identifier recorded in corpus metadata.
inline const char* kPrngId = "std::mt19937_64";

}  // namespace dualturn
