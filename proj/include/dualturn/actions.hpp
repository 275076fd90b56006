// actions.hpp
//
// Ground-truth agent actions derived from a dual-channel timeline with
// a designated agent channel, plus word-level C/B/T classes.

#pragma once

#include <string>
#include <vector>

#include "dualturn/labels.hpp"
#include "dualturn/timeline.hpp"

namespace dualturn {

enum class ActionKind { ST, CL, SL, CT, BC };
constexpr int kNumActions = 5;

const char* action_name(ActionKind k);
ActionKind parse_action(const std::string& s);

struct ActionEvent {
  ActionKind kind = ActionKind::CL;
  int frame = 0;
  Channel agent_channel = Channel::B;

  bool operator==(const ActionEvent&) const = default;
};

struct ActionConfig {
  double st_window_ms = 4000.0;
  double cl_window_ms = 2000.0;
  double overlap_long_ms = 1000.0;
  double bc_max_dur_ms = 1000.0;

  void validate() const;
};

// Anchors:
//  ST/CL  - user speech offsets with the agent silent at the offset frame
//           (the agent already holding the floor leaves nothing to decide).
//  SL/CT  - user onsets while the agent is speaking; SL iff the incoming
//           segment lasts >= overlap_long frames (tie -> SL).
//  BC     - agent onsets of vocalizations < bc_max_dur while the user
//           is active at the onset frame.
// BC-qualifying agent vocalizations do not count as "agent speaks" for ST.
std::vector<ActionEvent> derive_actions(const ActivityTimeline& t,
                                        Channel agent_channel,
                                        const ActionConfig& cfg);

enum class WordClass { C, B, T };

const char* word_class_name(WordClass w);

struct WordBoundary {
  Channel channel = Channel::A;
  int frame = 0;
};

// Classifies each word boundary of the current speaker:
//  T - the segment ends within one frame after the boundary and the
//      offset is an EOT (other speaker takes the floor),
//  B - the other channel produces a BC-qualifying utterance whose onset
//      falls within st_window after the boundary,
//  C - otherwise.
std::vector<WordClass> derive_word_level_classes(
    const ActivityTimeline& t, const std::vector<WordBoundary>& boundaries,
    const ActionConfig& cfg);

}  // namespace dualturn
