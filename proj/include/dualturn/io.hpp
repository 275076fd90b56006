// io.hpp
//
// File formats: timelines as JSONL, events/words/segments as CSV,
// per-frame label dumps, decision logs, and run metadata. All writes go
// through a temp file + rename so readers never see partial output.

#pragma once

#include <map>
#include <string>
#include <vector>

#include "dualturn/actions.hpp"
#include "dualturn/labels.hpp"
#include "dualturn/stream.hpp"
#include "dualturn/synth.hpp"

namespace dualturn {

// Atomically replace `path` with `content` (temp file + rename).
void write_file_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

// timelines.jsonl: one object per line:
//   {"session_id": ..., "rate_fps": ..., "a": "0110...", "b": "0011..."}
std::string timelines_to_jsonl(const std::vector<ActivityTimeline>& ts);
std::vector<ActivityTimeline> timelines_from_jsonl(const std::string& text);

// events.csv: session_id,frame,kind,agent_channel
std::string events_to_csv(
    const std::vector<std::pair<std::string, std::vector<ActionEvent>>>& by_session);
std::vector<std::pair<std::string, std::vector<ActionEvent>>> events_from_csv(
    const std::string& text);

// words.csv: session_id,channel,frame
std::string words_to_csv(
    const std::vector<std::pair<std::string, std::vector<WordBoundary>>>& by_session);
std::vector<std::pair<std::string, std::vector<WordBoundary>>> words_from_csv(
    const std::string& text);

// segments.csv: session_id,channel,onset,offset
std::string segments_to_csv(const std::vector<ActivityTimeline>& ts);

// labels.csv: session_id,frame,channel,eot,hold,bot,bc,vad,fvad0..fvad3
// (6 decimal places).
std::string labels_to_csv(const std::string& session_id, const SignalLabels& labels);

// decisions.jsonl: one decision per line.
std::string decisions_to_jsonl(const std::string& session_id,
                               const std::vector<Decision>& ds);

std::string timing_to_json(const TimingReport& r);

// Stable FNV-1a hash of a canonical config serialization, hex-encoded.
std::string config_hash(const std::string& canonical_json);

}  // namespace dualturn
