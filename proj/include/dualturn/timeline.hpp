// timeline.hpp
//
// Framed dual-channel voice activity, speech segments, and the
// duration <-> frame conversion used everywhere else.

#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dualturn {

enum class Channel { A, B };

inline Channel other(Channel c) { return c == Channel::A ? Channel::B : Channel::A; }
inline char channel_name(Channel c) { return c == Channel::A ? 'A' : 'B'; }
Channel parse_channel(const std::string& s);

struct FrameRate {
  double fps = 12.5;

  double frame_ms() const { return 1000.0 / fps; }
  void validate() const {
    if (!(fps > 0.0)) throw std::invalid_argument("FrameRate: fps must be > 0");
  }
};

// Rounds ms * fps / 1000 half-up to the nearest integer frame count.
// 240 ms -> 3 frames and 1000 ms -> 13 frames at 12.5 fps.
int duration_to_frames(double ms, const FrameRate& rate);

struct ActivityTimeline {
  std::string session_id;
  FrameRate rate;
  std::vector<uint8_t> a;
  std::vector<uint8_t> b;

  size_t frames() const { return a.size(); }
  const std::vector<uint8_t>& channel(Channel c) const { return c == Channel::A ? a : b; }
  std::vector<uint8_t>& channel(Channel c) { return c == Channel::A ? a : b; }

  // Channels swapped, same session.
  ActivityTimeline swapped() const;

  void validate() const;
};

// Maximal run of contiguous active frames on one channel.
struct SpeechSegment {
  Channel channel = Channel::A;
  int onset = 0;   // inclusive
  int offset = 0;  // exclusive

  int duration() const { return offset - onset; }
  int last_frame() const { return offset - 1; }
};

// Run-length encodes the active frames of one channel.
std::vector<SpeechSegment> extract_segments(const ActivityTimeline& t, Channel c);

// Inverse of extract_segments. Segments must be disjoint, sorted and
// within [0, length).
std::vector<uint8_t> rasterize_segments(const std::vector<SpeechSegment>& segments,
                                        size_t length);

}  // namespace dualturn
