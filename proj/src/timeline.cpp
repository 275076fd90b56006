#include "dualturn/timeline.hpp"

namespace dualturn {

Channel parse_channel(const std::string& s) {
  if (s == "A" || s == "a") return Channel::A;
  if (s == "B" || s == "b") return Channel::B;
  throw std::invalid_argument("bad channel name: " + s);
}

int duration_to_frames(double ms, const FrameRate& rate) {
  rate.validate();
  if (ms < 0.0) throw std::invalid_argument("duration_to_frames: ms must be >= 0");
  return static_cast<int>(std::floor(ms * rate.fps / 1000.0 + 0.5));
}

ActivityTimeline ActivityTimeline::swapped() const {
  ActivityTimeline t = *this;
  std::swap(t.a, t.b);
  return t;
}

void ActivityTimeline::validate() const {
  rate.validate();
  if (a.size() != b.size())
    throw std::invalid_argument("ActivityTimeline: channel lengths differ");
  for (uint8_t v : a)
    if (v > 1) throw std::invalid_argument("ActivityTimeline: channel A not binary");
  for (uint8_t v : b)
    if (v > 1) throw std::invalid_argument("ActivityTimeline: channel B not binary");
}

std::vector<SpeechSegment> extract_segments(const ActivityTimeline& t, Channel c) {
  const auto& v = t.channel(c);
  std::vector<SpeechSegment> out;
  int n = static_cast<int>(v.size());
  int start = -1;
  for (int i = 0; i < n; ++i) {
    if (v[i] && start < 0) start = i;
    if (!v[i] && start >= 0) {
      out.push_back({c, start, i});
      start = -1;
    }
  }
  if (start >= 0) out.push_back({c, start, n});
  return out;
}

std::vector<uint8_t> rasterize_segments(const std::vector<SpeechSegment>& segments,
                                        size_t length) {
  std::vector<uint8_t> v(length, 0);
  int prev_end = -1;
  for (const auto& s : segments) {
    if (s.onset >= s.offset)
      throw std::invalid_argument("rasterize_segments: empty or inverted segment");
    if (s.onset < 0 || s.offset > static_cast<int>(length))
      throw std::invalid_argument("rasterize_segments: segment out of range");
    if (s.onset <= prev_end)
      throw std::invalid_argument("rasterize_segments: segments overlap or unsorted");
    prev_end = s.offset - 1;
    for (int i = s.onset; i < s.offset; ++i) v[i] = 1;
  }
  return v;
}

}  // namespace dualturn
