#include "dualturn/labels.hpp"

#include <algorithm>
#include <cmath>

namespace dualturn {

void LabelConfig::validate() const {
  if (eot_lookahead_ms <= 0.0)
    throw std::invalid_argument("LabelConfig: eot_lookahead_ms must be > 0");
  if (bot_min_dur_ms < 0 || bc_max_dur_ms < 0 || bc_isolation_ms < 0 ||
      smooth_sigma_before_frames < 0 || smooth_sigma_after_frames < 0 ||
      smooth_truncation_sigmas < 0)
    throw std::invalid_argument("LabelConfig: negative duration or sigma");
  for (int i = 0; i + 1 < 5; ++i)
    if (fvad_horizons_ms[i] >= fvad_horizons_ms[i + 1])
      throw std::invalid_argument("LabelConfig: fvad horizons must increase");
}

void ChannelSignals::resize(size_t n) {
  eot.assign(n, 0.0);
  hold.assign(n, 0.0);
  bot.assign(n, 0.0);
  bc.assign(n, 0.0);
  vad.assign(n, 0.0);
  for (auto& h : fvad) h.assign(n, 0.0);
}

bool is_bc_segment(const std::vector<SpeechSegment>& segs, size_t index,
                   size_t timeline_len, int bc_max_frames, int bc_iso_frames) {
  (void)timeline_len;  // boundaries count as silence; length is not needed
  const SpeechSegment& s = segs[index];
  if (s.duration() > bc_max_frames) return false;
  int gap_before = (index == 0) ? s.onset + bc_iso_frames  // boundary = silence
                                : s.onset - segs[index - 1].offset;
  if (index == 0) gap_before = std::max(gap_before, bc_iso_frames);
  int gap_after = (index + 1 == segs.size())
                      ? bc_iso_frames
                      : segs[index + 1].onset - s.offset;
  if (index + 1 == segs.size())
    gap_after = std::max(gap_after, bc_iso_frames);
  return gap_before >= bc_iso_frames && gap_after >= bc_iso_frames;
}

namespace {

// Onsets of other-channel segments that take the floor (BC-qualifying
// utterances excluded: a backchannel does not take the floor).
std::vector<int> floor_taking_onsets(const ActivityTimeline& t, Channel c,
                                     const LabelConfig& cfg) {
  auto segs = extract_segments(t, c);
  int bc_max = duration_to_frames(cfg.bc_max_dur_ms, t.rate);
  int bc_iso = duration_to_frames(cfg.bc_isolation_ms, t.rate);
  std::vector<int> out;
  for (size_t i = 0; i < segs.size(); ++i)
    if (!is_bc_segment(segs, i, t.frames(), bc_max, bc_iso))
      out.push_back(segs[i].onset);
  return out;
}

}  // namespace

void derive_eot_hold(const ActivityTimeline& t, Channel c, const LabelConfig& cfg,
                     std::vector<double>& eot, std::vector<double>& hold) {
  t.validate();
  size_t n = t.frames();
  eot.assign(n, 0.0);
  hold.assign(n, 0.0);
  auto segs = extract_segments(t, c);
  auto floor_onsets = floor_taking_onsets(t, other(c), cfg);
  int lookahead = duration_to_frames(cfg.eot_lookahead_ms, t.rate);

  for (size_t i = 0; i < segs.size(); ++i) {
    int e = segs[i].last_frame();  // impulse at the last active frame
    int resume = (i + 1 < segs.size()) ? segs[i + 1].onset
                                       : std::numeric_limits<int>::max();
    // First other-channel floor-taking onset strictly after the offset.
    auto it = std::upper_bound(floor_onsets.begin(), floor_onsets.end(), e);
    bool is_eot = false;
    if (it != floor_onsets.end()) {
      int o = *it;
      // Tie (same frame as own resumption) counts as EOT.
      is_eot = (o - e) <= lookahead && o <= resume;
    }
    (is_eot ? eot : hold)[e] = 1.0;
  }
}

std::vector<double> derive_bot(const ActivityTimeline& t, Channel c,
                               const LabelConfig& cfg) {
  t.validate();
  size_t n = t.frames();
  std::vector<double> out(n, 0.0);
  auto segs = extract_segments(t, c);
  const auto& ov = t.channel(other(c));
  int min_dur = duration_to_frames(cfg.bot_min_dur_ms, t.rate);

  for (size_t i = 0; i < segs.size(); ++i) {
    if (segs[i].duration() < min_dur) continue;
    int onset = segs[i].onset;
    int own_latest = (i > 0) ? segs[i - 1].offset - 1 : -1;
    int oth_latest = -1;
    for (int f = onset - 1; f >= 0; --f)
      if (ov[f]) {
        oth_latest = f;
        break;
      }
    if (oth_latest < 0) continue;  // no prior other-channel speech
    if (oth_latest >= own_latest) out[onset] = 1.0;
  }
  return out;
}

std::vector<double> derive_bc(const ActivityTimeline& t, Channel c,
                              const LabelConfig& cfg) {
  t.validate();
  std::vector<double> out(t.frames(), 0.0);
  auto segs = extract_segments(t, c);
  int bc_max = duration_to_frames(cfg.bc_max_dur_ms, t.rate);
  int bc_iso = duration_to_frames(cfg.bc_isolation_ms, t.rate);
  for (size_t i = 0; i < segs.size(); ++i)
    if (is_bc_segment(segs, i, t.frames(), bc_max, bc_iso)) out[segs[i].onset] = 1.0;
  return out;
}

std::array<std::vector<double>, kNumFvadHorizons> derive_fvad(
    const ActivityTimeline& t, Channel c, const LabelConfig& cfg) {
  t.validate();
  int n = static_cast<int>(t.frames());
  const auto& v = t.channel(c);
  std::array<std::vector<double>, kNumFvadHorizons> out;

  // Prefix sums of activity for O(1) window means.
  std::vector<int> ps(n + 1, 0);
  for (int i = 0; i < n; ++i) ps[i + 1] = ps[i] + v[i];

  for (int h = 0; h < kNumFvadHorizons; ++h) {
    int lo = duration_to_frames(cfg.fvad_horizons_ms[h], t.rate);
    int hi = duration_to_frames(cfg.fvad_horizons_ms[h + 1], t.rate);
    out[h].assign(n, 0.0);
    for (int tt = 0; tt < n; ++tt) {
      int a = std::min(tt + lo, n);
      int b = std::min(tt + hi, n);
      if (b > a) out[h][tt] = static_cast<double>(ps[b] - ps[a]) / (b - a);
    }
  }
  return out;
}

std::vector<double> smooth_impulses(const std::vector<double>& impulses,
                                    const LabelConfig& cfg) {
  int n = static_cast<int>(impulses.size());
  std::vector<double> out(n, 0.0);
  double sb = cfg.smooth_sigma_before_frames;
  double sa = cfg.smooth_sigma_after_frames;
  int reach_b = static_cast<int>(std::ceil(cfg.smooth_truncation_sigmas * sb));
  int reach_a = static_cast<int>(std::ceil(cfg.smooth_truncation_sigmas * sa));
  for (int e = 0; e < n; ++e) {
    if (impulses[e] == 0.0) continue;
    int lo = std::max(0, e - reach_b);
    int hi = std::min(n - 1, e + reach_a);
    for (int t = lo; t <= hi; ++t) {
      double sigma = (t < e) ? sb : sa;
      double val;
      if (t == e)
        val = 1.0;
      else if (sigma == 0.0)
        continue;
      else {
        double d = t - e;
        val = std::exp(-d * d / (2.0 * sigma * sigma));
      }
      out[t] = std::max(out[t], val);
    }
  }
  return out;
}

DerivedLabels derive_all(const ActivityTimeline& t, const LabelConfig& cfg) {
  t.validate();
  cfg.validate();
  DerivedLabels out;
  size_t n = t.frames();
  for (Channel c : {Channel::A, Channel::B}) {
    ChannelSignals& imp = out.impulses.channel(c);
    imp.resize(n);
    derive_eot_hold(t, c, cfg, imp.eot, imp.hold);
    imp.bot = derive_bot(t, c, cfg);
    imp.bc = derive_bc(t, c, cfg);
    const auto& v = t.channel(c);
    for (size_t i = 0; i < n; ++i) imp.vad[i] = v[i];
    imp.fvad = derive_fvad(t, c, cfg);

    ChannelSignals& sm = out.smoothed.channel(c);
    sm.eot = smooth_impulses(imp.eot, cfg);
    sm.hold = smooth_impulses(imp.hold, cfg);
    sm.bot = smooth_impulses(imp.bot, cfg);
    sm.bc = smooth_impulses(imp.bc, cfg);
    sm.vad = imp.vad;
    sm.fvad = imp.fvad;
  }
  return out;
}

}  // namespace dualturn
