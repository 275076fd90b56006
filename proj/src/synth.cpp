#include "dualturn/synth.hpp"

#include <algorithm>
#include <cmath>

namespace dualturn {

void GeneratorConfig::validate() const {
  if (session_len_frames <= 0)
    throw std::invalid_argument("GeneratorConfig: session_len_frames must be > 0");
  if (frame_rate_fps <= 0)
    throw std::invalid_argument("GeneratorConfig: frame_rate_fps must be > 0");
  for (double p : {pause_resume_prob, long_pause_prob, short_overlap_prob})
    if (p < 0.0 || p > 1.0)
      throw std::invalid_argument("GeneratorConfig: probability outside [0,1]");
  if (backchannel_rate_per_min < 0 || overlap_rate_per_min < 0 || word_rate_per_s < 0)
    throw std::invalid_argument("GeneratorConfig: negative rate");
  if (mean_utterance_ms <= 0 || mean_gap_ms <= 0)
    throw std::invalid_argument("GeneratorConfig: non-positive duration");
}

std::vector<ActionEvent> PlantedLog::events_for(Channel agent_channel) const {
  std::vector<ActionEvent> out;
  for (const auto& e : events)
    if (e.agent_channel == agent_channel) out.push_back(e);
  return out;
}

namespace {

struct Chunk {
  int on = 0;
  int off = 0;
  ProvenanceTag tag = ProvenanceTag::Turn;
};

struct Turn {
  Channel ch = Channel::A;
  std::vector<Chunk> chunks;
  int gap_after = 0;       // silent gap to the next turn
  bool next_overlapped = false;  // next turn starts inside our final chunk
};

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

bool bern(std::mt19937_64& rng, double p) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

}  // namespace

GeneratedSession generate(const GeneratorConfig& cfg) {
  cfg.validate();
  FrameRate rate{cfg.frame_rate_fps};
  const int len = cfg.session_len_frames;
  const int one_s = duration_to_frames(1000.0, rate);
  const int st_w = duration_to_frames(4000.0, rate);
  const int cl_w = duration_to_frames(2000.0, rate);
  const int mean_utt = duration_to_frames(cfg.mean_utterance_ms, rate);
  if (mean_utt < 1)
    throw std::invalid_argument("GeneratorConfig: mean_utterance below one frame");

  // Chunk and gap length ranges (frames). Non-final chunks stay clear of
  // the 1 s BOT/BC boundary; final chunks are longer so the elapsed-turn
  // length carries a causal shift-vs-hold cue.
  const int nf_lo = one_s + 2;
  const int nf_hi = std::max(nf_lo + 1, mean_utt);
  const int f_lo = std::max(2 * one_s + 4, mean_utt + 5);
  // Wide final-chunk range: enough length variance that turn phase
  // decorrelates within a few turns (no periodic cue far from offsets).
  // decorrelates within a few turns (no periodic cue far from offsets),
  // while the max two-chunk turn still fits inside 10 s.
  const int f_hi = std::max(f_lo + 2, (5 * mean_utt) / 2 + 10);
  const int pause_lo = 3;
  const int pause_hi = std::min(20, cl_w - 5);
  const int short_gap_hi =
      std::max(3, std::min(one_s, duration_to_frames(cfg.mean_gap_ms, rate)));
  const int long_gap_lo = one_s + 1;
  const int long_gap_hi = std::min(long_gap_lo + 26, st_w - 5);

  std::mt19937_64 rng(cfg.seed);

  // Phase 1: alternating turn skeleton.
  std::vector<Turn> turns;
  Channel ch = bern(rng, 0.5) ? Channel::A : Channel::B;
  int t = uniform_int(rng, 0, 5);
  while (true) {
    int n_chunks = 1;
    // Cap at two chunks so the longest turn stays well under 10 s; far
    // before the offset the shift/hold class is then unpredictable.
    while (n_chunks < 2 && bern(rng, cfg.pause_resume_prob)) ++n_chunks;
    std::vector<int> lens(n_chunks), gaps(std::max(0, n_chunks - 1));
    for (int j = 0; j + 1 < n_chunks; ++j) {
      lens[j] = uniform_int(rng, nf_lo, nf_hi);
      gaps[j] = uniform_int(rng, pause_lo, pause_hi);
    }
    lens[n_chunks - 1] = uniform_int(rng, f_lo, f_hi);
    int turn_len = 0;
    for (int l : lens) turn_len += l;
    for (int g : gaps) turn_len += g;
    int gap_after = bern(rng, cfg.long_pause_prob)
                        ? uniform_int(rng, long_gap_lo, long_gap_hi)
                        : uniform_int(rng, 2, short_gap_hi);
    if (t + turn_len + gap_after + 1 > len) break;
    Turn tn;
    tn.ch = ch;
    tn.gap_after = gap_after;
    int pos = t;
    for (int j = 0; j < n_chunks; ++j) {
      Chunk c;
      c.on = pos;
      c.off = pos + lens[j];
      c.tag = (j == 0) ? ProvenanceTag::Turn : ProvenanceTag::ResumedPause;
      tn.chunks.push_back(c);
      pos = c.off;
      if (j + 1 < n_chunks) pos += gaps[j];
    }
    turns.push_back(std::move(tn));
    t += turn_len + gap_after;
    ch = other(ch);
  }

  const double minutes = len / (rate.fps * 60.0);

  // Phase 2: convert some transfers into overlapped takeovers.
  int n_takeover = std::poisson_distribution<int>(
      cfg.overlap_rate_per_min * (1.0 - cfg.short_overlap_prob) * minutes)(rng);
  if (!turns.empty()) {
    std::vector<size_t> candidates;
    for (size_t i = 1; i < turns.size(); ++i) candidates.push_back(i);
    std::shuffle(candidates.begin(), candidates.end(), rng);
    int converted = 0;
    for (size_t idx : candidates) {
      if (converted >= n_takeover) break;
      Turn& prev = turns[idx - 1];
      Turn& cur = turns[idx];
      int o_len = uniform_int(rng, 2, 5);
      const Chunk& prev_final = prev.chunks.back();
      if (prev_final.off - prev_final.on < o_len + 4) continue;
      cur.chunks.front().on = prev_final.off - o_len;
      cur.chunks.front().tag = ProvenanceTag::Interruption;
      prev.next_overlapped = true;
      prev.gap_after = 0;
      ++converted;
    }
  }

  // Channel interval lists (sorted) for clearance checks.
  struct Interval {
    int on, off;
  };
  std::array<std::vector<Interval>, 2> occ;
  for (const auto& tn : turns)
    for (const auto& c : tn.chunks)
      occ[static_cast<int>(tn.ch)].push_back({c.on, c.off});
  for (auto& v : occ)
    std::sort(v.begin(), v.end(), [](auto x, auto y) { return x.on < y.on; });

  // Phase 3: short isolated blips (backchannels / brief overlaps).
  struct Blip {
    Channel ch;
    Channel host;
    int on, off;
  };
  std::vector<Blip> blips;
  double blip_rate = cfg.backchannel_rate_per_min +
                     cfg.overlap_rate_per_min * cfg.short_overlap_prob;
  int n_blips = std::poisson_distribution<int>(blip_rate * minutes)(rng);
  int blip_hi = std::max(3, one_s - 5);
  for (int k = 0; k < n_blips && !turns.empty(); ++k) {
    for (int attempt = 0; attempt < 60; ++attempt) {
      const Turn& host = turns[uniform_int(rng, 0, static_cast<int>(turns.size()) - 1)];
      const Chunk& c = host.chunks[uniform_int(
          rng, 0, static_cast<int>(host.chunks.size()) - 1)];
      int L = uniform_int(rng, 3, blip_hi);
      int s_lo = c.on + 2, s_hi = c.off - 2 - L;
      if (s_hi < s_lo) continue;
      int s = uniform_int(rng, s_lo, s_hi);
      Channel bch = other(host.ch);
      auto& iv = occ[static_cast<int>(bch)];
      bool clear = true;
      for (const auto& in : iv) {
        if (in.on - (s + L) >= one_s + 1) continue;
        if (s - in.off >= one_s + 1) continue;
        clear = false;
        break;
      }
      if (!clear) continue;
      iv.push_back({s, s + L});
      std::sort(iv.begin(), iv.end(), [](auto x, auto y) { return x.on < y.on; });
      blips.push_back({bch, host.ch, s, s + L});
      break;
    }
  }

  // Phase 4: rasterize.
  GeneratedSession out;
  out.timeline.session_id = "synth-" + std::to_string(cfg.seed);
  out.timeline.rate = rate;
  out.timeline.a.assign(len, 0);
  out.timeline.b.assign(len, 0);
  for (int chn = 0; chn < 2; ++chn) {
    auto& v = out.timeline.channel(static_cast<Channel>(chn));
    for (const auto& in : occ[chn])
      for (int f = in.on; f < in.off; ++f) v[f] = 1;
  }

  // Phase 5: planted events and provenance.
  auto& log = out.log;
  for (const auto& tn : turns) {
    for (const auto& c : tn.chunks)
      log.segments.push_back({tn.ch, c.on, c.off, c.tag});
    for (size_t j = 0; j + 1 < tn.chunks.size(); ++j)
      log.events.push_back({ActionKind::CL, tn.chunks[j].off - 1, other(tn.ch)});
  }
  for (const auto& bl : blips) {
    log.segments.push_back({bl.ch, bl.on, bl.off, ProvenanceTag::Backchannel});
    log.events.push_back({ActionKind::BC, bl.on, bl.ch});
    log.events.push_back({ActionKind::CT, bl.on, bl.host});
  }
  for (size_t i = 0; i + 1 < turns.size(); ++i) {
    const Turn& cur = turns[i];
    const Turn& nxt = turns[i + 1];
    if (cur.next_overlapped) {
      log.events.push_back({ActionKind::SL, nxt.chunks.front().on, cur.ch});
    } else {
      ++log.gap_transfers;
      if (cur.gap_after > one_s) ++log.long_gap_transfers;
      log.events.push_back({ActionKind::ST, cur.chunks.back().off - 1, nxt.ch});
    }
  }
  std::sort(log.events.begin(), log.events.end(),
            [](const ActionEvent& x, const ActionEvent& y) {
              if (x.frame != y.frame) return x.frame < y.frame;
              if (x.agent_channel != y.agent_channel)
                return x.agent_channel < y.agent_channel;
              return x.kind < y.kind;
            });

  // Phase 6: pseudo-word boundaries.
  int step = std::max(2, static_cast<int>(std::lround(rate.fps / std::max(0.1, cfg.word_rate_per_s))));
  for (Channel c : {Channel::A, Channel::B}) {
    for (const auto& seg : extract_segments(out.timeline, c)) {
      for (int f = seg.onset; f <= seg.last_frame(); f += step) {
        int b = f + uniform_int(rng, -1, 1);
        b = std::clamp(b, seg.onset, seg.last_frame());
        if (!out.words.empty() && out.words.back().channel == c &&
            out.words.back().frame == b)
          continue;
        out.words.push_back({c, b});
      }
    }
  }
  return out;
}

std::vector<GeneratedSession> generate_corpus(const GeneratorConfig& cfg,
                                              int n_sessions) {
  std::vector<GeneratedSession> out;
  out.reserve(std::max(0, n_sessions));
  for (int i = 0; i < n_sessions; ++i) {
    GeneratorConfig c = cfg;
    c.seed = cfg.seed + static_cast<uint64_t>(i);
    out.push_back(generate(c));
    out.back().timeline.session_id =
        "synth-" + std::to_string(cfg.seed) + "-" + std::to_string(i);
  }
  return out;
}

}  // namespace dualturn
