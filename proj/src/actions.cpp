#include "dualturn/actions.hpp"

#include <algorithm>
#include <limits>

namespace dualturn {

const char* action_name(ActionKind k) {
  switch (k) {
    case ActionKind::ST: return "ST";
    case ActionKind::CL: return "CL";
    case ActionKind::SL: return "SL";
    case ActionKind::CT: return "CT";
    case ActionKind::BC: return "BC";
  }
  return "?";
}

ActionKind parse_action(const std::string& s) {
  if (s == "ST") return ActionKind::ST;
  if (s == "CL") return ActionKind::CL;
  if (s == "SL") return ActionKind::SL;
  if (s == "CT") return ActionKind::CT;
  if (s == "BC") return ActionKind::BC;
  throw std::invalid_argument("bad action name: " + s);
}

void ActionConfig::validate() const {
  if (st_window_ms < 0 || cl_window_ms < 0 || overlap_long_ms <= 0 ||
      bc_max_dur_ms <= 0)
    throw std::invalid_argument("ActionConfig: non-positive window");
}

std::vector<ActionEvent> derive_actions(const ActivityTimeline& t,
                                        Channel agent_channel,
                                        const ActionConfig& cfg) {
  t.validate();
  cfg.validate();
  Channel user_channel = other(agent_channel);
  const auto& agent_vad = t.channel(agent_channel);
  const auto& user_vad = t.channel(user_channel);
  auto user_segs = extract_segments(t, user_channel);
  auto agent_segs = extract_segments(t, agent_channel);

  int st_w = duration_to_frames(cfg.st_window_ms, t.rate);
  int cl_w = duration_to_frames(cfg.cl_window_ms, t.rate);
  int ov_long = duration_to_frames(cfg.overlap_long_ms, t.rate);
  int bc_max = duration_to_frames(cfg.bc_max_dur_ms, t.rate);
  // Floor-taking agent onsets exclude BC-qualifying vocalizations,
  // consistent with the EOT rule.
  std::vector<int> agent_floor_onsets;
  for (size_t i = 0; i < agent_segs.size(); ++i)
    if (!is_bc_segment(agent_segs, i, t.frames(), bc_max, bc_max))
      agent_floor_onsets.push_back(agent_segs[i].onset);

  std::vector<ActionEvent> out;

  // ST / CL at user offsets.
  for (size_t i = 0; i < user_segs.size(); ++i) {
    int e = user_segs[i].last_frame();
    if (agent_vad[e]) continue;  // agent already has the floor
    int resume = (i + 1 < user_segs.size()) ? user_segs[i + 1].onset
                                            : std::numeric_limits<int>::max();
    auto it = std::upper_bound(agent_floor_onsets.begin(), agent_floor_onsets.end(), e);
    long long agent_on = (it != agent_floor_onsets.end())
                             ? *it
                             : std::numeric_limits<long long>::max();
    // Earlier onset wins; same-frame tie -> ST.
    if (agent_on - e <= st_w && agent_on <= resume)
      out.push_back({ActionKind::ST, e, agent_channel});
    else if (resume - e <= cl_w && resume < agent_on)
      out.push_back({ActionKind::CL, e, agent_channel});
  }

  // SL / CT at overlap onsets (user starts while agent speaking).
  for (const auto& s : user_segs) {
    if (s.onset == 0 || !agent_vad[s.onset]) continue;
    // Only a fresh onset counts as incoming speech.
    ActionKind k = (s.duration() >= ov_long) ? ActionKind::SL : ActionKind::CT;
    out.push_back({k, s.onset, agent_channel});
  }

  // BC at agent short-vocalization onsets during user speech.
  for (const auto& s : agent_segs) {
    if (s.duration() < bc_max && user_vad[s.onset])
      out.push_back({ActionKind::BC, s.onset, agent_channel});
  }

  std::sort(out.begin(), out.end(), [](const ActionEvent& x, const ActionEvent& y) {
    return x.frame < y.frame || (x.frame == y.frame && x.kind < y.kind);
  });
  return out;
}

const char* word_class_name(WordClass w) {
  switch (w) {
    case WordClass::C: return "C";
    case WordClass::B: return "B";
    case WordClass::T: return "T";
  }
  return "?";
}

std::vector<WordClass> derive_word_level_classes(
    const ActivityTimeline& t, const std::vector<WordBoundary>& boundaries,
    const ActionConfig& cfg) {
  t.validate();
  cfg.validate();
  int st_w = duration_to_frames(cfg.st_window_ms, t.rate);

  LabelConfig lcfg;
  lcfg.eot_lookahead_ms = cfg.st_window_ms;
  lcfg.bc_max_dur_ms = cfg.bc_max_dur_ms;

  struct PerChannel {
    std::vector<SpeechSegment> segs;
    std::vector<double> eot, hold;
    std::vector<double> bc_other;  // BC impulses on the other channel
  };
  PerChannel pc[2];
  for (Channel c : {Channel::A, Channel::B}) {
    auto& p = pc[static_cast<int>(c)];
    p.segs = extract_segments(t, c);
    derive_eot_hold(t, c, lcfg, p.eot, p.hold);
    p.bc_other = derive_bc(t, other(c), lcfg);
  }

  std::vector<WordClass> out;
  out.reserve(boundaries.size());
  for (const auto& bd : boundaries) {
    const auto& p = pc[static_cast<int>(bd.channel)];
    const SpeechSegment* seg = nullptr;
    for (const auto& s : p.segs)
      if (bd.frame >= s.onset && bd.frame < s.offset) {
        seg = &s;
        break;
      }
    if (!seg)
      throw std::invalid_argument("word boundary outside any segment");
    int e = seg->last_frame();
    if (e <= bd.frame + 1 && p.eot[e] == 1.0) {
      out.push_back(WordClass::T);
      continue;
    }
    bool bc_follows = false;
    int hi = std::min<int>(bd.frame + st_w, static_cast<int>(t.frames()) - 1);
    for (int f = bd.frame + 1; f <= hi; ++f)
      if (p.bc_other[f] == 1.0) {
        bc_follows = true;
        break;
      }
    out.push_back(bc_follows ? WordClass::B : WordClass::C);
  }
  return out;
}

}  // namespace dualturn
