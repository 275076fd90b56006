#include "dualturn/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace dualturn {

long long ConfusionMatrix::total() const {
  long long s = 0;
  for (long long c : counts) s += c;
  return s;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& o) {
  if (n != o.n) throw std::invalid_argument("ConfusionMatrix: size mismatch");
  for (size_t i = 0; i < counts.size(); ++i) counts[i] += o.counts[i];
  return *this;
}

double class_f1(const ConfusionMatrix& cm, int cls) {
  long long tp = cm.at(cls, cls);
  long long fp = 0, fn = 0;
  for (int i = 0; i < cm.n; ++i) {
    if (i == cls) continue;
    fp += cm.at(i, cls);
    fn += cm.at(cls, i);
  }
  double denom = 2.0 * tp + fp + fn;
  return denom > 0.0 ? 2.0 * tp / denom : 0.0;
}

double weighted_f1(const ConfusionMatrix& cm) {
  long long total = cm.total();
  if (total <= 0) throw std::invalid_argument("weighted_f1: empty confusion matrix");
  double acc = 0.0;
  for (int c = 0; c < cm.n; ++c) {
    long long support = 0;
    for (int j = 0; j < cm.n; ++j) support += cm.at(c, j);
    if (support > 0) acc += support * class_f1(cm, c);
  }
  return acc / total;
}

double roc_auc(const std::vector<ScoredAnchor>& anchors) {
  long long p = 0, n = 0;
  for (const auto& a : anchors) (a.positive ? p : n)++;
  if (p == 0 || n == 0)
    throw std::invalid_argument(std::string("roc_auc: no ") +
                                (p == 0 ? "positive" : "negative") + " anchors");
  std::vector<size_t> idx(anchors.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](size_t x, size_t y) {
    return anchors[x].score < anchors[y].score;
  });
  // Average ranks over tie groups.
  double rank_sum_pos = 0.0;
  size_t i = 0;
  while (i < idx.size()) {
    size_t j = i;
    while (j < idx.size() && anchors[idx[j]].score == anchors[idx[i]].score) ++j;
    double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (size_t k = i; k < j; ++k)
      if (anchors[idx[k]].positive) rank_sum_pos += avg_rank;
    i = j;
  }
  double u = rank_sum_pos - static_cast<double>(p) * (p + 1) / 2.0;
  return u / (static_cast<double>(p) * static_cast<double>(n));
}

double eer(const std::vector<ScoredAnchor>& anchors) {
  long long p = 0, n = 0;
  for (const auto& a : anchors) (a.positive ? p : n)++;
  if (p == 0 || n == 0)
    throw std::invalid_argument("eer: both classes required");

  // Operating points: thresholds at +inf then each distinct score in
  // descending order; predict positive when score >= threshold.
  std::vector<ScoredAnchor> s(anchors);
  std::sort(s.begin(), s.end(),
            [](const ScoredAnchor& x, const ScoredAnchor& y) { return x.score > y.score; });
  struct Pt {
    double far, frr;
  };
  std::vector<Pt> pts;
  pts.push_back({0.0, 1.0});
  long long tp = 0, fp = 0;
  size_t i = 0;
  while (i < s.size()) {
    size_t j = i;
    while (j < s.size() && s[j].score == s[i].score) {
      (s[j].positive ? tp : fp)++;
      ++j;
    }
    pts.push_back({static_cast<double>(fp) / n,
                   static_cast<double>(p - tp) / p});
    i = j;
  }
  for (size_t k = 0; k < pts.size(); ++k) {
    double d = pts[k].far - pts[k].frr;
    if (d == 0.0) return pts[k].far;
    if (d > 0.0) {
      // Crossing between k-1 and k (d was negative before).
      const Pt& a = pts[k - 1];
      const Pt& b = pts[k];
      double da = a.far - a.frr, db = b.far - b.frr;
      double t = da / (da - db);
      return a.far + t * (b.far - a.far);
    }
  }
  return pts.back().far;  // unreachable: final point has far = 1, frr = 0
}

void ActionEvalResult::finalize() {
  long long total = cm.total();
  for (int c = 0; c < kNumActions; ++c) {
    f1[c] = class_f1(cm, c);
    long long sup = 0;
    for (int j = 0; j < kNumActions; ++j) sup += cm.at(c, j);
    prior[c] = total > 0 ? static_cast<double>(sup) / total : 0.0;
  }
  wf1 = weighted_f1(cm);
}

void accumulate_agent_actions(ActionEvalResult& r,
                              const std::vector<ActionEvent>& truth,
                              const std::vector<ActionEvent>& predictions,
                              int matching_window_frames) {
  if (matching_window_frames < 1)
    throw std::invalid_argument("agent-action eval: window below one frame");
  for (const auto& tr : truth) {
    int best_dist = std::numeric_limits<int>::max();
    const ActionEvent* best = nullptr;
    for (const auto& pr : predictions) {
      int d = std::abs(pr.frame - tr.frame);
      if (d < best_dist) {
        best_dist = d;
        best = &pr;
      }
    }
    ActionKind pred = ActionKind::CL;  // fallback on miss
    if (best && best_dist <= matching_window_frames) pred = best->kind;
    r.cm.at(static_cast<int>(tr.kind), static_cast<int>(pred))++;
  }
}

ActionEvalResult eval_agent_actions(const std::vector<ActionEvent>& truth,
                                    const std::vector<ActionEvent>& predictions,
                                    double matching_window_ms, const FrameRate& rate) {
  ActionEvalResult r;
  accumulate_agent_actions(r, truth, predictions,
                           duration_to_frames(matching_window_ms, rate));
  r.finalize();
  return r;
}

std::vector<ActionEvent> chance_decisions(size_t n_frames, const FrameRate& rate,
                                          Channel agent_channel, uint64_t seed,
                                          double actions_per_s) {
  std::mt19937_64 rng(seed);
  double p_frame = actions_per_s / rate.fps;
  std::vector<ActionEvent> out;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> cls(0, kNumActions - 1);
  for (size_t f = 0; f < n_frames; ++f)
    if (u(rng) < p_frame)
      out.push_back({static_cast<ActionKind>(cls(rng)), static_cast<int>(f),
                     agent_channel});
  return out;
}

VapCounts& VapCounts::operator+=(const VapCounts& o) {
  shift_hold += o.shift_hold;
  short_long += o.short_long;
  shift_pred += o.shift_pred;
  bc_pred += o.bc_pred;
  return *this;
}

VapCounts eval_vap_protocol(const ActivityTimeline& truth,
                            const SignalEstimates& est, double window_ms) {
  truth.validate();
  VapCounts out;
  int W = duration_to_frames(window_ms, truth.rate);
  int region = duration_to_frames(window_ms / 2.0, truth.rate);
  LabelConfig lcfg;  // 1 s BC/BOT terms below reuse the defaults

  for (Channel c : {Channel::A, Channel::B}) {
    auto segs = extract_segments(truth, c);
    auto other_segs = extract_segments(truth, other(c));
    const auto& other_vad = truth.channel(other(c));
    const auto& e = est.channel(c);
    int n = static_cast<int>(truth.frames());

    int bc_max = duration_to_frames(lcfg.bc_max_dur_ms, truth.rate);
    std::vector<int> other_floor;
    for (size_t i = 0; i < other_segs.size(); ++i)
      if (!is_bc_segment(other_segs, i, n, bc_max, bc_max))
        other_floor.push_back(other_segs[i].onset);

    // Shift/Hold at mutual-silence offsets + Shift-Prediction regions.
    for (size_t i = 0; i < segs.size(); ++i) {
      int off = segs[i].last_frame();
      if (other_vad[off]) continue;
      if (off + 1 < n && other_vad[off + 1]) continue;
      long long own_next = (i + 1 < segs.size())
                               ? segs[i + 1].onset
                               : std::numeric_limits<long long>::max();
      auto it = std::upper_bound(other_floor.begin(), other_floor.end(), off);
      long long oth_next = (it != other_floor.end())
                               ? *it
                               : std::numeric_limits<long long>::max();
      if (own_next == oth_next) continue;
      long long first = std::min(own_next, oth_next);
      if (first - off > W) continue;
      bool shift = oth_next < own_next;
      bool pred_shift = e.eot[off] > 0.5;
      out.shift_hold.at(shift ? 1 : 0, pred_shift ? 1 : 0)++;
      for (int t = std::max(0, off - region); t < off; ++t) {
        double score = 0.5 * (1.0 + e.eot[t] - e.hold[t]);
        out.shift_pred.at(shift ? 1 : 0, score > 0.5 ? 1 : 0)++;
      }
    }

    // Short/Long at onsets.
    int one_s = W;
    for (const auto& s : segs) {
      bool is_long = s.duration() >= one_s;
      bool pred_long = e.fvad[2][s.onset] > 0.5;
      out.short_long.at(is_long ? 1 : 0, pred_long ? 1 : 0)++;
    }

    // BC-Prediction: regions before BC onsets (positive) vs before
    // substantial (BOT-qualifying) onsets (negative).
    auto bc_imp = derive_bc(truth, c, lcfg);
    auto bot_imp = derive_bot(truth, c, lcfg);
    for (int o = 0; o < n; ++o) {
      bool pos = bc_imp[o] == 1.0;
      bool neg = bot_imp[o] == 1.0;
      if (!pos && !neg) continue;
      for (int t = std::max(0, o - region); t < o; ++t) {
        double score = 0.5 * (1.0 + e.bc[t] - e.bot[t]);
        out.bc_pred.at(pos ? 1 : 0, score > 0.5 ? 1 : 0)++;
      }
    }
  }
  return out;
}

VapResult vap_wf1(const VapCounts& c) {
  return {weighted_f1(c.shift_hold), weighted_f1(c.short_long),
          weighted_f1(c.shift_pred), weighted_f1(c.bc_pred)};
}

std::vector<WordScore> word_level_scores(const ActivityTimeline& t,
                                         const SignalEstimates& est,
                                         const std::vector<WordBoundary>& boundaries,
                                         const ActionConfig& cfg) {
  constexpr double kEventThresh = 0.999;  // smoothed labels hit 1 only at events
  int st_w = duration_to_frames(cfg.st_window_ms, t.rate);
  int n = static_cast<int>(t.frames());
  std::vector<WordScore> out;
  out.reserve(boundaries.size());
  for (const auto& bd : boundaries) {
    const auto& own = est.channel(bd.channel);
    const auto& oth = est.channel(other(bd.channel));
    int b = bd.frame;
    if (b < 0 || b >= n) throw std::invalid_argument("word boundary out of range");
    double graded_t = own.eot[b];
    if (b + 1 < n) graded_t = std::max(graded_t, own.eot[b + 1]);
    bool bit_t = graded_t >= kEventThresh;
    double graded_b = 0.0;
    int hi = std::min(b + st_w, n - 1);
    for (int f = b + 1; f <= hi; ++f) graded_b = std::max(graded_b, oth.bc[f]);
    bool bit_b = graded_b >= kEventThresh && !bit_t;
    WordScore s;
    s.t = 0.5 * bit_t + 0.5 * graded_t;
    s.b = 0.5 * bit_b + 0.5 * graded_b;
    s.c = 0.5 * (!bit_t && !bit_b) + 0.5 * (1.0 - std::max(graded_t, graded_b));
    out.push_back(s);
  }
  return out;
}

WordLevelResult eval_word_level(const std::vector<WordClass>& truth,
                                const std::vector<WordScore>& scores) {
  if (truth.size() != scores.size())
    throw std::invalid_argument("eval_word_level: size mismatch");
  bool has[3] = {false, false, false};
  for (auto w : truth) has[static_cast<int>(w)] = true;
  for (int c = 0; c < 3; ++c)
    if (!has[c])
      throw std::invalid_argument(std::string("eval_word_level: class absent: ") +
                                  word_class_name(static_cast<WordClass>(c)));
  auto one_vs_rest = [&](WordClass cls, auto get) {
    std::vector<ScoredAnchor> a;
    a.reserve(truth.size());
    for (size_t i = 0; i < truth.size(); ++i)
      a.push_back({get(scores[i]), truth[i] == cls});
    return a;
  };
  auto ac = one_vs_rest(WordClass::C, [](const WordScore& s) { return s.c; });
  auto ab = one_vs_rest(WordClass::B, [](const WordScore& s) { return s.b; });
  auto at = one_vs_rest(WordClass::T, [](const WordScore& s) { return s.t; });
  WordLevelResult r;
  r.auc_c = roc_auc(ac);
  r.auc_b = roc_auc(ab);
  r.auc_t = roc_auc(at);
  r.avg = (r.auc_c + r.auc_b + r.auc_t) / 3.0;
  std::vector<ScoredAnchor> pooled;
  pooled.reserve(truth.size() * 3);
  for (const auto& v : {ac, ab, at}) pooled.insert(pooled.end(), v.begin(), v.end());
  r.eer = eer(pooled);
  return r;
}

std::vector<AnticipationRow> anticipation_report(
    const std::map<double, std::vector<ScoredAnchor>>& traces) {
  std::vector<AnticipationRow> out;
  for (const auto& [delta, anchors] : traces) {
    AnticipationRow row;
    row.delta_ms = delta;
    row.n = static_cast<long long>(anchors.size());
    row.auc = anchors.empty() ? 0.0 : roc_auc(anchors);
    out.push_back(row);
  }
  return out;
}

}  // namespace dualturn
