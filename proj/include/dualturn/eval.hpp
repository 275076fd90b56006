// eval.hpp
//
// Metric kernels (weighted F1, ROC AUC, EER) and the four evaluation
// protocols: 5-class agent actions, frame-level VAP events, word-level
// C/B/T prediction, and anticipation curves.

#pragma once

#include <array>
#include <map>
#include <vector>

#include "dualturn/actions.hpp"
#include "dualturn/labels.hpp"
#include "dualturn/timeline.hpp"

namespace dualturn {

struct ConfusionMatrix {
  int n = 5;
  std::vector<long long> counts;

  explicit ConfusionMatrix(int classes = 5) : n(classes), counts(classes * classes, 0) {}
  long long& at(int truth, int pred) { return counts[truth * n + pred]; }
  long long at(int truth, int pred) const { return counts[truth * n + pred]; }
  long long total() const;
  ConfusionMatrix& operator+=(const ConfusionMatrix& o);
};

// Support-weighted mean of per-class F1 (F1 = 0 when precision+recall = 0).
double weighted_f1(const ConfusionMatrix& cm);
double class_f1(const ConfusionMatrix& cm, int cls);

struct ScoredAnchor {
  double score = 0.0;
  bool positive = false;
};

// Mann-Whitney AUC via average ranks (exact under ties).
double roc_auc(const std::vector<ScoredAnchor>& anchors);

// Equal error rate on the raw threshold sweep (predict positive when
// score >= threshold), linearly interpolated between adjacent operating
// points when no exact crossing. Higher score = more positive; no
// orientation flip.
double eer(const std::vector<ScoredAnchor>& anchors);

// ---------------------------------------------------------------------------
// Protocol 1: 5-class agent actions.

struct ActionEvalResult {
  ConfusionMatrix cm{5};
  std::array<double, kNumActions> f1{};
  double wf1 = 0.0;
  std::array<double, kNumActions> prior{};  // truth class distribution

  void finalize();
};

// Matches each truth anchor to the nearest prediction within the window
// (frames); unmatched truth counts as a miss scored as the fallback
// action (CL). Predictions with no truth anchor nearby are ignored: the
// protocol classifies truth anchors.
void accumulate_agent_actions(ActionEvalResult& r,
                              const std::vector<ActionEvent>& truth,
                              const std::vector<ActionEvent>& predictions,
                              int matching_window_frames);

ActionEvalResult eval_agent_actions(const std::vector<ActionEvent>& truth,
                                    const std::vector<ActionEvent>& predictions,
                                    double matching_window_ms, const FrameRate& rate);

// Chance reference: uniform-class decisions emitted at an average rate
// of `actions_per_s` at uniform-random frames.
std::vector<ActionEvent> chance_decisions(size_t n_frames, const FrameRate& rate,
                                          Channel agent_channel, uint64_t seed,
                                          double actions_per_s = 1.0);

// ---------------------------------------------------------------------------
// Protocol 2: frame-level VAP events (1 s bidirectional conditions).

struct VapCounts {
  ConfusionMatrix shift_hold{2};
  ConfusionMatrix short_long{2};
  ConfusionMatrix shift_pred{2};
  ConfusionMatrix bc_pred{2};

  VapCounts& operator+=(const VapCounts& o);
};

struct VapResult {
  double sh_wf1, sl_wf1, sp_wf1, bcp_wf1;
};

VapCounts eval_vap_protocol(const ActivityTimeline& truth,
                            const SignalEstimates& est, double window_ms = 1000.0);
VapResult vap_wf1(const VapCounts& c);

// ---------------------------------------------------------------------------
// Protocol 3: word-level C/B/T.

struct WordScore {
  double c = 0.0, b = 0.0, t = 0.0;
};

// Per-boundary score triples from per-frame estimates: for each class, a
// hard event-condition bit (thresholded near 1, mirroring the class
// definitions) plus a graded term from the raw estimates, equally
// weighted.
std::vector<WordScore> word_level_scores(const ActivityTimeline& t,
                                         const SignalEstimates& est,
                                         const std::vector<WordBoundary>& boundaries,
                                         const ActionConfig& cfg);

struct WordLevelResult {
  double auc_c = 0.0, auc_b = 0.0, auc_t = 0.0, avg = 0.0, eer = 0.0;
};

WordLevelResult eval_word_level(const std::vector<WordClass>& truth,
                                const std::vector<WordScore>& scores);

// ---------------------------------------------------------------------------
// Protocol 4: anticipation curves.

struct AnticipationRow {
  double delta_ms = 0.0;
  double auc = 0.0;
  long long n = 0;
};

// One ScoredAnchor list per time offset (map key: delta in ms).
std::vector<AnticipationRow> anticipation_report(
    const std::map<double, std::vector<ScoredAnchor>>& traces);

}  // namespace dualturn
