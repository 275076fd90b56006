// fusion.hpp
//
// Turning per-frame signal estimates into discrete agent actions at
// candidate anchors. Two policies: an ordered threshold rule list, and a
// multinomial logistic-regression probe fit on anchor feature snapshots.

#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "dualturn/actions.hpp"
#include "dualturn/labels.hpp"

namespace dualturn {

// Where a decision may be taken, detected from thresholded user/agent VAD.
enum class AnchorKind { UserOffset, OverlapOnset, AgentOnset };
const char* anchor_kind_name(AnchorKind k);

struct Anchor {
  AnchorKind kind;
  size_t frame = 0;
};

// Candidate anchors for one session, from the *agent's* perspective:
// `agent` names the channel the agent would speak on; the other channel
// is the user. VAD estimates are thresholded at `vad_thresh`.
std::vector<Anchor> detect_anchors(const SignalEstimates& est, Channel agent,
                                   double vad_thresh = 0.5);

// The 18-value signal snapshot at a frame, user channel first.
// Order: user {eot,hold,bot,bc,vad,fvad0..3}, then agent likewise.
std::array<double, 18> anchor_features(const SignalEstimates& est, Channel agent,
                                       size_t frame);

// ---------------------------------------------------------------------------
// Threshold heuristics: an ordered rule list per anchor kind. The first
// rule whose conjunction of comparisons passes wins; each anchor kind
// has a fallback action.

struct RuleTerm {
  int feature = 0;      // index into anchor_features order
  bool greater = true;  // feature > thresh (else <=)
  double thresh = 0.5;
};

struct Rule {
  AnchorKind kind;
  std::vector<RuleTerm> terms;
  ActionKind action;
};

struct HeuristicRules {
  std::string policy_id = "heuristic-v1";
  std::vector<Rule> rules;
  ActionKind fallback_user_offset = ActionKind::CL;
  ActionKind fallback_overlap_onset = ActionKind::CT;
  // No fallback at agent onsets: silence unless a rule fires.

  static HeuristicRules defaults();
  std::string to_json() const;
  static HeuristicRules from_json(const std::string& text);
};

// Feature indices into the anchor_features snapshot.
namespace feat {
constexpr int kUserEot = 0, kUserHold = 1, kUserBot = 2, kUserBc = 3,
              kUserVad = 4, kUserFvad0 = 5, kUserFvad1 = 6, kUserFvad2 = 7,
              kUserFvad3 = 8;
constexpr int kAgentEot = 9, kAgentHold = 10, kAgentBot = 11, kAgentBc = 12,
              kAgentVad = 13, kAgentFvad0 = 14, kAgentFvad1 = 15,
              kAgentFvad2 = 16, kAgentFvad3 = 17;
}  // namespace feat

// Returns the chosen action, or nullopt for "stay silent".
std::optional<ActionKind> heuristic_decide(const HeuristicRules& rules,
                                           AnchorKind kind,
                                           const std::array<double, 18>& x);

// Run the heuristic policy over a whole session, emitting action events.
std::vector<ActionEvent> heuristic_actions(const HeuristicRules& rules,
                                           const SignalEstimates& est,
                                           Channel agent, double vad_thresh = 0.5);

// ---------------------------------------------------------------------------
// Multinomial logistic-regression probe over the 18-dim snapshot
// (plus bias), trained full-batch with backtracking line search.

struct LRProbe {
  // W is kNumActions x 19 (bias last), row-major.
  std::vector<double> w = std::vector<double>(kNumActions * 19, 0.0);

  std::array<double, kNumActions> predict_proba(
      const std::array<double, 18>& x) const;
  ActionKind predict(const std::array<double, 18>& x) const;

  std::string to_json() const;
  static LRProbe from_json(const std::string& text);
};

struct LRFitConfig {
  int max_iters = 300;
  double grad_tol = 1e-6;   // stop when ||grad||_inf below this
  double l2 = 1e-4;
  bool class_weighted = false;  // inverse-frequency example weights
};

struct LRFitReport {
  int iters = 0;
  double final_loss = 0.0;
  double grad_norm = 0.0;
  std::array<size_t, kNumActions> class_counts{};
};

// Labels index ActionKind order. Classes absent from the training set
// keep zero rows (and zero weight in the loss).
LRFitReport lr_fit(LRProbe& probe, const std::vector<std::array<double, 18>>& xs,
                   const std::vector<int>& ys, const LRFitConfig& cfg = {});

}  // namespace dualturn
