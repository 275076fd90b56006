#include "dualturn/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace dualturn {

const char* anchor_kind_name(AnchorKind k) {
  switch (k) {
    case AnchorKind::UserOffset: return "user_offset";
    case AnchorKind::OverlapOnset: return "overlap_onset";
    case AnchorKind::AgentOnset: return "agent_onset";
  }
  return "?";
}

static AnchorKind parse_anchor_kind(const std::string& s) {
  if (s == "user_offset") return AnchorKind::UserOffset;
  if (s == "overlap_onset") return AnchorKind::OverlapOnset;
  if (s == "agent_onset") return AnchorKind::AgentOnset;
  throw std::invalid_argument("unknown anchor kind: " + s);
}

std::vector<Anchor> detect_anchors(const SignalEstimates& est, Channel agent,
                                   double vad_thresh) {
  const ChannelSignals& ag = est.channel(agent);
  const ChannelSignals& us = est.channel(other(agent));
  size_t n = est.frames();
  std::vector<Anchor> out;
  auto on = [&](const ChannelSignals& c, size_t t) { return c.vad[t] > vad_thresh; };
  for (size_t t = 0; t < n; ++t) {
    bool u = on(us, t), u_prev = t > 0 && on(us, t - 1);
    bool a = on(ag, t);
    if (u_prev && !u && !a) out.push_back({AnchorKind::UserOffset, t});
    if (u && !u_prev && a) out.push_back({AnchorKind::OverlapOnset, t});
    bool a_prev = t > 0 && on(ag, t - 1);
    if (a && !a_prev && u) out.push_back({AnchorKind::AgentOnset, t});
  }
  return out;
}

std::array<double, 18> anchor_features(const SignalEstimates& est, Channel agent,
                                       size_t frame) {
  std::array<double, 18> x{};
  const ChannelSignals* chans[2] = {&est.channel(other(agent)), &est.channel(agent)};
  for (int c = 0; c < 2; ++c) {
    const ChannelSignals& s = *chans[c];
    double* o = x.data() + c * 9;
    o[0] = s.eot[frame];
    o[1] = s.hold[frame];
    o[2] = s.bot[frame];
    o[3] = s.bc[frame];
    o[4] = s.vad[frame];
    for (int k = 0; k < kNumFvadHorizons; ++k) o[5 + k] = s.fvad[k][frame];
  }
  return x;
}

// ---------------------------------------------------------------------------
// Heuristics.

HeuristicRules HeuristicRules::defaults() {
  using namespace feat;
  HeuristicRules r;
  r.rules = {
      // User offset: take the floor when the user's offset reads as an
      // end-of-turn, preferring the agreement of EOT with agent BOT.
      {AnchorKind::UserOffset,
       {{kUserEot, true, 0.5}, {kAgentBot, true, 0.5}},
       ActionKind::ST},
      {AnchorKind::UserOffset, {{kUserEot, true, 0.5}}, ActionKind::ST},
      // Overlap onset: yield when the user's incoming speech looks long.
      {AnchorKind::OverlapOnset, {{kUserFvad2, true, 0.5}}, ActionKind::SL},
      // Agent onset during user speech: backchannel when it reads as one.
      {AnchorKind::AgentOnset,
       {{kAgentBc, true, 0.5}, {kUserVad, true, 0.5}},
       ActionKind::BC},
  };
  return r;
}

std::optional<ActionKind> heuristic_decide(const HeuristicRules& rules,
                                           AnchorKind kind,
                                           const std::array<double, 18>& x) {
  for (const Rule& r : rules.rules) {
    if (r.kind != kind) continue;
    bool ok = true;
    for (const RuleTerm& t : r.terms) {
      double v = x[t.feature];
      if (t.greater ? !(v > t.thresh) : !(v <= t.thresh)) {
        ok = false;
        break;
      }
    }
    if (ok) return r.action;
  }
  switch (kind) {
    case AnchorKind::UserOffset: return rules.fallback_user_offset;
    case AnchorKind::OverlapOnset: return rules.fallback_overlap_onset;
    case AnchorKind::AgentOnset: return std::nullopt;
  }
  return std::nullopt;
}

std::vector<ActionEvent> heuristic_actions(const HeuristicRules& rules,
                                           const SignalEstimates& est,
                                           Channel agent, double vad_thresh) {
  std::vector<ActionEvent> out;
  for (const Anchor& a : detect_anchors(est, agent, vad_thresh)) {
    auto x = anchor_features(est, agent, a.frame);
    if (auto act = heuristic_decide(rules, a.kind, x))
      out.push_back({*act, static_cast<int>(a.frame), agent});
  }
  return out;
}

std::string HeuristicRules::to_json() const {
  nlohmann::json j;
  j["policy_id"] = policy_id;
  j["fallback_user_offset"] = action_name(fallback_user_offset);
  j["fallback_overlap_onset"] = action_name(fallback_overlap_onset);
  nlohmann::json rs = nlohmann::json::array();
  for (const Rule& r : rules) {
    nlohmann::json terms = nlohmann::json::array();
    for (const RuleTerm& t : r.terms)
      terms.push_back({{"feature", t.feature},
                       {"greater", t.greater},
                       {"thresh", t.thresh}});
    rs.push_back({{"anchor", anchor_kind_name(r.kind)},
                  {"terms", std::move(terms)},
                  {"action", action_name(r.action)}});
  }
  j["rules"] = std::move(rs);
  return j.dump(2);
}

HeuristicRules HeuristicRules::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  HeuristicRules r;
  r.policy_id = j.value("policy_id", "heuristic");
  r.fallback_user_offset = parse_action(j.at("fallback_user_offset"));
  r.fallback_overlap_onset = parse_action(j.at("fallback_overlap_onset"));
  for (const auto& jr : j.at("rules")) {
    Rule rule;
    rule.kind = parse_anchor_kind(jr.at("anchor"));
    rule.action = parse_action(jr.at("action"));
    for (const auto& jt : jr.at("terms")) {
      RuleTerm t;
      t.feature = jt.at("feature");
      t.greater = jt.at("greater");
      t.thresh = jt.at("thresh");
      if (t.feature < 0 || t.feature >= 18)
        throw std::invalid_argument("rule feature index out of range");
      rule.terms.push_back(t);
    }
    r.rules.push_back(std::move(rule));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Multinomial LR probe.

std::array<double, kNumActions> LRProbe::predict_proba(
    const std::array<double, 18>& x) const {
  std::array<double, kNumActions> logits{};
  for (int c = 0; c < kNumActions; ++c) {
    const double* row = w.data() + c * 19;
    double s = row[18];
    for (int j = 0; j < 18; ++j) s += row[j] * x[j];
    logits[c] = s;
  }
  double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double& l : logits) {
    l = std::exp(l - mx);
    sum += l;
  }
  for (double& l : logits) l /= sum;
  return logits;
}

ActionKind LRProbe::predict(const std::array<double, 18>& x) const {
  auto p = predict_proba(x);
  return static_cast<ActionKind>(
      std::max_element(p.begin(), p.end()) - p.begin());
}

std::string LRProbe::to_json() const {
  nlohmann::json j;
  j["format"] = "dualturn-lrprobe-v1";
  j["classes"] = kNumActions;
  j["dims"] = 19;
  j["w"] = w;
  return j.dump(2);
}

LRProbe LRProbe::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (j.value("format", "") != "dualturn-lrprobe-v1")
    throw std::invalid_argument("unrecognized probe format");
  LRProbe p;
  p.w = j.at("w").get<std::vector<double>>();
  if (p.w.size() != static_cast<size_t>(kNumActions) * 19)
    throw std::invalid_argument("probe weight size mismatch");
  return p;
}

namespace {

double lr_loss_and_grad(const LRProbe& probe,
                        const std::vector<std::array<double, 18>>& xs,
                        const std::vector<int>& ys,
                        const std::vector<double>& sample_w, double l2,
                        std::vector<double>* grad) {
  double total_w = 0.0;
  for (double wv : sample_w) total_w += wv;
  if (grad) grad->assign(probe.w.size(), 0.0);
  double loss = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    auto p = probe.predict_proba(xs[i]);
    double sw = sample_w[i] / total_w;
    loss -= sw * std::log(std::max(1e-300, p[ys[i]]));
    if (!grad) continue;
    for (int c = 0; c < kNumActions; ++c) {
      double d = sw * (p[c] - (c == ys[i] ? 1.0 : 0.0));
      double* g = grad->data() + c * 19;
      for (int j = 0; j < 18; ++j) g[j] += d * xs[i][j];
      g[18] += d;
    }
  }
  for (size_t k = 0; k < probe.w.size(); ++k) {
    loss += 0.5 * l2 * probe.w[k] * probe.w[k];
    if (grad) (*grad)[k] += l2 * probe.w[k];
  }
  return loss;
}

}  // namespace

LRFitReport lr_fit(LRProbe& probe, const std::vector<std::array<double, 18>>& xs,
                   const std::vector<int>& ys, const LRFitConfig& cfg) {
  if (xs.size() != ys.size()) throw std::invalid_argument("lr_fit: size mismatch");
  if (xs.empty()) throw std::invalid_argument("lr_fit: empty training set");
  LRFitReport rep;
  for (int y : ys) {
    if (y < 0 || y >= kNumActions)
      throw std::invalid_argument("lr_fit: label out of range");
    ++rep.class_counts[y];
  }
  std::vector<double> sw(xs.size(), 1.0);
  if (cfg.class_weighted) {
    for (size_t i = 0; i < xs.size(); ++i)
      sw[i] = static_cast<double>(xs.size()) /
              (kNumActions * static_cast<double>(rep.class_counts[ys[i]]));
  }

  std::vector<double> grad;
  double loss = lr_loss_and_grad(probe, xs, ys, sw, cfg.l2, &grad);
  double step = 1.0;
  for (int it = 0; it < cfg.max_iters; ++it) {
    double gmax = 0.0, gsq = 0.0;
    for (double g : grad) {
      gmax = std::max(gmax, std::abs(g));
      gsq += g * g;
    }
    rep.grad_norm = gmax;
    if (gmax < cfg.grad_tol) break;
    // Backtracking line search (Armijo) along -grad.
    double t = std::min(step * 2.0, 1e3);
    LRProbe trial = probe;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      for (size_t k = 0; k < probe.w.size(); ++k)
        trial.w[k] = probe.w[k] - t * grad[k];
      double trial_loss =
          lr_loss_and_grad(trial, xs, ys, sw, cfg.l2, nullptr);
      if (trial_loss <= loss - 1e-4 * t * gsq) {
        probe.w = trial.w;
        loss = trial_loss;
        step = t;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    ++rep.iters;
    if (!accepted) break;
    lr_loss_and_grad(probe, xs, ys, sw, cfg.l2, &grad);
  }
  rep.final_loss = loss;
  return rep;
}

}  // namespace dualturn
