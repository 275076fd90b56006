// dualturn CLI: synth | label | train | fit-probe | run | eval | ablate.
//
// All commands read an optional pipeline config (JSON, unknown keys
// rejected) whose hash and seed are echoed into every artifact.
// Exit codes: 0 success, 2 validation/config error, 3 runtime failure.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "dualturn/eval.hpp"
#include "dualturn/experiment.hpp"
#include "dualturn/fusion.hpp"
#include "dualturn/io.hpp"
#include "dualturn/model.hpp"
#include "dualturn/stream.hpp"
#include "dualturn/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dualturn;

namespace {

struct PipelineConfig {
  uint64_t seed = 1;
  int sessions = 20;
  LabelConfig labels;
  ActionConfig actions;
  GeneratorConfig generator;
  TrainConfig train;
  ModelConfig model;
  StreamConfig stream;
  double fusion_vad_thresh = 0.5;
  double eval_matching_window_ms = 240.0;

  json echo;  // effective config as parsed (for artifact embedding)
};

void reject_unknown(const json& j, const std::vector<std::string>& known,
                    const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw std::invalid_argument("unknown config key " + where + "." + it.key());
}

template <typename T>
void get_if(const json& j, const char* key, T& into) {
  if (j.contains(key)) into = j.at(key).get<T>();
}

PipelineConfig load_config(const std::string& path) {
  PipelineConfig c;
  json j = json::object();
  std::string p = path;
  if (p.empty())
    if (const char* env = std::getenv("DUALTURN_CONFIG")) p = env;
  if (!p.empty()) j = json::parse(read_file(p));
  reject_unknown(j, {"seed", "sessions", "labels", "actions", "generator", "train",
                     "model", "stream", "fusion", "eval"}, "");
  get_if(j, "seed", c.seed);
  get_if(j, "sessions", c.sessions);
  if (j.contains("labels")) {
    const json& s = j["labels"];
    reject_unknown(s, {"eot_lookahead_ms", "bot_min_dur_ms", "bc_max_dur_ms",
                       "bc_isolation_ms", "smooth_sigma_before_frames",
                       "smooth_sigma_after_frames", "smooth_truncation_sigmas"},
                   "labels");
    get_if(s, "eot_lookahead_ms", c.labels.eot_lookahead_ms);
    get_if(s, "bot_min_dur_ms", c.labels.bot_min_dur_ms);
    get_if(s, "bc_max_dur_ms", c.labels.bc_max_dur_ms);
    get_if(s, "bc_isolation_ms", c.labels.bc_isolation_ms);
    get_if(s, "smooth_sigma_before_frames", c.labels.smooth_sigma_before_frames);
    get_if(s, "smooth_sigma_after_frames", c.labels.smooth_sigma_after_frames);
    get_if(s, "smooth_truncation_sigmas", c.labels.smooth_truncation_sigmas);
  }
  if (j.contains("actions")) {
    const json& s = j["actions"];
    reject_unknown(s, {"st_window_ms", "cl_window_ms", "overlap_long_ms",
                       "bc_max_dur_ms"}, "actions");
    get_if(s, "st_window_ms", c.actions.st_window_ms);
    get_if(s, "cl_window_ms", c.actions.cl_window_ms);
    get_if(s, "overlap_long_ms", c.actions.overlap_long_ms);
    get_if(s, "bc_max_dur_ms", c.actions.bc_max_dur_ms);
  }
  if (j.contains("generator")) {
    const json& s = j["generator"];
    reject_unknown(s, {"session_len_frames", "frame_rate_fps", "mean_utterance_ms",
                       "mean_gap_ms", "pause_resume_prob", "long_pause_prob",
                       "backchannel_rate_per_min", "overlap_rate_per_min",
                       "short_overlap_prob", "word_rate_per_s"}, "generator");
    get_if(s, "session_len_frames", c.generator.session_len_frames);
    get_if(s, "frame_rate_fps", c.generator.frame_rate_fps);
    get_if(s, "mean_utterance_ms", c.generator.mean_utterance_ms);
    get_if(s, "mean_gap_ms", c.generator.mean_gap_ms);
    get_if(s, "pause_resume_prob", c.generator.pause_resume_prob);
    get_if(s, "long_pause_prob", c.generator.long_pause_prob);
    get_if(s, "backchannel_rate_per_min", c.generator.backchannel_rate_per_min);
    get_if(s, "overlap_rate_per_min", c.generator.overlap_rate_per_min);
    get_if(s, "short_overlap_prob", c.generator.short_overlap_prob);
    get_if(s, "word_rate_per_s", c.generator.word_rate_per_s);
  }
  if (j.contains("train")) {
    const json& s = j["train"];
    reject_unknown(s, {"lr_stage1", "lr_stage2", "batch_size", "max_epochs_stage1",
                       "max_epochs_stage2", "early_stop_patience", "focal_gamma",
                       "focal_alpha", "stage2_freeze_backbone",
                       "aux_generative_weight"}, "train");
    get_if(s, "lr_stage1", c.train.lr_stage1);
    get_if(s, "lr_stage2", c.train.lr_stage2);
    get_if(s, "batch_size", c.train.batch_size);
    get_if(s, "max_epochs_stage1", c.train.max_epochs_stage1);
    get_if(s, "max_epochs_stage2", c.train.max_epochs_stage2);
    get_if(s, "early_stop_patience", c.train.early_stop_patience);
    get_if(s, "focal_gamma", c.train.focal_gamma);
    get_if(s, "focal_alpha", c.train.focal_alpha);
    get_if(s, "stage2_freeze_backbone", c.train.stage2_freeze_backbone);
    get_if(s, "aux_generative_weight", c.train.aux_generative_weight);
  }
  if (j.contains("model")) {
    const json& s = j["model"];
    reject_unknown(s, {"proj_dim", "hidden", "head_hidden"}, "model");
    get_if(s, "proj_dim", c.model.proj_dim);
    get_if(s, "hidden", c.model.hidden);
    get_if(s, "head_hidden", c.model.head_hidden);
  }
  if (j.contains("stream")) {
    const json& s = j["stream"];
    reject_unknown(s, {"stride_frames", "debounce_strides", "min_gap_strides",
                       "vad_thresh"}, "stream");
    get_if(s, "stride_frames", c.stream.stride_frames);
    get_if(s, "debounce_strides", c.stream.debounce_strides);
    get_if(s, "min_gap_strides", c.stream.min_gap_strides);
    get_if(s, "vad_thresh", c.stream.vad_thresh);
  }
  if (j.contains("fusion")) {
    reject_unknown(j["fusion"], {"vad_thresh"}, "fusion");
    get_if(j["fusion"], "vad_thresh", c.fusion_vad_thresh);
  }
  if (j.contains("eval")) {
    reject_unknown(j["eval"], {"matching_window_ms"}, "eval");
    get_if(j["eval"], "matching_window_ms", c.eval_matching_window_ms);
  }
  c.labels.validate();
  c.actions.validate();
  c.generator.seed = c.seed;
  c.generator.validate();
  c.train.seed = c.seed;
  c.train.validate();
  c.model.validate();
  c.stream.validate();
  c.echo = j;
  return c;
}

json config_stamp(const PipelineConfig& c) {
  return {{"config", c.echo},
          {"config_hash", config_hash(c.echo.dump())},
          {"seed", c.seed},
          {"prng", kPrngId}};
}

// Session-level parallel for; work(i) must only touch slot i.
void parallel_for(size_t n, int jobs, const std::function<void(size_t)>& work) {
  jobs = std::max(1, jobs);
  if (jobs == 1 || n <= 1) {
    for (size_t i = 0; i < n; ++i) work(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  for (int k = 0; k < jobs; ++k)
    pool.emplace_back([&] {
      for (size_t i = next++; i < n; i = next++) work(i);
    });
  for (auto& th : pool) th.join();
}

std::vector<ActivityTimeline> load_corpus(const std::string& dir) {
  auto ts = timelines_from_jsonl(read_file(dir + "/timelines.jsonl"));
  if (ts.empty()) throw std::invalid_argument("empty corpus: " + dir);
  return ts;
}

SequenceModel load_checkpoint(const std::string& path) {
  return SequenceModel::from_json(read_file(path));
}

// ---------------------------------------------------------------------------

int cmd_synth(const PipelineConfig& cfg, const std::string& out_dir, int sessions) {
  fs::create_directories(out_dir);
  auto corpus = generate_corpus(cfg.generator, sessions);
  std::vector<ActivityTimeline> ts;
  std::vector<std::pair<std::string, std::vector<ActionEvent>>> events;
  std::vector<std::pair<std::string, std::vector<WordBoundary>>> words;
  json ids = json::array();
  for (const auto& s : corpus) {
    ts.push_back(s.timeline);
    events.push_back({s.timeline.session_id, s.log.events});
    words.push_back({s.timeline.session_id, s.words});
    ids.push_back(s.timeline.session_id);
  }
  json meta = config_stamp(cfg);
  meta["sessions"] = sessions;
  meta["session_ids"] = ids;
  write_file_atomic(out_dir + "/timelines.jsonl", timelines_to_jsonl(ts));
  write_file_atomic(out_dir + "/events.csv", events_to_csv(events));
  write_file_atomic(out_dir + "/words.csv", words_to_csv(words));
  write_file_atomic(out_dir + "/segments.csv", segments_to_csv(ts));
  write_file_atomic(out_dir + "/meta.json", meta.dump(2) + "\n");
  std::cout << "wrote " << sessions << " sessions to " << out_dir << "\n";
  return 0;
}

int cmd_label(const PipelineConfig& cfg, const std::string& corpus_dir,
              const std::string& out_dir, int jobs) {
  fs::create_directories(out_dir);
  auto ts = load_corpus(corpus_dir);
  std::vector<std::string> chunks(ts.size());
  parallel_for(ts.size(), jobs, [&](size_t i) {
    DerivedLabels d = derive_all(ts[i], cfg.labels);
    chunks[i] = labels_to_csv(ts[i].session_id, d.smoothed);
  });
  std::string all;
  for (size_t i = 0; i < chunks.size(); ++i) {
    if (i > 0) {  // drop repeated headers
      auto pos = chunks[i].find('\n');
      chunks[i].erase(0, pos + 1);
    }
    all += chunks[i];
  }
  write_file_atomic(out_dir + "/labels.csv", all);
  json meta = config_stamp(cfg);
  meta["sessions"] = ts.size();
  write_file_atomic(out_dir + "/labels_meta.json", meta.dump(2) + "\n");
  std::cout << "labeled " << ts.size() << " sessions\n";
  return 0;
}

std::vector<TrainingSession> prepare_corpus(const std::vector<ActivityTimeline>& ts,
                                            const PipelineConfig& cfg, int jobs) {
  std::vector<TrainingSession> out(ts.size());
  parallel_for(ts.size(), jobs, [&](size_t i) {
    out[i] = prepare_session(ts[i], cfg.labels);
  });
  return out;
}

int cmd_train(const PipelineConfig& cfg, const std::string& corpus_dir,
              const std::string& stage, const std::string& variant_name,
              const std::string& init_path, const std::string& out_path, int jobs) {
  VariantConfig variant = variant_by_name(variant_name);
  auto ts = load_corpus(corpus_dir);
  auto sessions = prepare_corpus(ts, cfg, jobs);

  TrainConfig tc = cfg.train;
  tc.stage2_freeze_backbone = variant.freeze_backbone;
  tc.aux_generative_weight = variant.aux_weight;

  // Validation split for the Stage-2 early-stopping metric.
  size_t n_val = ts.size() >= 5 ? ts.size() / 5 : 0;
  std::vector<TrainingSession> train_set(sessions.begin(),
                                         sessions.end() - n_val);
  std::vector<ActivityTimeline> val_ts(ts.end() - n_val, ts.end());
  HeuristicRules rules = HeuristicRules::defaults();
  std::function<double(const SequenceModel&)> val_metric;
  if (n_val > 0)
    val_metric = [&](const SequenceModel& m) {
      return heuristic_corpus_wf1(m, val_ts, rules, cfg.actions, cfg.labels,
                                  cfg.eval_matching_window_ms);
    };

  SequenceModel model(cfg.model);
  TrainReport r1, r2;
  if (stage == "1") {
    model.init_params(tc.seed);
    r1 = pretrain_stage1(model, train_set, tc);
  } else if (stage == "2") {
    if (init_path.empty()) {
      if (variant.pretrain)
        throw std::invalid_argument(
            "--stage 2 needs --init <stage1 checkpoint> (or --variant scratch)");
      model.init_params(tc.seed);
    } else {
      model = load_checkpoint(init_path);
      if (model.stage() != TrainingStage::Stage1 && variant.pretrain)
        throw std::invalid_argument(
            "checkpoint is not Stage-1-complete; use --variant scratch to "
            "fine-tune from scratch");
    }
    r2 = finetune_stage2(model, train_set, tc, val_metric);
  } else if (stage == "both") {
    model.init_params(tc.seed);
    if (variant.pretrain) r1 = pretrain_stage1(model, train_set, tc);
    r2 = finetune_stage2(model, train_set, tc, val_metric);
  } else {
    throw std::invalid_argument("--stage must be 1, 2 or both");
  }

  json ck = json::parse(model.to_json());
  ck["pipeline"] = config_stamp(cfg);
  ck["variant"] = variant.name;
  write_file_atomic(out_path, ck.dump(2) + "\n");

  // Training log: one CSV row per epoch per stage.
  std::string log = "epoch,stage,loss,val_metric\n";
  auto append = [&](const TrainReport& r, const char* st) {
    for (size_t e = 0; e < r.epoch_loss.size(); ++e)
      log += std::to_string(e) + "," + st + "," + std::to_string(r.epoch_loss[e]) +
             "," + std::to_string(r.epoch_val[e]) + "\n";
  };
  append(r1, "1");
  append(r2, "2");
  write_file_atomic(out_path + ".log.csv", log);
  std::cout << "checkpoint " << out_path << " stage=" << stage_name(model.stage())
            << "\n";
  return 0;
}

int cmd_fit_probe(const PipelineConfig& cfg, const std::string& ckpt,
                  const std::string& corpus_dir, const std::string& out_path,
                  int jobs) {
  SequenceModel model = load_checkpoint(ckpt);
  auto ts = load_corpus(corpus_dir);
  std::vector<std::vector<std::array<double, 18>>> xs(ts.size());
  std::vector<std::vector<int>> ys(ts.size());
  int window = std::max(1, duration_to_frames(cfg.eval_matching_window_ms,
                                              ts[0].rate));
  parallel_for(ts.size(), jobs, [&](size_t i) {
    SignalEstimates est = model.forward(featurize(ts[i]));
    for (Channel agent : {Channel::A, Channel::B}) {
      auto truth = derive_actions(ts[i], agent, cfg.actions);
      for (const Anchor& a : detect_anchors(est, agent, cfg.fusion_vad_thresh)) {
        // Label each detected anchor with the nearest truth action.
        const ActionEvent* best = nullptr;
        int best_d = window + 1;
        for (const ActionEvent& e : truth) {
          int d = std::abs(e.frame - static_cast<int>(a.frame));
          if (d < best_d) {
            best_d = d;
            best = &e;
          }
        }
        if (!best) continue;
        xs[i].push_back(anchor_features(est, agent, a.frame));
        ys[i].push_back(static_cast<int>(best->kind));
      }
    }
  });
  std::vector<std::array<double, 18>> x;
  std::vector<int> y;
  for (size_t i = 0; i < ts.size(); ++i) {
    x.insert(x.end(), xs[i].begin(), xs[i].end());
    y.insert(y.end(), ys[i].begin(), ys[i].end());
  }
  LRProbe probe;
  LRFitReport rep = lr_fit(probe, x, y);
  json out = json::parse(probe.to_json());
  out["pipeline"] = config_stamp(cfg);
  out["fit"] = {{"iters", rep.iters},
                {"final_loss", rep.final_loss},
                {"grad_norm", rep.grad_norm},
                {"examples", x.size()}};
  write_file_atomic(out_path, out.dump(2) + "\n");
  std::cout << "probe fit on " << x.size() << " anchors, loss " << rep.final_loss
            << "\n";
  return 0;
}

int cmd_run(const PipelineConfig& cfg, const std::string& ckpt,
            const std::string& rules_path, const std::string& corpus_dir,
            const std::string& out_dir, int jobs) {
  SequenceModel model = load_checkpoint(ckpt);
  HeuristicRules rules = rules_path.empty() ? HeuristicRules::defaults()
                                            : HeuristicRules::from_json(
                                                  read_file(rules_path));
  auto ts = load_corpus(corpus_dir);
  fs::create_directories(out_dir);
  std::vector<std::string> logs(ts.size());
  std::vector<TimingReport> timings(ts.size());
  parallel_for(ts.size(), jobs, [&](size_t i) {
    ModelSource src(model);
    StreamRunResult r = run_session(src, rules, ts[i], Channel::B, cfg.stream);
    logs[i] = decisions_to_jsonl(ts[i].session_id, r.decisions);
    timings[i] = r.timing;
  });
  std::string all;
  for (auto& l : logs) all += l;
  write_file_atomic(out_dir + "/decisions.jsonl", all);
  TimingReport agg;
  double p50 = 0, p95 = 0, rtf = 0;
  for (const auto& t : timings) {
    p50 += t.p50_ms;
    p95 = std::max(p95, t.p95_ms);
    rtf += t.realtime_factor;
    agg.strides += t.strides;
  }
  agg.p50_ms = p50 / timings.size();
  agg.p95_ms = p95;
  agg.realtime_factor = rtf / timings.size();
  json meta = config_stamp(cfg);
  meta["timing"] = json::parse(timing_to_json(agg));
  write_file_atomic(out_dir + "/timing.json", meta.dump(2) + "\n");
  std::cout << "ran " << ts.size() << " sessions; mean RTF "
            << agg.realtime_factor << "\n";
  return 0;
}

int cmd_eval(const PipelineConfig& cfg, const std::string& protocol,
             const std::string& corpus_dir, const std::string& ckpt,
             const std::string& out_path, int jobs) {
  auto ts = load_corpus(corpus_dir);
  SequenceModel model = load_checkpoint(ckpt);
  std::vector<SignalEstimates> ests(ts.size());
  parallel_for(ts.size(), jobs, [&](size_t i) {
    ests[i] = model.forward(featurize(ts[i]));
  });
  json report = config_stamp(cfg);
  report["protocol"] = protocol;

  if (protocol == "actions") {
    HeuristicRules rules = HeuristicRules::defaults();
    ActionEvalResult r;
    int window = std::max(1, duration_to_frames(cfg.eval_matching_window_ms,
                                                ts[0].rate));
    for (size_t i = 0; i < ts.size(); ++i)
      for (Channel agent : {Channel::A, Channel::B}) {
        auto truth = derive_actions(ts[i], agent, cfg.actions);
        auto pred = heuristic_actions(rules, ests[i], agent,
                                      cfg.fusion_vad_thresh);
        accumulate_agent_actions(r, truth, pred, window);
      }
    r.finalize();
    report["wf1"] = r.wf1;
    for (int k = 0; k < kNumActions; ++k) {
      report["f1"][action_name(static_cast<ActionKind>(k))] = r.f1[k];
      report["prior"][action_name(static_cast<ActionKind>(k))] = r.prior[k];
    }
  } else if (protocol == "vap") {
    VapCounts c;
    for (size_t i = 0; i < ts.size(); ++i) c += eval_vap_protocol(ts[i], ests[i]);
    VapResult v = vap_wf1(c);
    report["shift_hold_wf1"] = v.sh_wf1;
    report["short_long_wf1"] = v.sl_wf1;
    report["shift_pred_wf1"] = v.sp_wf1;
    report["bc_pred_wf1"] = v.bcp_wf1;
  } else if (protocol == "word") {
    auto words = words_from_csv(read_file(corpus_dir + "/words.csv"));
    std::vector<WordClass> truth;
    std::vector<WordScore> scores;
    for (size_t i = 0; i < ts.size(); ++i) {
      const std::vector<WordBoundary>* wb = nullptr;
      for (const auto& [sid, w] : words)
        if (sid == ts[i].session_id) wb = &w;
      if (!wb) continue;
      auto tc = derive_word_level_classes(ts[i], *wb, cfg.actions);
      auto sc = word_level_scores(ts[i], ests[i], *wb, cfg.actions);
      truth.insert(truth.end(), tc.begin(), tc.end());
      scores.insert(scores.end(), sc.begin(), sc.end());
    }
    WordLevelResult w = eval_word_level(truth, scores);
    report["auc_c"] = w.auc_c;
    report["auc_b"] = w.auc_b;
    report["auc_t"] = w.auc_t;
    report["avg_auc"] = w.avg;
    report["eer"] = w.eer;
  } else if (protocol == "anticipation") {
    std::map<double, std::vector<ScoredAnchor>> traces;
    std::vector<double> deltas = {-10000, -2000, -960, -480, -240, 0};
    for (size_t i = 0; i < ts.size(); ++i) {
      DerivedLabels d = derive_all(ts[i], cfg.labels);
      shift_hold_traces(traces, ts[i], ests[i], d.impulses, deltas);
    }
    json rows = json::array();
    for (const AnticipationRow& r : anticipation_report(traces))
      rows.push_back({{"delta_ms", r.delta_ms}, {"auc", r.auc}, {"n", r.n}});
    report["curve"] = rows;
  } else {
    throw std::invalid_argument("unknown protocol: " + protocol);
  }
  write_file_atomic(out_path, report.dump(2) + "\n");
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_ablate(const PipelineConfig& cfg, const std::string& out_path, int jobs) {
  GeneratorConfig gen = cfg.generator;
  auto train_raw = generate_corpus(gen, cfg.sessions);
  GeneratorConfig gen_test = gen;
  gen_test.seed = gen.seed + 1000;
  auto test_raw = generate_corpus(gen_test, std::max(4, cfg.sessions / 2));

  std::vector<ActivityTimeline> train_ts, test_ts;
  for (auto& s : train_raw) train_ts.push_back(s.timeline);
  for (auto& s : test_raw) test_ts.push_back(s.timeline);
  auto train_set = prepare_corpus(train_ts, cfg, jobs);

  HeuristicRules rules = HeuristicRules::defaults();
  json rows = json::array();
  for (const char* name : {"full", "scratch", "frozen", "aux"}) {
    VariantConfig v = variant_by_name(name);
    TrainedVariant tv = train_variant(v, train_set, cfg.train, cfg.model);
    BinaryCounts bc, bot, vad;
    for (const auto& t : test_ts) {
      SignalEstimates est = tv.model.forward(featurize(t));
      DerivedLabels d = derive_all(t, cfg.labels);
      accumulate_onset_counts(bc, bot, t, est, d.impulses);
      accumulate_vad_counts(vad, t, est);
    }
    double wf1 = heuristic_corpus_wf1(tv.model, test_ts, rules, cfg.actions,
                                      cfg.labels, cfg.eval_matching_window_ms);
    rows.push_back({{"variant", name},
                    {"bc_f1", bc.f1()},
                    {"bot_f1", bot.f1()},
                    {"vad_acc", vad.accuracy()},
                    {"heuristic_wf1", wf1},
                    {"stage1_best_loss", tv.stage1.best_loss},
                    {"stage2_best_loss", tv.stage2.best_loss}});
    std::cout << name << ": bc_f1=" << bc.f1() << " bot_f1=" << bot.f1()
              << " vad_acc=" << vad.accuracy() << " wf1=" << wf1 << "\n";
  }
  json report = config_stamp(cfg);
  report["variants"] = rows;
  write_file_atomic(out_path, report.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dualturn: synthetic turn-taking pipeline"};
  app.require_subcommand(1);
  std::string config_path, corpus, out, ckpt, init, rules, stage = "both",
              variant = "full", protocol = "actions";
  int sessions = -1, jobs = 1;
  app.add_option("--config", config_path, "pipeline config JSON");
  app.add_option("--jobs", jobs, "session-level parallelism");

  auto* s_synth = app.add_subcommand("synth", "generate a synthetic corpus");
  s_synth->add_option("--out", out)->required();
  s_synth->add_option("--sessions", sessions);

  auto* s_label = app.add_subcommand("label", "derive signal labels");
  s_label->add_option("--corpus", corpus)->required();
  s_label->add_option("--out", out)->required();

  auto* s_train = app.add_subcommand("train", "train the sequence model");
  s_train->add_option("--corpus", corpus)->required();
  s_train->add_option("--stage", stage, "1, 2 or both");
  s_train->add_option("--variant", variant, "full|scratch|frozen|aux");
  s_train->add_option("--init", init, "initial checkpoint (stage 2)");
  s_train->add_option("--out", out)->required();

  auto* s_probe = app.add_subcommand("fit-probe", "fit the LR probe");
  s_probe->add_option("--checkpoint", ckpt)->required();
  s_probe->add_option("--corpus", corpus)->required();
  s_probe->add_option("--out", out)->required();

  auto* s_run = app.add_subcommand("run", "stream sessions through the policy");
  s_run->add_option("--checkpoint", ckpt)->required();
  s_run->add_option("--rules", rules);
  s_run->add_option("--corpus", corpus)->required();
  s_run->add_option("--out", out)->required();

  auto* s_eval = app.add_subcommand("eval", "evaluate a checkpoint");
  s_eval->add_option("--protocol", protocol, "actions|vap|word|anticipation");
  s_eval->add_option("--corpus", corpus)->required();
  s_eval->add_option("--checkpoint", ckpt)->required();
  s_eval->add_option("--out", out)->required();

  auto* s_ablate = app.add_subcommand("ablate", "compare training variants");
  s_ablate->add_option("--out", out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    PipelineConfig cfg = load_config(config_path);
    if (s_synth->parsed())
      return cmd_synth(cfg, out, sessions > 0 ? sessions : cfg.sessions);
    if (s_label->parsed()) return cmd_label(cfg, corpus, out, jobs);
    if (s_train->parsed())
      return cmd_train(cfg, corpus, stage, variant, init, out, jobs);
    if (s_probe->parsed()) return cmd_fit_probe(cfg, ckpt, corpus, out, jobs);
    if (s_run->parsed()) return cmd_run(cfg, ckpt, rules, corpus, out, jobs);
    if (s_eval->parsed()) return cmd_eval(cfg, protocol, corpus, ckpt, out, jobs);
    if (s_ablate->parsed()) return cmd_ablate(cfg, out, jobs);
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 3;
  }
}
