// model.hpp
//
// Desk-scale sequence model: per-channel feature projections into a
// single-layer gated recurrent backbone with 12 signal heads (18 scalar
// outputs per frame pair) plus a next-frame generative head used in
// Stage-1 pretraining. Gradients are computed by hand and verified
// against finite differences.

#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dualturn/labels.hpp"
#include "dualturn/timeline.hpp"

namespace dualturn {

// ---------------------------------------------------------------------------
// Features: causal per-channel activity descriptors (6 dims per channel).

struct FeatureConfig {
  std::array<double, 3> ema_tau_frames = {2.0, 8.0, 32.0};
  double time_clip_frames = 100.0;

  static constexpr int kDimsPerChannel = 6;  // vad, 3 EMAs, t-since-on, t-since-off
  static constexpr int kDims = 2 * kDimsPerChannel;
};

struct FrameFeatures {
  size_t frames = 0;
  std::vector<double> x;  // frames x kDims, row-major

  const double* row(size_t t) const { return x.data() + t * FeatureConfig::kDims; }
};

// Streamable causal extractor: state advances one frame at a time.
class FeatureExtractor {
 public:
  explicit FeatureExtractor(const FeatureConfig& cfg = {});
  void reset();
  std::array<double, FeatureConfig::kDims> step(uint8_t vad_a, uint8_t vad_b);

 private:
  FeatureConfig cfg_;
  struct ChanState {
    std::array<double, 3> ema{};
    uint8_t prev_vad = 0;
    long t_since_on = -1;   // -1 = never seen
    long t_since_off = -1;
  };
  ChanState ch_[2];
};

FrameFeatures featurize(const ActivityTimeline& t, const FeatureConfig& cfg = {});

// ---------------------------------------------------------------------------
// Losses.

// Focal loss with soft targets:
//   -[a y (1-p)^g log p + (1-a)(1-y) p^g log(1-p)].
// At g=0, a=0.5 this is half the binary cross-entropy.
double focal_loss(double p, double y, double gamma, double alpha);
double focal_loss_dp(double p, double y, double gamma, double alpha);
double bce_loss(double p, double y);

// ---------------------------------------------------------------------------
// Model.

struct ModelConfig {
  int proj_dim = 8;
  int hidden = 64;
  int head_hidden = 16;

  int input_dim() const { return 2 * proj_dim; }
  void validate() const;
};

struct TrainConfig {
  double lr_stage1 = 0.01;
  double lr_stage2 = 0.01;
  int batch_size = 1;  // sessions per optimizer step
  int max_epochs_stage1 = 12;
  int max_epochs_stage2 = 8;
  int early_stop_patience = 3;
  double focal_gamma = 2.0;
  double focal_alpha = 0.25;
  // eot, hold, bot, bc, vad, fvad
  std::array<double, 6> signal_weights = {1, 1, 1, 1, 1, 1};
  bool stage2_freeze_backbone = false;
  double aux_generative_weight = 0.0;
  uint64_t seed = 0;

  void validate() const;
};

struct TensorView {
  std::string name;
  std::vector<int> shape;
  size_t offset = 0;
  size_t size = 0;
};

// The 18 per-frame scalars in role order for one channel pair:
// per channel (A then B): eot, hold, bot, bc, vad, fvad0..fvad3.
constexpr int kSignalsPerChannel = 9;
constexpr int kSignalScalars = 18;

struct ModelState {
  std::vector<double> h;
};

enum class TrainingStage { Fresh, Stage1, Stage2 };
const char* stage_name(TrainingStage s);

class SequenceModel {
 public:
  explicit SequenceModel(const ModelConfig& cfg = {});

  void init_params(uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  const std::vector<double>& params() const { return params_; }
  std::vector<double>& params() { return params_; }
  const std::vector<TensorView>& tensors() const { return views_; }
  TrainingStage stage() const { return stage_; }
  void set_stage(TrainingStage s) { stage_ = s; }

  int num_heads() const { return 12; }
  int signal_outputs_per_frame_pair() const { return kSignalScalars; }

  ModelState make_state() const;

  // One causal step; outputs the 18 signal scalars (and, when requested,
  // the two next-frame generative probabilities).
  std::array<double, kSignalScalars> step(ModelState& state, const double* feat,
                                          double* gen_out = nullptr) const;

  SignalEstimates forward(const FrameFeatures& f) const;

  std::string to_json() const;
  static SequenceModel from_json(const std::string& json_text);

 private:
  friend class ModelGradients;
  ModelConfig cfg_;
  std::vector<double> params_;
  std::vector<TensorView> views_;
  TrainingStage stage_ = TrainingStage::Fresh;
  size_t view_offset(const std::string& name) const;
  void build_views();
};

// ---------------------------------------------------------------------------
// Training.

struct TrainingSession {
  FrameFeatures features;
  std::vector<double> vad_a, vad_b;  // Stage-1 targets
  SignalLabels labels;               // Stage-2 targets (smoothed)
};

TrainingSession prepare_session(const ActivityTimeline& t, const LabelConfig& lcfg,
                                const FeatureConfig& fcfg = {});

struct TrainReport {
  std::vector<double> epoch_loss;
  std::vector<double> epoch_val;  // validation metric per epoch (if any)
  int best_epoch = -1;
  double initial_loss = 0.0;
  double best_loss = 0.0;
};

// Stage-1: next-frame activity prediction for both channels (BCE).
TrainReport pretrain_stage1(SequenceModel& model,
                            const std::vector<TrainingSession>& corpus,
                            const TrainConfig& cfg);

// Stage-2: focal loss on sparse heads + BCE on dense heads, optional
// auxiliary generative term. `val_metric` (higher = better), when given,
// drives early stopping; otherwise negative training loss is used.
TrainReport finetune_stage2(
    SequenceModel& model, const std::vector<TrainingSession>& corpus,
    const TrainConfig& cfg,
    const std::function<double(const SequenceModel&)>& val_metric = nullptr);

// Max relative error between analytic gradients of the Stage-2 loss and
// central finite differences over `n_probe` random parameters.
double gradient_check(SequenceModel& model, const TrainingSession& session,
                      const TrainConfig& cfg, int n_probe = 120,
                      uint64_t seed = 7);
double gradient_check_stage1(SequenceModel& model, const TrainingSession& session,
                             const TrainConfig& cfg, int n_probe = 120,
                             uint64_t seed = 7);

}  // namespace dualturn
