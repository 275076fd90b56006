#include "dualturn/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "json.hpp"

namespace dualturn {

// ---------------------------------------------------------------------------
// Features.

FeatureExtractor::FeatureExtractor(const FeatureConfig& cfg) : cfg_(cfg) { reset(); }

void FeatureExtractor::reset() {
  ch_[0] = ChanState{};
  ch_[1] = ChanState{};
}

std::array<double, FeatureConfig::kDims> FeatureExtractor::step(uint8_t vad_a,
                                                                uint8_t vad_b) {
  std::array<double, FeatureConfig::kDims> out{};
  uint8_t vads[2] = {vad_a, vad_b};
  for (int c = 0; c < 2; ++c) {
    ChanState& s = ch_[c];
    uint8_t v = vads[c];
    if (v && !s.prev_vad) s.t_since_on = 0;
    if (!v && s.prev_vad) s.t_since_off = 0;
    double* o = out.data() + c * FeatureConfig::kDimsPerChannel;
    o[0] = v;
    for (int k = 0; k < 3; ++k) {
      double d = std::exp(-1.0 / cfg_.ema_tau_frames[k]);
      s.ema[k] = d * s.ema[k] + (1.0 - d) * v;
      o[1 + k] = s.ema[k];
    }
    auto clipped = [&](long t) {
      if (t < 0) return 1.0;  // no event yet: saturated
      return std::min(1.0, static_cast<double>(t) / cfg_.time_clip_frames);
    };
    o[4] = clipped(s.t_since_on);
    o[5] = clipped(s.t_since_off);
    if (s.t_since_on >= 0) ++s.t_since_on;
    if (s.t_since_off >= 0) ++s.t_since_off;
    s.prev_vad = v;
  }
  return out;
}

FrameFeatures featurize(const ActivityTimeline& t, const FeatureConfig& cfg) {
  t.validate();
  FrameFeatures f;
  f.frames = t.frames();
  f.x.resize(f.frames * FeatureConfig::kDims);
  FeatureExtractor ex(cfg);
  for (size_t i = 0; i < f.frames; ++i) {
    auto row = ex.step(t.a[i], t.b[i]);
    std::copy(row.begin(), row.end(), f.x.begin() + i * FeatureConfig::kDims);
  }
  return f;
}

// ---------------------------------------------------------------------------
// Losses.

double focal_loss(double p, double y, double gamma, double alpha) {
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("focal_loss: p must be in (0,1)");
  if (y < 0.0 || y > 1.0) throw std::invalid_argument("focal_loss: y outside [0,1]");
  double pos = alpha * y * std::pow(1.0 - p, gamma) * std::log(p);
  double neg = (1.0 - alpha) * (1.0 - y) * std::pow(p, gamma) * std::log(1.0 - p);
  return -(pos + neg);
}

double focal_loss_dp(double p, double y, double gamma, double alpha) {
  double q = 1.0 - p;
  double pos = alpha * y * (-gamma * std::pow(q, gamma - 1.0) * std::log(p) +
                            std::pow(q, gamma) / p);
  double neg = (1.0 - alpha) * (1.0 - y) *
               (gamma * std::pow(p, gamma - 1.0) * std::log(1.0 - p) -
                std::pow(p, gamma) / q);
  return -(pos + neg);
}

double bce_loss(double p, double y) {
  return -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
}

// ---------------------------------------------------------------------------
// Model.

void ModelConfig::validate() const {
  if (proj_dim <= 0 || hidden <= 0 || head_hidden <= 0)
    throw std::invalid_argument("ModelConfig: non-positive dimension");
}

void TrainConfig::validate() const {
  if (lr_stage1 <= 0 || lr_stage2 <= 0)
    throw std::invalid_argument("TrainConfig: learning rates must be > 0");
  if (focal_gamma < 0) throw std::invalid_argument("TrainConfig: gamma must be >= 0");
  if (!(focal_alpha > 0 && focal_alpha < 1))
    throw std::invalid_argument("TrainConfig: alpha must be in (0,1)");
  if (batch_size <= 0 || max_epochs_stage1 <= 0 || max_epochs_stage2 <= 0)
    throw std::invalid_argument("TrainConfig: non-positive epoch/batch count");
}

const char* stage_name(TrainingStage s) {
  switch (s) {
    case TrainingStage::Fresh: return "fresh";
    case TrainingStage::Stage1: return "stage1";
    case TrainingStage::Stage2: return "stage2";
  }
  return "?";
}

namespace {

constexpr const char* kSparseNames[4] = {"eot", "hold", "bot", "bc"};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// p clamped away from {0,1} so the losses stay finite.
inline double squash(double x) {
  double p = sigmoid(x);
  return std::min(1.0 - 1e-12, std::max(1e-12, p));
}

void matvec(const double* W, const double* x, double* out, int rows, int cols) {
  for (int i = 0; i < rows; ++i) {
    double s = 0.0;
    const double* w = W + i * cols;
    for (int j = 0; j < cols; ++j) s += w[j] * x[j];
    out[i] = s;
  }
}

}  // namespace

SequenceModel::SequenceModel(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  build_views();
}

void SequenceModel::build_views() {
  views_.clear();
  size_t off = 0;
  auto add = [&](const std::string& name, std::vector<int> shape) {
    size_t sz = 1;
    for (int d : shape) sz *= d;
    views_.push_back({name, std::move(shape), off, sz});
    off += sz;
  };
  int P = cfg_.proj_dim, H = cfg_.hidden, Hh = cfg_.head_hidden;
  int F = FeatureConfig::kDimsPerChannel, I = cfg_.input_dim();
  for (const char* c : {"a", "b"}) {
    add(std::string("proj_w_") + c, {P, F});
    add(std::string("proj_b_") + c, {P});
  }
  for (const char* g : {"z", "r", "c"}) {
    add(std::string("gru_w") + g, {H, I});
    add(std::string("gru_u") + g, {H, H});
    add(std::string("gru_b") + g, {H});
  }
  for (const char* c : {"a", "b"}) {
    for (const char* s : kSparseNames) {
      std::string base = std::string("head_") + s + "_" + c;
      add(base + "_w1", {Hh, H});
      add(base + "_b1", {Hh});
      add(base + "_w2", {Hh});
      add(base + "_b2", {1});
    }
    add(std::string("head_vad_") + c + "_w", {H});
    add(std::string("head_vad_") + c + "_b", {1});
    add(std::string("head_fvad_") + c + "_w", {kNumFvadHorizons, H});
    add(std::string("head_fvad_") + c + "_b", {kNumFvadHorizons});
  }
  add("gen_w", {2, H});
  add("gen_b", {2});
  params_.assign(off, 0.0);
}

size_t SequenceModel::view_offset(const std::string& name) const {
  for (const auto& v : views_)
    if (v.name == name) return v.offset;
  throw std::logic_error("unknown tensor: " + name);
}

void SequenceModel::init_params(uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (const auto& v : views_) {
    bool is_bias = v.shape.size() == 1 && (v.name.find("_b") != std::string::npos);
    if (is_bias && v.name.find("gru_b") == std::string::npos) {
      for (size_t i = 0; i < v.size; ++i) params_[v.offset + i] = 0.0;
      continue;
    }
    int fan_in = v.shape.size() > 1 ? v.shape.back() : static_cast<int>(v.size);
    double r = 1.0 / std::sqrt(static_cast<double>(std::max(1, fan_in)));
    std::uniform_real_distribution<double> u(-r, r);
    for (size_t i = 0; i < v.size; ++i) params_[v.offset + i] = u(rng);
  }
  // GRU biases start at zero as well.
  for (const char* g : {"z", "r", "c"}) {
    size_t off = view_offset(std::string("gru_b") + g);
    for (int i = 0; i < cfg_.hidden; ++i) params_[off + i] = 0.0;
  }
  stage_ = TrainingStage::Fresh;
}

ModelState SequenceModel::make_state() const {
  return ModelState{std::vector<double>(cfg_.hidden, 0.0)};
}

namespace {

// Offsets resolved once per model instance for the hot path.
struct Offsets {
  size_t proj_w[2], proj_b[2];
  size_t wz, uz, bz, wr, ur, br, wc, uc, bc;
  size_t sp_w1[2][4], sp_b1[2][4], sp_w2[2][4], sp_b2[2][4];
  size_t vad_w[2], vad_b[2], fvad_w[2], fvad_b[2];
  size_t gen_w, gen_b;
};

Offsets resolve(const SequenceModel& m) {
  Offsets o;
  auto find = [&](const std::string& n) {
    for (const auto& v : m.tensors())
      if (v.name == n) return v.offset;
    throw std::logic_error("missing tensor " + n);
  };
  const char* chs[2] = {"a", "b"};
  for (int c = 0; c < 2; ++c) {
    o.proj_w[c] = find(std::string("proj_w_") + chs[c]);
    o.proj_b[c] = find(std::string("proj_b_") + chs[c]);
    for (int s = 0; s < 4; ++s) {
      std::string base = std::string("head_") + kSparseNames[s] + "_" + chs[c];
      o.sp_w1[c][s] = find(base + "_w1");
      o.sp_b1[c][s] = find(base + "_b1");
      o.sp_w2[c][s] = find(base + "_w2");
      o.sp_b2[c][s] = find(base + "_b2");
    }
    o.vad_w[c] = find(std::string("head_vad_") + chs[c] + "_w");
    o.vad_b[c] = find(std::string("head_vad_") + chs[c] + "_b");
    o.fvad_w[c] = find(std::string("head_fvad_") + chs[c] + "_w");
    o.fvad_b[c] = find(std::string("head_fvad_") + chs[c] + "_b");
  }
  o.wz = find("gru_wz"); o.uz = find("gru_uz"); o.bz = find("gru_bz");
  o.wr = find("gru_wr"); o.ur = find("gru_ur"); o.br = find("gru_br");
  o.wc = find("gru_wc"); o.uc = find("gru_uc"); o.bc = find("gru_bc");
  o.gen_w = find("gen_w");
  o.gen_b = find("gen_b");
  return o;
}

}  // namespace

std::array<double, kSignalScalars> SequenceModel::step(ModelState& state,
                                                       const double* feat,
                                                       double* gen_out) const {
  static thread_local const SequenceModel* cached_model = nullptr;
  static thread_local Offsets off;
  if (cached_model != this) {
    off = resolve(*this);
    cached_model = this;
  }
  const double* p = params_.data();
  int P = cfg_.proj_dim, H = cfg_.hidden, Hh = cfg_.head_hidden;
  int F = FeatureConfig::kDimsPerChannel, I = cfg_.input_dim();

  std::vector<double> x(I);
  for (int c = 0; c < 2; ++c) {
    matvec(p + off.proj_w[c], feat + c * F, x.data() + c * P, P, F);
    for (int i = 0; i < P; ++i)
      x[c * P + i] = std::tanh(x[c * P + i] + p[off.proj_b[c] + i]);
  }
  std::vector<double> z(H), r(H), cbar(H), tmp(H), rh(H);
  matvec(p + off.wz, x.data(), z.data(), H, I);
  matvec(p + off.uz, state.h.data(), tmp.data(), H, H);
  for (int i = 0; i < H; ++i) z[i] = sigmoid(z[i] + tmp[i] + p[off.bz + i]);
  matvec(p + off.wr, x.data(), r.data(), H, I);
  matvec(p + off.ur, state.h.data(), tmp.data(), H, H);
  for (int i = 0; i < H; ++i) r[i] = sigmoid(r[i] + tmp[i] + p[off.br + i]);
  for (int i = 0; i < H; ++i) rh[i] = r[i] * state.h[i];
  matvec(p + off.wc, x.data(), cbar.data(), H, I);
  matvec(p + off.uc, rh.data(), tmp.data(), H, H);
  for (int i = 0; i < H; ++i) cbar[i] = std::tanh(cbar[i] + tmp[i] + p[off.bc + i]);
  for (int i = 0; i < H; ++i)
    state.h[i] = (1.0 - z[i]) * state.h[i] + z[i] * cbar[i];

  std::array<double, kSignalScalars> out{};
  std::vector<double> u(Hh);
  for (int c = 0; c < 2; ++c) {
    for (int s = 0; s < 4; ++s) {
      matvec(p + off.sp_w1[c][s], state.h.data(), u.data(), Hh, H);
      double logit = p[off.sp_b2[c][s]];
      for (int i = 0; i < Hh; ++i)
        logit += p[off.sp_w2[c][s] + i] * std::tanh(u[i] + p[off.sp_b1[c][s] + i]);
      out[c * kSignalsPerChannel + s] = squash(logit);
    }
    double vl = p[off.vad_b[c]];
    for (int i = 0; i < H; ++i) vl += p[off.vad_w[c] + i] * state.h[i];
    out[c * kSignalsPerChannel + 4] = squash(vl);
    for (int k = 0; k < kNumFvadHorizons; ++k) {
      double fl = p[off.fvad_b[c] + k];
      const double* w = p + off.fvad_w[c] + k * H;
      for (int i = 0; i < H; ++i) fl += w[i] * state.h[i];
      out[c * kSignalsPerChannel + 5 + k] = squash(fl);
    }
  }
  if (gen_out) {
    for (int k = 0; k < 2; ++k) {
      double gl = p[off.gen_b + k];
      const double* w = p + off.gen_w + k * H;
      for (int i = 0; i < H; ++i) gl += w[i] * state.h[i];
      gen_out[k] = squash(gl);
    }
  }
  return out;
}

SignalEstimates SequenceModel::forward(const FrameFeatures& f) const {
  SignalEstimates est;
  est.a.resize(f.frames);
  est.b.resize(f.frames);
  ModelState st = make_state();
  for (size_t t = 0; t < f.frames; ++t) {
    auto out = step(st, f.row(t));
    for (int c = 0; c < 2; ++c) {
      ChannelSignals& cs = est.channel(static_cast<Channel>(c));
      const double* o = out.data() + c * kSignalsPerChannel;
      cs.eot[t] = o[0];
      cs.hold[t] = o[1];
      cs.bot[t] = o[2];
      cs.bc[t] = o[3];
      cs.vad[t] = o[4];
      for (int k = 0; k < kNumFvadHorizons; ++k) cs.fvad[k][t] = o[5 + k];
    }
  }
  return est;
}

// ---------------------------------------------------------------------------
// Training internals: full-session forward with caches + manual BPTT.

class ModelGradients {
 public:
  ModelGradients(SequenceModel& m, const TrainConfig& cfg)
      : m_(m), cfg_(cfg), off_(resolve(m)) {}

  // stage1: next-frame activity BCE. stage2: focal+BCE signal losses,
  // plus aux_generative_weight * stage1 term when configured.
  double loss_and_grad(const TrainingSession& s, TrainingStage stage,
                       std::vector<double>* grad);

 private:
  SequenceModel& m_;
  const TrainConfig& cfg_;
  Offsets off_;
};

double ModelGradients::loss_and_grad(const TrainingSession& s, TrainingStage stage,
                                     std::vector<double>* grad) {
  const ModelConfig& mc = m_.config();
  int P = mc.proj_dim, H = mc.hidden, Hh = mc.head_hidden;
  int F = FeatureConfig::kDimsPerChannel, I = mc.input_dim();
  int n = static_cast<int>(s.features.frames);
  if (n == 0) return 0.0;
  if (stage == TrainingStage::Stage2 &&
      s.labels.frames() != static_cast<size_t>(n))
    throw std::invalid_argument("label/feature length mismatch");
  const double* p = m_.params().data();
  bool want_gen = stage == TrainingStage::Stage1 ||
                  (stage == TrainingStage::Stage2 && cfg_.aux_generative_weight > 0.0);

  // Caches.
  std::vector<double> X(static_cast<size_t>(n) * I);      // projected inputs (post-tanh)
  std::vector<double> Z(static_cast<size_t>(n) * H), R(Z), C(Z), Hs(Z), RH(Z);
  std::vector<double> U(static_cast<size_t>(n) * 8 * Hh);  // sparse head tanh outputs
  std::vector<double> probs(static_cast<size_t>(n) * kSignalScalars);
  std::vector<double> gen(want_gen ? static_cast<size_t>(n) * 2 : 0);

  std::vector<double> h(H, 0.0), tmp(H);
  for (int t = 0; t < n; ++t) {
    const double* feat = s.features.row(t);
    double* x = X.data() + static_cast<size_t>(t) * I;
    for (int c = 0; c < 2; ++c) {
      matvec(p + off_.proj_w[c], feat + c * F, x + c * P, P, F);
      for (int i = 0; i < P; ++i)
        x[c * P + i] = std::tanh(x[c * P + i] + p[off_.proj_b[c] + i]);
    }
    double* z = Z.data() + static_cast<size_t>(t) * H;
    double* r = R.data() + static_cast<size_t>(t) * H;
    double* cb = C.data() + static_cast<size_t>(t) * H;
    double* rh = RH.data() + static_cast<size_t>(t) * H;
    double* hh = Hs.data() + static_cast<size_t>(t) * H;
    matvec(p + off_.wz, x, z, H, I);
    matvec(p + off_.uz, h.data(), tmp.data(), H, H);
    for (int i = 0; i < H; ++i) z[i] = sigmoid(z[i] + tmp[i] + p[off_.bz + i]);
    matvec(p + off_.wr, x, r, H, I);
    matvec(p + off_.ur, h.data(), tmp.data(), H, H);
    for (int i = 0; i < H; ++i) r[i] = sigmoid(r[i] + tmp[i] + p[off_.br + i]);
    for (int i = 0; i < H; ++i) rh[i] = r[i] * h[i];
    matvec(p + off_.wc, x, cb, H, I);
    matvec(p + off_.uc, rh, tmp.data(), H, H);
    for (int i = 0; i < H; ++i) cb[i] = std::tanh(cb[i] + tmp[i] + p[off_.bc + i]);
    for (int i = 0; i < H; ++i) hh[i] = (1.0 - z[i]) * h[i] + z[i] * cb[i];
    std::copy(hh, hh + H, h.begin());

    double* pr = probs.data() + static_cast<size_t>(t) * kSignalScalars;
    for (int c = 0; c < 2; ++c) {
      for (int sg = 0; sg < 4; ++sg) {
        double* u = U.data() + ((static_cast<size_t>(t) * 8) + c * 4 + sg) * Hh;
        matvec(p + off_.sp_w1[c][sg], hh, u, Hh, H);
        double logit = p[off_.sp_b2[c][sg]];
        for (int i = 0; i < Hh; ++i) {
          u[i] = std::tanh(u[i] + p[off_.sp_b1[c][sg] + i]);
          logit += p[off_.sp_w2[c][sg] + i] * u[i];
        }
        pr[c * kSignalsPerChannel + sg] = squash(logit);
      }
      double vl = p[off_.vad_b[c]];
      for (int i = 0; i < H; ++i) vl += p[off_.vad_w[c] + i] * hh[i];
      pr[c * kSignalsPerChannel + 4] = squash(vl);
      for (int k = 0; k < kNumFvadHorizons; ++k) {
        double fl = p[off_.fvad_b[c] + k];
        const double* w = p + off_.fvad_w[c] + k * H;
        for (int i = 0; i < H; ++i) fl += w[i] * hh[i];
        pr[c * kSignalsPerChannel + 5 + k] = squash(fl);
      }
    }
    if (want_gen) {
      for (int k = 0; k < 2; ++k) {
        double gl = p[off_.gen_b + k];
        const double* w = p + off_.gen_w + k * H;
        for (int i = 0; i < H; ++i) gl += w[i] * hh[i];
        gen[static_cast<size_t>(t) * 2 + k] = squash(gl);
      }
    }
  }

  // Loss and per-frame logit gradients.
  double gamma = cfg_.focal_gamma, alpha = cfg_.focal_alpha;
  // Both objectives are per-scalar means, so aux_generative_weight = 1
  // puts the generative term on equal footing with the signal loss.
  double inv_n = 1.0 / (static_cast<double>(n) * kSignalScalars);
  double inv_gen = n > 1 ? 1.0 / (2.0 * (n - 1)) : 0.0;
  double loss = 0.0;
  // dlogit per frame: 18 signal slots + 2 generative slots.
  std::vector<double> dlog(static_cast<size_t>(n) * (kSignalScalars + 2), 0.0);

  auto target = [&](int c, int slot, int t) -> double {
    const ChannelSignals& cs = s.labels.channel(static_cast<Channel>(c));
    switch (slot) {
      case 0: return cs.eot[t];
      case 1: return cs.hold[t];
      case 2: return cs.bot[t];
      case 3: return cs.bc[t];
      case 4: return cs.vad[t];
      default: return cs.fvad[slot - 5][t];
    }
  };

  if (stage == TrainingStage::Stage2) {
    for (int t = 0; t < n; ++t) {
      const double* pr = probs.data() + static_cast<size_t>(t) * kSignalScalars;
      double* dl = dlog.data() + static_cast<size_t>(t) * (kSignalScalars + 2);
      for (int c = 0; c < 2; ++c) {
        for (int slot = 0; slot < kSignalsPerChannel; ++slot) {
          int idx = c * kSignalsPerChannel + slot;
          double pv = pr[idx], y = target(c, slot, t);
          double w = slot < 4 ? cfg_.signal_weights[slot]
                              : (slot == 4 ? cfg_.signal_weights[4]
                                           : cfg_.signal_weights[5]);
          if (slot < 4) {
            loss += w * focal_loss(pv, y, gamma, alpha) * inv_n;
            dl[idx] = w * focal_loss_dp(pv, y, gamma, alpha) * pv * (1.0 - pv) * inv_n;
          } else {
            loss += w * bce_loss(pv, y) * inv_n;
            dl[idx] = w * (pv - y) * inv_n;
          }
        }
      }
    }
  }
  if (want_gen) {
    double gw = stage == TrainingStage::Stage1 ? 1.0 : cfg_.aux_generative_weight;
    for (int t = 0; t + 1 < n; ++t) {
      double* dl = dlog.data() + static_cast<size_t>(t) * (kSignalScalars + 2);
      for (int k = 0; k < 2; ++k) {
        double pv = gen[static_cast<size_t>(t) * 2 + k];
        double y = (k == 0 ? s.vad_a : s.vad_b)[t + 1];
        loss += gw * bce_loss(pv, y) * inv_gen;
        dl[kSignalScalars + k] = gw * (pv - y) * inv_gen;
      }
    }
  }
  if (!std::isfinite(loss))
    throw std::runtime_error("training loss is not finite");
  if (!grad) return loss;

  // Backward pass.
  std::vector<double>& g = *grad;
  g.assign(m_.params().size(), 0.0);
  std::vector<double> dh(H, 0.0), dhprev(H), dzp(H), drp(H), dcp(H), drh(H), dx(I);
  for (int t = n - 1; t >= 0; --t) {
    const double* hh = Hs.data() + static_cast<size_t>(t) * H;
    const double* hprev_ptr =
        t > 0 ? Hs.data() + static_cast<size_t>(t - 1) * H : nullptr;
    const double* x = X.data() + static_cast<size_t>(t) * I;
    const double* dl = dlog.data() + static_cast<size_t>(t) * (kSignalScalars + 2);
    const double* pr = probs.data() + static_cast<size_t>(t) * kSignalScalars;

    // Head contributions to dh.
    for (int c = 0; c < 2; ++c) {
      for (int sg = 0; sg < 4; ++sg) {
        double d = dl[c * kSignalsPerChannel + sg];
        if (d == 0.0) continue;
        const double* u = U.data() + ((static_cast<size_t>(t) * 8) + c * 4 + sg) * Hh;
        g[off_.sp_b2[c][sg]] += d;
        for (int i = 0; i < Hh; ++i) {
          g[off_.sp_w2[c][sg] + i] += d * u[i];
          double du_pre = d * p[off_.sp_w2[c][sg] + i] * (1.0 - u[i] * u[i]);
          g[off_.sp_b1[c][sg] + i] += du_pre;
          double* gw1 = g.data() + off_.sp_w1[c][sg] + static_cast<size_t>(i) * H;
          const double* w1 = p + off_.sp_w1[c][sg] + static_cast<size_t>(i) * H;
          for (int j = 0; j < H; ++j) {
            gw1[j] += du_pre * hh[j];
            dh[j] += du_pre * w1[j];
          }
        }
      }
      {
        double d = dl[c * kSignalsPerChannel + 4];
        if (d != 0.0) {
          g[off_.vad_b[c]] += d;
          for (int j = 0; j < H; ++j) {
            g[off_.vad_w[c] + j] += d * hh[j];
            dh[j] += d * p[off_.vad_w[c] + j];
          }
        }
      }
      for (int k = 0; k < kNumFvadHorizons; ++k) {
        double d = dl[c * kSignalsPerChannel + 5 + k];
        if (d == 0.0) continue;
        g[off_.fvad_b[c] + k] += d;
        const double* w = p + off_.fvad_w[c] + static_cast<size_t>(k) * H;
        double* gw = g.data() + off_.fvad_w[c] + static_cast<size_t>(k) * H;
        for (int j = 0; j < H; ++j) {
          gw[j] += d * hh[j];
          dh[j] += d * w[j];
        }
      }
    }
    for (int k = 0; k < 2; ++k) {
      double d = dl[kSignalScalars + k];
      if (d == 0.0) continue;
      g[off_.gen_b + k] += d;
      const double* w = p + off_.gen_w + static_cast<size_t>(k) * H;
      double* gw = g.data() + off_.gen_w + static_cast<size_t>(k) * H;
      for (int j = 0; j < H; ++j) {
        gw[j] += d * hh[j];
        dh[j] += d * w[j];
      }
    }
    (void)pr;

    // GRU backward.
    const double* z = Z.data() + static_cast<size_t>(t) * H;
    const double* r = R.data() + static_cast<size_t>(t) * H;
    const double* cb = C.data() + static_cast<size_t>(t) * H;
    const double* rh = RH.data() + static_cast<size_t>(t) * H;
    std::fill(dhprev.begin(), dhprev.end(), 0.0);
    std::fill(dx.begin(), dx.end(), 0.0);
    std::fill(drh.begin(), drh.end(), 0.0);
    for (int i = 0; i < H; ++i) {
      double hp = hprev_ptr ? hprev_ptr[i] : 0.0;
      double dz = dh[i] * (cb[i] - hp);
      double dc = dh[i] * z[i];
      dhprev[i] += dh[i] * (1.0 - z[i]);
      dcp[i] = dc * (1.0 - cb[i] * cb[i]);
      dzp[i] = dz * z[i] * (1.0 - z[i]);
    }
    // c gate.
    for (int i = 0; i < H; ++i) {
      g[off_.bc + i] += dcp[i];
      double* gw = g.data() + off_.wc + static_cast<size_t>(i) * I;
      for (int j = 0; j < I; ++j) gw[j] += dcp[i] * x[j];
      double* gu = g.data() + off_.uc + static_cast<size_t>(i) * H;
      const double* u = p + off_.uc + static_cast<size_t>(i) * H;
      for (int j = 0; j < H; ++j) {
        gu[j] += dcp[i] * rh[j];
        drh[j] += dcp[i] * u[j];
      }
      const double* w = p + off_.wc + static_cast<size_t>(i) * I;
      for (int j = 0; j < I; ++j) dx[j] += dcp[i] * w[j];
    }
    for (int i = 0; i < H; ++i) {
      double hp = hprev_ptr ? hprev_ptr[i] : 0.0;
      double dr = drh[i] * hp;
      dhprev[i] += drh[i] * r[i];
      drp[i] = dr * r[i] * (1.0 - r[i]);
    }
    // z and r gates.
    for (int i = 0; i < H; ++i) {
      g[off_.bz + i] += dzp[i];
      g[off_.br + i] += drp[i];
      double* gwz = g.data() + off_.wz + static_cast<size_t>(i) * I;
      double* gwr = g.data() + off_.wr + static_cast<size_t>(i) * I;
      const double* wz = p + off_.wz + static_cast<size_t>(i) * I;
      const double* wr = p + off_.wr + static_cast<size_t>(i) * I;
      for (int j = 0; j < I; ++j) {
        gwz[j] += dzp[i] * x[j];
        gwr[j] += drp[i] * x[j];
        dx[j] += dzp[i] * wz[j] + drp[i] * wr[j];
      }
      double* guz = g.data() + off_.uz + static_cast<size_t>(i) * H;
      double* gur = g.data() + off_.ur + static_cast<size_t>(i) * H;
      const double* uz = p + off_.uz + static_cast<size_t>(i) * H;
      const double* ur = p + off_.ur + static_cast<size_t>(i) * H;
      for (int j = 0; j < H; ++j) {
        double hp = hprev_ptr ? hprev_ptr[j] : 0.0;
        guz[j] += dzp[i] * hp;
        gur[j] += drp[i] * hp;
        dhprev[j] += dzp[i] * uz[j] + drp[i] * ur[j];
      }
    }
    // Projections.
    const double* feat = s.features.row(t);
    for (int c = 0; c < 2; ++c) {
      for (int i = 0; i < P; ++i) {
        double xv = x[c * P + i];
        double dpre = dx[c * P + i] * (1.0 - xv * xv);
        g[off_.proj_b[c] + i] += dpre;
        double* gw = g.data() + off_.proj_w[c] + static_cast<size_t>(i) * F;
        for (int j = 0; j < F; ++j) gw[j] += dpre * feat[c * F + j];
      }
    }
    std::copy(dhprev.begin(), dhprev.end(), dh.begin());
  }
  return loss;
}

namespace {

struct Adam {
  std::vector<double> m, v;
  long t = 0;
  double b1 = 0.9, b2 = 0.999, eps = 1e-8;

  void step(std::vector<double>& params, const std::vector<double>& g, double lr) {
    if (m.empty()) {
      m.assign(params.size(), 0.0);
      v.assign(params.size(), 0.0);
    }
    ++t;
    double c1 = 1.0 - std::pow(b1, t), c2 = 1.0 - std::pow(b2, t);
    for (size_t i = 0; i < params.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      params[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
    }
  }
};

std::vector<bool> backbone_mask(const SequenceModel& m) {
  std::vector<bool> mask(m.params().size(), false);
  for (const auto& v : m.tensors())
    if (v.name.rfind("proj_", 0) == 0 || v.name.rfind("gru_", 0) == 0)
      for (size_t i = 0; i < v.size; ++i) mask[v.offset + i] = true;
  return mask;
}

TrainReport run_training(SequenceModel& model,
                         const std::vector<TrainingSession>& corpus,
                         const TrainConfig& cfg, TrainingStage stage,
                         const std::function<double(const SequenceModel&)>& val_metric) {
  cfg.validate();
  if (corpus.empty()) throw std::invalid_argument("training corpus is empty");
  ModelGradients mg(model, cfg);
  Adam opt;
  double lr = stage == TrainingStage::Stage1 ? cfg.lr_stage1 : cfg.lr_stage2;
  int max_epochs =
      stage == TrainingStage::Stage1 ? cfg.max_epochs_stage1 : cfg.max_epochs_stage2;
  std::vector<bool> frozen;
  if (stage == TrainingStage::Stage2 && cfg.stage2_freeze_backbone)
    frozen = backbone_mask(model);

  TrainReport report;
  std::vector<double> best_params = model.params();
  double best_metric = -std::numeric_limits<double>::infinity();
  int since_best = 0;
  std::vector<double> grad, acc;
  for (int epoch = 0; epoch < max_epochs; ++epoch) {
    double epoch_loss = 0.0;
    size_t i = 0;
    while (i < corpus.size()) {
      acc.assign(model.params().size(), 0.0);
      int nb = 0;
      for (; nb < cfg.batch_size && i < corpus.size(); ++nb, ++i) {
        epoch_loss += mg.loss_and_grad(corpus[i], stage, &grad);
        for (size_t k = 0; k < acc.size(); ++k) acc[k] += grad[k];
      }
      for (size_t k = 0; k < acc.size(); ++k) acc[k] /= nb;
      if (!frozen.empty())
        for (size_t k = 0; k < acc.size(); ++k)
          if (frozen[k]) acc[k] = 0.0;
      opt.step(model.params(), acc, lr);
    }
    epoch_loss /= corpus.size();
    if (!std::isfinite(epoch_loss))
      throw std::runtime_error("training diverged: non-finite epoch loss");
    report.epoch_loss.push_back(epoch_loss);
    if (epoch == 0) report.initial_loss = epoch_loss;
    double metric = val_metric ? val_metric(model) : -epoch_loss;
    report.epoch_val.push_back(metric);
    if (metric > best_metric) {
      best_metric = metric;
      best_params = model.params();
      report.best_epoch = epoch;
      report.best_loss = epoch_loss;
      since_best = 0;
    } else if (++since_best > cfg.early_stop_patience) {
      break;
    }
  }
  model.params() = best_params;
  return report;
}

}  // namespace

TrainingSession prepare_session(const ActivityTimeline& t, const LabelConfig& lcfg,
                                const FeatureConfig& fcfg) {
  TrainingSession s;
  s.features = featurize(t, fcfg);
  s.vad_a.assign(t.a.begin(), t.a.end());
  s.vad_b.assign(t.b.begin(), t.b.end());
  s.labels = derive_all(t, lcfg).smoothed;
  return s;
}

TrainReport pretrain_stage1(SequenceModel& model,
                            const std::vector<TrainingSession>& corpus,
                            const TrainConfig& cfg) {
  auto r = run_training(model, corpus, cfg, TrainingStage::Stage1, nullptr);
  model.set_stage(TrainingStage::Stage1);
  return r;
}

TrainReport finetune_stage2(
    SequenceModel& model, const std::vector<TrainingSession>& corpus,
    const TrainConfig& cfg,
    const std::function<double(const SequenceModel&)>& val_metric) {
  auto r = run_training(model, corpus, cfg, TrainingStage::Stage2, val_metric);
  model.set_stage(TrainingStage::Stage2);
  return r;
}

static double grad_check_impl(SequenceModel& model, const TrainingSession& session,
                              const TrainConfig& cfg, TrainingStage stage,
                              int n_probe, uint64_t seed) {
  ModelGradients mg(model, cfg);
  std::vector<double> grad;
  mg.loss_and_grad(session, stage, &grad);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<size_t> pick(0, model.params().size() - 1);
  double max_rel = 0.0;
  const double eps = 1e-4;
  for (int k = 0; k < n_probe; ++k) {
    size_t i = pick(rng);
    double saved = model.params()[i];
    model.params()[i] = saved + eps;
    double lp = mg.loss_and_grad(session, stage, nullptr);
    model.params()[i] = saved - eps;
    double lm = mg.loss_and_grad(session, stage, nullptr);
    model.params()[i] = saved;
    double num = (lp - lm) / (2.0 * eps);
    double rel = std::abs(grad[i] - num) / std::max(1e-6, std::abs(grad[i]) + std::abs(num));
    max_rel = std::max(max_rel, rel);
  }
  return max_rel;
}

double gradient_check(SequenceModel& model, const TrainingSession& session,
                      const TrainConfig& cfg, int n_probe, uint64_t seed) {
  return grad_check_impl(model, session, cfg, TrainingStage::Stage2, n_probe, seed);
}

double gradient_check_stage1(SequenceModel& model, const TrainingSession& session,
                             const TrainConfig& cfg, int n_probe, uint64_t seed) {
  return grad_check_impl(model, session, cfg, TrainingStage::Stage1, n_probe, seed);
}

// ---------------------------------------------------------------------------
// Serialization.

std::string SequenceModel::to_json() const {
  nlohmann::json j;
  j["format"] = "dualturn-checkpoint-v1";
  j["prng"] = "std::mt19937_64";
  j["stage"] = stage_name(stage_);
  j["config"] = {{"proj_dim", cfg_.proj_dim},
                 {"hidden", cfg_.hidden},
                 {"head_hidden", cfg_.head_hidden}};
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& v : views_) {
    nlohmann::json t;
    t["name"] = v.name;
    t["shape"] = v.shape;
    t["data"] = std::vector<double>(params_.begin() + v.offset,
                                    params_.begin() + v.offset + v.size);
    tensors.push_back(std::move(t));
  }
  j["tensors"] = std::move(tensors);
  return j.dump(2);
}

SequenceModel SequenceModel::from_json(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  if (j.value("format", "") != "dualturn-checkpoint-v1")
    throw std::invalid_argument("unrecognized checkpoint format");
  ModelConfig cfg;
  cfg.proj_dim = j["config"]["proj_dim"];
  cfg.hidden = j["config"]["hidden"];
  cfg.head_hidden = j["config"]["head_hidden"];
  SequenceModel m(cfg);
  std::string stage = j.value("stage", "fresh");
  m.stage_ = stage == "stage1" ? TrainingStage::Stage1
             : stage == "stage2" ? TrainingStage::Stage2
                                 : TrainingStage::Fresh;
  for (const auto& t : j["tensors"]) {
    size_t off = m.view_offset(t["name"]);
    std::vector<double> data = t["data"].get<std::vector<double>>();
    const TensorView* view = nullptr;
    for (const auto& v : m.views_)
      if (v.offset == off && v.name == t["name"]) view = &v;
    if (!view || data.size() != view->size)
      throw std::invalid_argument("checkpoint tensor size mismatch: " +
                                  t["name"].get<std::string>());
    std::copy(data.begin(), data.end(), m.params_.begin() + off);
  }
  return m;
}

}  // namespace dualturn
