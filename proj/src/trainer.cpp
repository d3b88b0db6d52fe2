#include "footandball/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "binary_io.hpp"
#include "footandball/errors.hpp"

namespace fnb {

void Adam::reset(const std::vector<std::size_t>& sizes) {
  t = 0;
  m.assign(sizes.size(), {});
  v.assign(sizes.size(), {});
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    m[i].assign(sizes[i], 0.0);
    v[i].assign(sizes[i], 0.0);
  }
}

template <typename T>
void Adam::step(const std::vector<std::span<T>>& params, const std::vector<std::span<const T>>& grads,
                const std::vector<std::string>& names, double lr) {
  if (params.size() != grads.size() || params.size() != m.size()) {
    throw ShapeError("adam: parameter, gradient and state counts differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].size() != grads[i].size() || params[i].size() != m[i].size()) {
      throw ShapeError("adam: size mismatch for " + (i < names.size() ? names[i] : std::to_string(i)));
    }
    for (T g : grads[i]) {
      if (!std::isfinite(static_cast<double>(g))) {
        throw NumericError("non-finite gradient for parameter " + (i < names.size() ? names[i] : std::to_string(i)));
      }
    }
  }
  ++t;
  const double b1 = cfg_.beta1, b2 = cfg_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    double* mi = m[i].data();
    double* vi = v[i].data();
    T* w = params[i].data();
    const T* g = grads[i].data();
    for (std::size_t k = 0; k < params[i].size(); ++k) {
      const double gk = g[k];
      mi[k] = b1 * mi[k] + (1 - b1) * gk;
      vi[k] = b2 * vi[k] + (1 - b2) * gk * gk;
      const double mh = mi[k] / c1;
      const double vh = vi[k] / c2;
      w[k] = static_cast<T>(w[k] - lr * mh / (std::sqrt(vh) + cfg_.eps));
    }
  }
}

template void Adam::step<float>(const std::vector<std::span<float>>&, const std::vector<std::span<const float>>&,
                                const std::vector<std::string>&, double);
template void Adam::step<double>(const std::vector<std::span<double>>&, const std::vector<std::span<const double>>&,
                                 const std::vector<std::string>&, double);

void AugmentationSpec::validate() const {
  if (!(scale_min > 0 && scale_max >= scale_min)) throw ConfigError("augmentation.scale_min/scale_max: need 0 < min <= max");
  if (crop_width < 0 || crop_height < 0) throw ConfigError("augmentation.crop_width/crop_height must be >= 0");
  if (crop_width % 32 != 0 || crop_height % 32 != 0) {
    throw ConfigError("augmentation.crop_width/crop_height must be multiples of 32");
  }
  if (crop_attempts < 1) throw ConfigError("augmentation.crop_attempts must be >= 1");
  if (!(hflip_prob >= 0 && hflip_prob <= 1)) throw ConfigError("augmentation.hflip_prob must be in [0, 1]");
  if (!(photometric_prob >= 0 && photometric_prob <= 1)) {
    throw ConfigError("augmentation.photometric_prob must be in [0, 1]");
  }
  if (!(brightness >= 0 && brightness < 1)) throw ConfigError("augmentation.brightness must be in [0, 1)");
  if (!(contrast >= 0 && contrast < 1)) throw ConfigError("augmentation.contrast must be in [0, 1)");
  if (!(saturation >= 0 && saturation < 1)) throw ConfigError("augmentation.saturation must be in [0, 1)");
  if (!(hue_degrees >= 0 && hue_degrees <= 180)) throw ConfigError("augmentation.hue_degrees must be in [0, 180]");
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (lr_drop_epoch <= 0 || lr_drop_epoch > epochs) {
    throw ConfigError("train.lr_drop_epoch (" + std::to_string(lr_drop_epoch) + ") must satisfy 0 < lr_drop_epoch <= epochs (" + std::to_string(epochs) + "); set it with --lr-drop-epoch");
  }
  if (!(lr0 >= 0)) throw ConfigError("train.lr0 must be >= 0");
  if (!(lr_drop_factor > 0)) throw ConfigError("train.lr_drop_factor must be > 0");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (checkpoint_every < 0) throw ConfigError("train.checkpoint_every must be >= 0");
  if (!(adam.beta1 >= 0 && adam.beta1 < 1 && adam.beta2 >= 0 && adam.beta2 < 1 && adam.eps > 0)) {
    throw ConfigError("train.adam: need 0 <= beta < 1 and eps > 0");
  }
  if (!(loss.alpha_ball >= 0 && loss.alpha_player >= 0)) throw ConfigError("loss weights must be >= 0");
  if (!(loss.mining.ratio >= 0)) throw ConfigError("loss.negative_ratio must be >= 0");
  if (augment) augmentation.validate();
}

double lr_schedule(int epoch, const TrainConfig& cfg) {
  return epoch < cfg.lr_drop_epoch ? cfg.lr0 : cfg.lr0 / cfg.lr_drop_factor;
}

namespace {

double map_coord(double x, double s) { return (x + 0.5) * s - 0.5; }

}  // namespace

Frame scale_frame(const Frame& f, double s) {
  const Image& src = f.image;
  const int W = std::max(1, static_cast<int>(std::lround(src.width * s)));
  const int H = std::max(1, static_cast<int>(std::lround(src.height * s)));
  const double sx = static_cast<double>(W) / src.width;
  const double sy = static_cast<double>(H) / src.height;
  Frame out;
  out.image = Image(W, H);
  std::vector<int> x0(W), x1(W);
  std::vector<float> fx(W);
  for (int x = 0; x < W; ++x) {
    const double u = std::clamp((x + 0.5) / sx - 0.5, 0.0, src.width - 1.0);
    x0[x] = static_cast<int>(std::floor(u));
    x1[x] = std::min(x0[x] + 1, src.width - 1);
    fx[x] = static_cast<float>(u - x0[x]);
  }
  for (int y = 0; y < H; ++y) {
    const double v = std::clamp((y + 0.5) / sy - 0.5, 0.0, src.height - 1.0);
    const int y0 = static_cast<int>(std::floor(v));
    const int y1 = std::min(y0 + 1, src.height - 1);
    const float fy = static_cast<float>(v - y0);
    for (int c = 0; c < 3; ++c) {
      for (int x = 0; x < W; ++x) {
        const float a = src.at(c, y0, x0[x]) * (1 - fx[x]) + src.at(c, y0, x1[x]) * fx[x];
        const float b = src.at(c, y1, x0[x]) * (1 - fx[x]) + src.at(c, y1, x1[x]) * fx[x];
        out.image.at(c, y, x) = a * (1 - fy) + b * fy;
      }
    }
  }
  for (const auto& b : f.gt.balls) {
    out.gt.balls.push_back({std::clamp(map_coord(b[0], sx), 0.0, W - 1.0), std::clamp(map_coord(b[1], sy), 0.0, H - 1.0)});
  }
  for (const auto& p : f.gt.players) {
    out.gt.players.push_back({std::clamp(map_coord(p[0], sx), 0.0, W - 1.0), std::clamp(map_coord(p[1], sy), 0.0, H - 1.0),
                              p[2] * sx, p[3] * sy});
  }
  return out;
}

Frame crop_frame(const Frame& f, int x0, int y0, int w, int h) {
  const Image& src = f.image;
  if (x0 < 0 || y0 < 0 || w <= 0 || h <= 0 || x0 + w > src.width || y0 + h > src.height) {
    throw ConfigError("crop " + std::to_string(w) + "x" + std::to_string(h) + " at (" + std::to_string(x0) + "," +
                      std::to_string(y0) + ") does not fit a " + std::to_string(src.width) + "x" +
                      std::to_string(src.height) + " frame");
  }
  Frame out;
  out.image = Image(w, h);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < h; ++y)
      std::copy_n(src.data.data() + (static_cast<std::size_t>(c) * src.height + y0 + y) * src.width + x0, w,
                  &out.image.at(c, y, 0));
  auto in = [&](double x, double y) { return x >= 0 && y >= 0 && x < w && y < h; };
  for (const auto& b : f.gt.balls) {
    if (in(b[0] - x0, b[1] - y0)) out.gt.balls.push_back({b[0] - x0, b[1] - y0});
  }
  for (const auto& p : f.gt.players) {
    if (in(p[0] - x0, p[1] - y0)) out.gt.players.push_back({p[0] - x0, p[1] - y0, p[2], p[3]});
  }
  return out;
}

Frame hflip_frame(const Frame& f) {
  Frame out;
  out.image = f.image;
  const int W = f.image.width;
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < f.image.height; ++y) std::reverse(&out.image.at(c, y, 0), &out.image.at(c, y, 0) + W);
  for (const auto& b : f.gt.balls) out.gt.balls.push_back({W - 1 - b[0], b[1]});
  for (const auto& p : f.gt.players) out.gt.players.push_back({W - 1 - p[0], p[1], p[2], p[3]});
  return out;
}

namespace {

float luminance(float r, float g, float b) { return 0.299f * r + 0.587f * g + 0.114f * b; }

void rgb_to_hsv(float r, float g, float b, float& h, float& s, float& v) {
  const float mx = std::max({r, g, b}), mn = std::min({r, g, b});
  const float d = mx - mn;
  v = mx;
  s = mx > 0 ? d / mx : 0;
  if (d <= 0) {
    h = 0;
  } else if (mx == r) {
    h = 60.0f * std::fmod((g - b) / d, 6.0f);
  } else if (mx == g) {
    h = 60.0f * ((b - r) / d + 2.0f);
  } else {
    h = 60.0f * ((r - g) / d + 4.0f);
  }
  if (h < 0) h += 360.0f;
}

void hsv_to_rgb(float h, float s, float v, float& r, float& g, float& b) {
  const float c = v * s;
  const float hp = h / 60.0f;
  const float x = c * (1 - std::fabs(std::fmod(hp, 2.0f) - 1));
  float r1 = 0, g1 = 0, b1 = 0;
  switch (static_cast<int>(hp) % 6) {
    case 0: r1 = c; g1 = x; break;
    case 1: r1 = x; g1 = c; break;
    case 2: g1 = c; b1 = x; break;
    case 3: g1 = x; b1 = c; break;
    case 4: r1 = x; b1 = c; break;
    default: r1 = c; b1 = x; break;
  }
  const float m = v - c;
  r = r1 + m;
  g = g1 + m;
  b = b1 + m;
}

}  // namespace

Image photometric(const Image& image, const PhotometricParams& p) {
  Image out = image;
  const std::size_t hw = static_cast<std::size_t>(image.width) * image.height;
  float* R = out.data.data();
  float* G = R + hw;
  float* B = G + hw;
  auto clamp01 = [](float v) { return std::clamp(v, 0.0f, 1.0f); };
  if (p.brightness) {
    const float f = static_cast<float>(*p.brightness);
    for (float& v : out.data) v = clamp01(v * f);
  }
  if (p.contrast) {
    double mean = 0;
    for (std::size_t i = 0; i < hw; ++i) mean += luminance(R[i], G[i], B[i]);
    const float m = hw ? static_cast<float>(mean / hw) : 0.0f;
    const float f = static_cast<float>(*p.contrast);
    for (float& v : out.data) v = clamp01(m + f * (v - m));
  }
  if (p.saturation) {
    const float f = static_cast<float>(*p.saturation);
    for (std::size_t i = 0; i < hw; ++i) {
      const float l = luminance(R[i], G[i], B[i]);
      R[i] = clamp01(l + f * (R[i] - l));
      G[i] = clamp01(l + f * (G[i] - l));
      B[i] = clamp01(l + f * (B[i] - l));
    }
  }
  if (p.hue_shift) {
    const float shift = static_cast<float>(*p.hue_shift);
    for (std::size_t i = 0; i < hw; ++i) {
      float h, s, v;
      rgb_to_hsv(R[i], G[i], B[i], h, s, v);
      h = std::fmod(h + shift + 360.0f, 360.0f);
      hsv_to_rgb(h, s, v, R[i], G[i], B[i]);
      R[i] = clamp01(R[i]);
      G[i] = clamp01(G[i]);
      B[i] = clamp01(B[i]);
    }
  }
  return out;
}

Frame augment(const Frame& f, const AugmentationSpec& spec, int crop_width, int crop_height, Rng& rng) {
  const double s = rng.uniform(spec.scale_min, spec.scale_max);
  Frame out = scale_frame(f, s);
  if (crop_width > 0 && crop_height > 0) {
    if (crop_width > out.image.width || crop_height > out.image.height) {
      throw ConfigError("augmentation crop " + std::to_string(crop_width) + "x" + std::to_string(crop_height) +
                        " is larger than the scaled frame " + std::to_string(out.image.width) + "x" +
                        std::to_string(out.image.height));
    }
    const bool had = !out.gt.balls.empty() || !out.gt.players.empty();
    Frame cropped;
    for (int attempt = 0; attempt < spec.crop_attempts; ++attempt) {
      const int x0 = rng.range(0, out.image.width - crop_width);
      const int y0 = rng.range(0, out.image.height - crop_height);
      cropped = crop_frame(out, x0, y0, crop_width, crop_height);
      if (!had || !cropped.gt.balls.empty() || !cropped.gt.players.empty()) break;
    }
    out = std::move(cropped);
  }
  if (rng.chance(spec.hflip_prob)) out = hflip_frame(out);
  PhotometricParams p;
  if (rng.chance(spec.photometric_prob)) p.brightness = rng.uniform(1 - spec.brightness, 1 + spec.brightness);
  if (rng.chance(spec.photometric_prob)) p.contrast = rng.uniform(1 - spec.contrast, 1 + spec.contrast);
  if (rng.chance(spec.photometric_prob)) p.saturation = rng.uniform(1 - spec.saturation, 1 + spec.saturation);
  if (rng.chance(spec.photometric_prob)) p.hue_shift = rng.uniform(-spec.hue_degrees, spec.hue_degrees);
  if (p.brightness || p.contrast || p.saturation || p.hue_shift) out.image = photometric(out.image, p);
  return out;
}

std::pair<int, int> resolve_crop(const AugmentationSpec& spec, const Dataset& ds) {
  if (spec.crop_width > 0 && spec.crop_height > 0) return {spec.crop_width, spec.crop_height};
  int w = 1 << 30, h = 1 << 30;
  for (const auto& im : ds.images) {
    w = std::min(w, static_cast<int>(std::floor(im.width * spec.scale_min)));
    h = std::min(h, static_cast<int>(std::floor(im.height * spec.scale_min)));
  }
  w = spec.crop_width > 0 ? spec.crop_width : w / kInputAlignment * kInputAlignment;
  h = spec.crop_height > 0 ? spec.crop_height : h / kInputAlignment * kInputAlignment;
  if (w < kInputAlignment || h < kInputAlignment) {
    throw ConfigError("frames are too small for a 32-pixel crop after scaling by " + std::to_string(spec.scale_min));
  }
  return {w, h};
}

std::string format_epoch_log(const EpochLog& e) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%d\t%.9g\t%.9g\t%.9g\t%.9g\t%.9g", e.epoch, e.lr, e.loss.total, e.loss.ball,
                e.loss.player, e.loss.bbox);
  return buf;
}

namespace {

template <typename T>
std::vector<std::size_t> trainable_indices(const NetworkWeights<T>& w) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < w.params().size(); ++i)
    if (w.params()[i].kind == ParamKind::kTrainable) out.push_back(i);
  return out;
}

}  // namespace

template <typename T>
void save_train_state(const std::filesystem::path& path, const TrainState& state, const NetworkWeights<T>& weights) {
  const auto idx = trainable_indices(weights);
  if (state.adam.m.size() != idx.size()) throw ShapeError("optimizer state does not match the network");
  detail::ByteWriter w;
  w.raw("FNBO", 4);
  w.u32(kOptimizerFormatVersion);
  w.u64(config_digest(weights.config()));
  w.u32(static_cast<std::uint32_t>(state.next_epoch));
  w.u64(state.adam.t);
  w.f64(state.adam.config().beta1);
  w.f64(state.adam.config().beta2);
  w.f64(state.adam.config().eps);
  w.u32(static_cast<std::uint32_t>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    w.str(weights.params()[idx[k]].name);
    w.u64(state.adam.m[k].size());
    for (double x : state.adam.m[k]) w.f64(x);
    for (double x : state.adam.v[k]) w.f64(x);
  }
  detail::write_file_bytes(path, w.bytes());
}

template <typename T>
TrainState load_train_state(const std::filesystem::path& path, const NetworkWeights<T>& weights) {
  const auto bytes = detail::read_file_bytes(path);
  detail::ByteReader r(bytes);
  r.expect_magic("FNBO", "optimizer state");
  const std::uint32_t version = r.u32("version");
  if (version != kOptimizerFormatVersion) throw FormatError("unsupported optimizer state version " + std::to_string(version));
  if (r.u64("config digest") != config_digest(weights.config())) {
    throw FormatError("optimizer state was written for a different model config");
  }
  TrainState s;
  s.next_epoch = static_cast<int>(r.u32("next epoch"));
  const std::uint64_t t = r.u64("step count");
  AdamConfig cfg;
  cfg.beta1 = r.f64("beta1");
  cfg.beta2 = r.f64("beta2");
  cfg.eps = r.f64("eps");
  s.adam = Adam(cfg);
  const auto idx = trainable_indices(weights);
  const std::uint32_t count = r.u32("parameter count");
  if (count != idx.size()) {
    throw FormatError("optimizer state has " + std::to_string(count) + " parameters, network has " +
                      std::to_string(idx.size()));
  }
  std::vector<std::size_t> sizes;
  for (std::size_t i : idx) sizes.push_back(weights.params()[i].tensor.numel());
  s.adam.reset(sizes);
  s.adam.t = t;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const std::string& want = weights.params()[idx[k]].name;
    const std::string name = r.str("parameter name");
    if (name != want) throw FormatError("optimizer state parameter " + name + " where " + want + " was expected");
    const std::uint64_t n = r.u64(name + " size");
    if (n != sizes[k]) throw FormatError("optimizer state size mismatch for " + name);
    for (auto& x : s.adam.m[k]) x = r.f64(name + " m");
    for (auto& x : s.adam.v[k]) x = r.f64(name + " v");
  }
  if (!r.at_end()) throw FormatError("trailing bytes in optimizer state file");
  return s;
}

template <typename T>
void recalibrate_batchnorm(NetworkWeights<T>& weights, const Dataset& ds, int batch_size) {
  if (batch_size < 1) throw ConfigError("batch-norm recalibration needs batch_size >= 1");
  std::size_t batch = 0;
  for (std::size_t start = 0; start < ds.size(); start += batch_size, ++batch) {
    const std::size_t end = std::min(ds.size(), start + static_cast<std::size_t>(batch_size));
    std::vector<Image> padded;
    for (std::size_t i = start; i < end; ++i) padded.push_back(pad_image(ds.images[i], kInputAlignment));
    std::vector<const Image*> ims;
    for (const auto& im : padded) ims.push_back(&im);
    // momentum 1/(b+1) turns the running update into a cumulative mean
    kernels::BatchNormOptions bn;
    bn.momentum = 1.0 / static_cast<double>(batch + 1);
    Tape<T> tape(false);
    const auto params = bind_parameters(tape, weights, false);
    forward(tape, weights, params, tape.leaf(to_tensor<T>(ims)), Mode::kTrain, bn);
  }
}

template <typename T>
std::vector<EpochLog> train(NetworkWeights<T>& weights, const Dataset& ds, const TrainConfig& cfg, TrainState& state,
                            const TrainHooks& hooks) {
  cfg.validate();
  if (ds.size() == 0) throw ConfigError("training dataset is empty");
  const auto idx = trainable_indices(weights);
  std::vector<std::string> names;
  std::vector<std::size_t> sizes;
  for (std::size_t i : idx) {
    names.push_back(weights.params()[i].name);
    sizes.push_back(weights.params()[i].tensor.numel());
  }
  if (state.adam.m.empty()) {
    state.adam = Adam(cfg.adam);
    state.adam.reset(sizes);
  }
  if (state.adam.m.size() != sizes.size()) throw ConfigError("optimizer state does not match the network");

  int crop_w = 0, crop_h = 0;
  if (cfg.augment) std::tie(crop_w, crop_h) = resolve_crop(cfg.augmentation, ds);

  auto write_checkpoint = [&](const std::string& stem) {
    if (cfg.bn_recalibration) recalibrate_batchnorm(weights, ds, cfg.batch_size);
    if (hooks.checkpoint_dir.empty()) return;
    save_weights(weights, hooks.checkpoint_dir / (stem + ".fnbw"));
    save_train_state(hooks.checkpoint_dir / (stem + ".fnbo"), state, weights);
  };

  std::vector<EpochLog> logs;
  for (int epoch = state.next_epoch; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_schedule(epoch, cfg);
    std::vector<std::size_t> order(ds.size());
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng = Rng::derive(cfg.seed, static_cast<std::uint64_t>(epoch), 0);
    shuffle_rng.shuffle(order.begin(), order.end());

    LossBreakdown sum;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<Frame> frames;
      std::vector<std::pair<int, int>> sizes_orig;
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = order[k];
        Frame f{ds.images[i], ds.records[i].gt};
        if (cfg.augment) {
          Rng rng = Rng::derive(cfg.seed, static_cast<std::uint64_t>(epoch), i + 1);
          f = augment(f, cfg.augmentation, crop_w, crop_h, rng);
        }
        sizes_orig.emplace_back(f.image.width, f.image.height);
        f.image = pad_image(f.image, kInputAlignment);
        frames.push_back(std::move(f));
      }
      std::vector<const Image*> ims;
      for (const auto& f : frames) ims.push_back(&f.image);
      const Tensor<T> x = to_tensor<T>(ims);
      const Shape& xs = x.shape();
      const GridSize ball_grid{xs.h / kBallStride, xs.w / kBallStride};
      const GridSize player_grid{xs.h / kPlayerStride, xs.w / kPlayerStride};
      std::vector<TargetAssignment> targets;
      for (std::size_t k = 0; k < frames.size(); ++k) {
        targets.push_back(build_targets(frames[k].gt, sizes_orig[k].first, sizes_orig[k].second, ball_grid, player_grid));
      }

      Tape<T> tape;
      const auto params = bind_parameters(tape, weights, true);
      const Var<T> input = tape.leaf(x, false);
      const NetworkOutputs<T> out = forward(tape, weights, params, input, Mode::kTrain);
      const LossResult<T> loss = total_loss(tape, out, targets, cfg.loss);
      auto batch_ids = [&] {
        std::string ids;
        for (std::size_t k = start; k < end; ++k) ids += (ids.empty() ? "" : ", ") + ds.records[order[k]].frame;
        return "epoch " + std::to_string(epoch) + " in batch [" + ids + "]";
      };
      if (!std::isfinite(loss.breakdown.total)) throw NumericError("non-finite loss at " + batch_ids());
      tape.backward(loss.total);

      std::vector<std::span<T>> ps;
      std::vector<std::span<const T>> gs;
      std::vector<Tensor<T>> zeros;
      zeros.reserve(idx.size());
      for (std::size_t i : idx) {
        ps.push_back(weights.params()[i].tensor.data());
        if (params[i].has_grad()) {
          gs.push_back(params[i].grad().data());
        } else {
          zeros.emplace_back(weights.params()[i].tensor.shape());
          gs.push_back(zeros.back().data());
        }
      }
      try {
        state.adam.step(ps, gs, names, lr);
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " at " + batch_ids());
      }

      sum.total += loss.breakdown.total;
      sum.ball += loss.breakdown.ball;
      sum.player += loss.breakdown.player;
      sum.bbox += loss.breakdown.bbox;
      ++batches;
    }
    EpochLog e{epoch, lr, {sum.total / batches, sum.ball / batches, sum.player / batches, sum.bbox / batches}};
    logs.push_back(e);
    state.next_epoch = epoch + 1;
    if (hooks.on_epoch) hooks.on_epoch(e);
    if (cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0 && epoch + 1 < cfg.epochs) {
      char stem[32];
      std::snprintf(stem, sizeof(stem), "epoch_%04d", epoch + 1);
      write_checkpoint(stem);
    }
  }
  write_checkpoint("final");
  return logs;
}

#define FNB_INSTANTIATE_TRAINER(T)                                                                            \
  template void save_train_state<T>(const std::filesystem::path&, const TrainState&, const NetworkWeights<T>&); \
  template TrainState load_train_state<T>(const std::filesystem::path&, const NetworkWeights<T>&);            \
  template void recalibrate_batchnorm<T>(NetworkWeights<T>&, const Dataset&, int);                           \
  template std::vector<EpochLog> train<T>(NetworkWeights<T>&, const Dataset&, const TrainConfig&, TrainState&, \
                                          const TrainHooks&);

FNB_INSTANTIATE_TRAINER(float)
FNB_INSTANTIATE_TRAINER(double)

}  // namespace fnb
