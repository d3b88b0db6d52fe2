#include "footandball/model.hpp"

#include <cmath>
#include <unordered_map>

#include "binary_io.hpp"
#include "footandball/rng.hpp"

namespace fnb {
namespace {

void add_conv(std::vector<ParamSpec>& out, const std::string& name, int in_c, int out_c, int k,
              bool batchnorm) {
  out.push_back({name + ".weight", 4, Shape{out_c, in_c, k, k}, ParamKind::kTrainable, in_c * k * k});
  out.push_back({name + ".bias", 1, Shape{1, out_c, 1, 1}, ParamKind::kTrainable, 0});
  if (!batchnorm) return;
  out.push_back({name + ".bn.gamma", 1, Shape{1, out_c, 1, 1}, ParamKind::kTrainable, 0});
  out.push_back({name + ".bn.beta", 1, Shape{1, out_c, 1, 1}, ParamKind::kTrainable, 0});
  out.push_back({name + ".bn.running_mean", 1, Shape{1, out_c, 1, 1}, ParamKind::kBuffer, 0});
  out.push_back({name + ".bn.running_var", 1, Shape{1, out_c, 1, 1}, ParamKind::kBuffer, 0});
}

}  // namespace

void ModelConfig::validate() const {
  if (input_channels <= 0) throw ConfigError("model.input_channels must be positive");
  if (lateral_channels <= 0) throw ConfigError("model.lateral_channels must be positive");
  if (head_hidden_channels <= 0) throw ConfigError("model.head_hidden_channels must be positive");
}

std::vector<ParamSpec> parameter_layout(const ModelConfig& config) {
  config.validate();
  const int lat = config.lateral_channels;
  const int hid = config.head_hidden_channels;
  std::vector<ParamSpec> l;
  add_conv(l, "conv1.0", config.input_channels, 16, 3, true);
  add_conv(l, "conv2.0", 16, 32, 3, true);
  add_conv(l, "conv2.1", 32, 32, 3, true);
  add_conv(l, "conv3.0", 32, 32, 3, true);
  add_conv(l, "conv3.1", 32, 32, 3, true);
  add_conv(l, "conv4.0", 32, 64, 3, true);
  add_conv(l, "conv4.1", 64, 64, 3, true);
  if (config.topdown_enabled) {
    add_conv(l, "conv5.0", 64, 64, 3, true);
    add_conv(l, "conv5.1", 64, lat, 3, true);
  }
  add_conv(l, "lateral.stride4", 32, lat, 1, false);
  if (config.topdown_enabled) add_conv(l, "lateral.stride8", 32, lat, 1, false);
  add_conv(l, "lateral.stride16", 64, lat, 1, false);
  add_conv(l, "ball.hidden", lat, hid, 3, true);
  add_conv(l, "ball.out", hid, 1, 3, false);
  add_conv(l, "player.hidden", lat, hid, 3, true);
  add_conv(l, "player.out", hid, 1, 3, false);
  add_conv(l, "bbox.hidden", lat, hid, 3, true);
  add_conv(l, "bbox.out", hid, 4, 3, false);
  return l;
}

std::size_t count_trainable(const ModelConfig& config) {
  std::size_t total = 0;
  for (const auto& p : parameter_layout(config)) {
    if (p.kind == ParamKind::kTrainable) total += p.shape.numel();
  }
  return total;
}

template <typename T>
NetworkWeights<T>::NetworkWeights(ModelConfig config, std::vector<NamedTensor<T>> params)
    : config_(config), params_(std::move(params)) {}

template <typename T>
std::size_t NetworkWeights<T>::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return i;
  }
  throw ConfigError("unknown parameter '" + std::string(name) + "'");
}

template <typename T>
std::size_t NetworkWeights<T>::trainable_count() const {
  std::size_t total = 0;
  for (const auto& p : params_) {
    if (p.kind == ParamKind::kTrainable) total += p.tensor.numel();
  }
  return total;
}

template <typename T>
bool NetworkWeights<T>::operator==(const NetworkWeights& other) const {
  if (!(config_ == other.config_) || params_.size() != other.params_.size()) return false;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& a = params_[i];
    const auto& b = other.params_[i];
    if (a.name != b.name || a.rank != b.rank || a.kind != b.kind ||
        a.tensor.shape() != b.tensor.shape() || a.tensor.vec() != b.tensor.vec()) {
      return false;
    }
  }
  return true;
}

template <typename T>
NetworkWeights<T> build_network(const ModelConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<NamedTensor<T>> params;
  for (const auto& spec : parameter_layout(config)) {
    Tensor<T> t(spec.shape);
    const std::string_view name = spec.name;
    if (name.ends_with(".weight")) {
      const double stddev = std::sqrt(2.0 / spec.fan_in);
      for (auto& v : t.data()) v = static_cast<T>(rng.normal() * stddev);
    } else if (name.ends_with(".gamma") || name.ends_with(".running_var")) {
      t.fill(T(1));
    }
    params.push_back({spec.name, spec.rank, spec.kind, std::move(t)});
  }
  return NetworkWeights<T>(config, std::move(params));
}

void check_input_shape(const Shape& input, const ModelConfig& config) {
  if (input.c != config.input_channels) {
    throw ShapeError("input " + input.str() + " has " + std::to_string(input.c) +
                     " channels, model expects " + std::to_string(config.input_channels));
  }
  if (input.h <= 0 || input.w <= 0 || input.h % kInputAlignment != 0 || input.w % kInputAlignment != 0) {
    throw ShapeError("input " + input.str() + ": height and width must be positive multiples of " +
                     std::to_string(kInputAlignment) + "; pad the image before inference");
  }
}

template <typename T>
std::vector<Var<T>> bind_parameters(Tape<T>& tape, const NetworkWeights<T>& weights, bool requires_grad) {
  std::vector<Var<T>> vars;
  vars.reserve(weights.params().size());
  for (const auto& p : weights.params()) {
    vars.push_back(tape.leaf(p.tensor, requires_grad && p.kind == ParamKind::kTrainable));
  }
  return vars;
}

namespace {

template <typename T>
class ForwardContext {
 public:
  ForwardContext(Tape<T>& tape, NetworkWeights<T>& weights, const std::vector<Var<T>>& params, Mode mode,
                 const kernels::BatchNormOptions& bn)
      : tape_(tape), weights_(weights), params_(params), mode_(mode), bn_(bn) {
    if (params.size() != weights.params().size()) {
      throw ShapeError("forward: " + std::to_string(params.size()) + " parameter bindings for " +
                       std::to_string(weights.params().size()) + " parameters");
    }
    for (std::size_t i = 0; i < weights.params().size(); ++i) index_[weights.params()[i].name] = i;
  }

  Var<T> conv(const std::string& name, const Var<T>& x) {
    return ops::conv2d(tape_, x, param(name + ".weight"), param(name + ".bias"));
  }

  Var<T> conv_bn_relu(const std::string& name, const Var<T>& x) {
    const Var<T> y = conv(name, x);
    auto& mean = weights_.params()[slot(name + ".bn.running_mean")].tensor;
    auto& var = weights_.params()[slot(name + ".bn.running_var")].tensor;
    return ops::batchnorm_relu(tape_, y, param(name + ".bn.gamma"), param(name + ".bn.beta"),
                               mean.data(), var.data(), mode_, bn_);
  }

  Tape<T>& tape() { return tape_; }

 private:
  std::size_t slot(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("network weights lack parameter '" + name + "'");
    return it->second;
  }
  const Var<T>& param(const std::string& name) const { return params_[slot(name)]; }

  Tape<T>& tape_;
  NetworkWeights<T>& weights_;
  const std::vector<Var<T>>& params_;
  Mode mode_;
  kernels::BatchNormOptions bn_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace

template <typename T>
NetworkOutputs<T> forward(Tape<T>& tape, NetworkWeights<T>& weights, const std::vector<Var<T>>& params,
                          const Var<T>& input, Mode mode, const kernels::BatchNormOptions& bn) {
  const ModelConfig& cfg = weights.config();
  check_input_shape(input.shape(), cfg);
  ForwardContext<T> ctx(tape, weights, params, mode, bn);

  const Var<T> c1 = ops::maxpool2x2(tape, ctx.conv_bn_relu("conv1.0", input));
  const Var<T> c2 = ops::maxpool2x2(tape, ctx.conv_bn_relu("conv2.1", ctx.conv_bn_relu("conv2.0", c1)));
  const Var<T> c3 = ops::maxpool2x2(tape, ctx.conv_bn_relu("conv3.1", ctx.conv_bn_relu("conv3.0", c2)));
  const Var<T> c4 = ops::maxpool2x2(tape, ctx.conv_bn_relu("conv4.1", ctx.conv_bn_relu("conv4.0", c3)));

  Var<T> p4, p16;
  if (cfg.topdown_enabled) {
    const Var<T> c5 =
        ops::maxpool2x2(tape, ctx.conv_bn_relu("conv5.1", ctx.conv_bn_relu("conv5.0", c4)));
    p16 = ops::add(tape, ops::upsample2x(tape, c5), ctx.conv("lateral.stride16", c4));
    const Var<T> p8 = ops::add(tape, ops::upsample2x(tape, p16), ctx.conv("lateral.stride8", c3));
    p4 = ops::add(tape, ops::upsample2x(tape, p8), ctx.conv("lateral.stride4", c2));
  } else {
    p16 = ctx.conv("lateral.stride16", c4);
    p4 = ctx.conv("lateral.stride4", c2);
  }

  NetworkOutputs<T> out;
  out.ball_logits = ctx.conv("ball.out", ctx.conv_bn_relu("ball.hidden", p4));
  out.player_logits = ctx.conv("player.out", ctx.conv_bn_relu("player.hidden", p16));
  out.bbox = ctx.conv("bbox.out", ctx.conv_bn_relu("bbox.hidden", p16));
  out.ball_map = ops::sigmoid(tape, out.ball_logits);
  out.player_map = ops::sigmoid(tape, out.player_logits);
  return out;
}

template <typename T>
NetworkOutputs<T> infer(NetworkWeights<T>& weights, const Tensor<T>& input) {
  Tape<T> tape(false);
  const auto params = bind_parameters(tape, weights, false);
  return forward(tape, weights, params, tape.leaf(input), Mode::kEval);
}

// ---------------------------------------------------------------------------
// Weight file format.

namespace {

constexpr char kWeightMagic[4] = {'F', 'N', 'B', 'W'};

void write_config(detail::ByteWriter& w, const ModelConfig& c) {
  w.u32(static_cast<std::uint32_t>(c.input_channels));
  w.u32(static_cast<std::uint32_t>(c.lateral_channels));
  w.u32(static_cast<std::uint32_t>(c.head_hidden_channels));
  w.u32(c.topdown_enabled ? 1u : 0u);
}

}  // namespace

std::uint64_t config_digest(const ModelConfig& config) {
  detail::ByteWriter w;
  write_config(w, config);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : w.bytes()) h = (h ^ b) * 0x100000001b3ULL;
  return h;
}

template <typename T>
std::vector<std::uint8_t> serialize_weights(const NetworkWeights<T>& weights) {
  detail::ByteWriter w;
  w.raw(kWeightMagic, 4);
  w.u32(kWeightFormatVersion);
  write_config(w, weights.config());
  w.u64(config_digest(weights.config()));
  w.u32(static_cast<std::uint32_t>(weights.params().size()));
  for (const auto& p : weights.params()) {
    w.str(p.name);
    w.u32(static_cast<std::uint32_t>(p.rank));
    const Shape& s = p.tensor.shape();
    if (p.rank == 1) {
      w.u32(static_cast<std::uint32_t>(s.c));
    } else {
      for (int d : {s.n, s.c, s.h, s.w}) w.u32(static_cast<std::uint32_t>(d));
    }
    for (T v : p.tensor.data()) w.f32(static_cast<float>(v));
  }
  return std::move(w.bytes());
}

template <typename T>
std::size_t save_weights(const NetworkWeights<T>& weights, const std::filesystem::path& path) {
  const auto bytes = serialize_weights(weights);
  detail::write_file_bytes(path, bytes);
  return bytes.size();
}

template <typename T>
NetworkWeights<T> deserialize_weights(const std::vector<std::uint8_t>& bytes) {
  detail::ByteReader r(bytes);
  r.expect_magic(kWeightMagic, "FootAndBall weight");
  const std::uint32_t version = r.u32("format version");
  if (version != kWeightFormatVersion) {
    throw FormatError("unsupported format version " + std::to_string(version) + " (expected " +
                      std::to_string(kWeightFormatVersion) + ")");
  }
  ModelConfig cfg;
  cfg.input_channels = static_cast<int>(r.u32("config.input_channels"));
  cfg.lateral_channels = static_cast<int>(r.u32("config.lateral_channels"));
  cfg.head_hidden_channels = static_cast<int>(r.u32("config.head_hidden_channels"));
  const std::uint32_t topdown = r.u32("config.topdown_enabled");
  if (topdown > 1) throw FormatError("config.topdown_enabled must be 0 or 1");
  cfg.topdown_enabled = topdown == 1;
  const std::uint64_t digest = r.u64("config digest");
  if (digest != config_digest(cfg)) throw FormatError("config digest does not match the config block");
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("invalid config in header: ") + e.what());
  }

  const auto layout = parameter_layout(cfg);
  const std::uint32_t count = r.u32("tensor count");
  if (count != layout.size()) {
    throw FormatError("tensor count " + std::to_string(count) + " does not match config (expected " +
                      std::to_string(layout.size()) + ")");
  }
  std::vector<NamedTensor<T>> params;
  params.reserve(count);
  for (const auto& spec : layout) {
    const std::string name = r.str("tensor name");
    if (name != spec.name) {
      throw FormatError("tensor '" + name + "' found where '" + spec.name + "' was expected");
    }
    const std::uint32_t rank = r.u32(name + " rank");
    if (rank != static_cast<std::uint32_t>(spec.rank)) {
      throw FormatError("tensor '" + name + "' has rank " + std::to_string(rank) + ", expected " +
                        std::to_string(spec.rank));
    }
    Shape shape{1, 1, 1, 1};
    if (rank == 1) {
      shape.c = static_cast<int>(r.u32(name + " dims"));
    } else {
      shape.n = static_cast<int>(r.u32(name + " dims"));
      shape.c = static_cast<int>(r.u32(name + " dims"));
      shape.h = static_cast<int>(r.u32(name + " dims"));
      shape.w = static_cast<int>(r.u32(name + " dims"));
    }
    if (shape != spec.shape) {
      throw FormatError("tensor '" + name + "' has dims " + shape.str() + ", expected " + spec.shape.str());
    }
    typename Tensor<T>::Storage data(shape.numel());
    for (auto& v : data) v = static_cast<T>(r.f32(name + " data"));
    params.push_back({spec.name, spec.rank, spec.kind, Tensor<T>(shape, std::move(data))});
  }
  if (!r.at_end()) throw FormatError(std::to_string(r.remaining()) + " trailing bytes after last tensor");
  return NetworkWeights<T>(cfg, std::move(params));
}

template <typename T>
NetworkWeights<T> load_weights(const std::filesystem::path& path) {
  const auto bytes = detail::read_file_bytes(path);
  try {
    return deserialize_weights<T>(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

#define FNB_INSTANTIATE_MODEL(T)                                                                  \
  template class NetworkWeights<T>;                                                               \
  template NetworkWeights<T> build_network<T>(const ModelConfig&, std::uint64_t);                \
  template std::vector<Var<T>> bind_parameters<T>(Tape<T>&, const NetworkWeights<T>&, bool);    \
  template NetworkOutputs<T> forward<T>(Tape<T>&, NetworkWeights<T>&, const std::vector<Var<T>>&, \
                                        const Var<T>&, Mode, const kernels::BatchNormOptions&); \
  template NetworkOutputs<T> infer<T>(NetworkWeights<T>&, const Tensor<T>&);                      \
  template std::vector<std::uint8_t> serialize_weights<T>(const NetworkWeights<T>&);              \
  template std::size_t save_weights<T>(const NetworkWeights<T>&, const std::filesystem::path&);  \
  template NetworkWeights<T> deserialize_weights<T>(const std::vector<std::uint8_t>&);           \
  template NetworkWeights<T> load_weights<T>(const std::filesystem::path&);

FNB_INSTANTIATE_MODEL(float)
FNB_INSTANTIATE_MODEL(double)

}  // namespace fnb
